"""Attribution: axioms, the permutation oracle, and estimator quality."""

from __future__ import annotations

import numpy as np
import pytest

from _oracles import shapley_by_permutations
from conftest import make_catalog
from sdp.attribution import shapley_exact, shapley_montecarlo
from sdp.core import PolicyParameters, Portfolio
from sdp.errors import ConfigurationError
from sdp.frontier import SamplerConfig, build_frontier
from sdp.optimizer import optimize_exact
from sdp.returns import ReturnModel, evaluate_subset_return

THIRDS = PolicyParameters(1 / 3, 1 / 3, 1 / 3)


class TestExact:
    def test_additive_game_recovers_coefficients(self):
        # External evaluator with genuine subset-sum semantics: the worth of
        # a coalition is the sum of member slopes (independent of weights).
        catalog = make_catalog([0.1] * 4)
        ms = {"c0": 0.4, "c1": 0.1, "c2": -0.2, "c3": 0.25}

        def subset_sum(w, cat):
            return sum(ms[cid] for cid, wi in zip(cat.ids, w) if wi > 0)

        model = ReturnModel(kind="external", evaluator=subset_sum)
        base = Portfolio((0.25, 0.25, 0.25, 0.25), "test")
        result = shapley_exact(model, base, catalog)
        for cid, m in ms.items():
            assert result.phi[cid] == pytest.approx(m, abs=1e-12)

    def test_symmetry_identical_categories(self):
        catalog = make_catalog([0.1, 0.1, 0.4])
        model = ReturnModel(
            kind="log-saturating",
            parameters={"c0": {"a": 1.0, "b": 3.0}, "c1": {"a": 1.0, "b": 3.0},
                        "c2": {"a": 0.5, "b": 1.0}},
        )
        base = Portfolio((0.25, 0.25, 0.5), "test")
        result = shapley_exact(model, base, catalog)
        assert result.phi["c0"] == pytest.approx(result.phi["c1"], abs=1e-12)

    def test_null_player_gets_zero(self):
        catalog = make_catalog([0.1, 0.1, 0.1])
        model = ReturnModel(
            kind="linear",
            parameters={"c0": {"m": 0.5}, "c1": {"m": 0.9}, "c2": {"m": 0.7}},
        )
        # c2 carries zero base weight: its presence never changes any
        # restricted-renormalized mixture.
        base = Portfolio((0.4, 0.6, 0.0), "test")
        result = shapley_exact(model, base, catalog)
        assert result.phi["c2"] == 0.0

    def test_efficiency_exact(self):
        catalog = make_catalog([0.1] * 5)
        model = ReturnModel(
            kind="log-saturating",
            parameters={f"c{i}": {"a": 0.5 + 0.2 * i, "b": 1.0 + i} for i in range(5)},
            baseline=0.2,
        )
        base = Portfolio((0.1, 0.2, 0.3, 0.25, 0.15), "test")
        result = shapley_exact(model, base, catalog)
        assert sum(result.phi.values()) == pytest.approx(
            result.grand_value - result.baseline_value, abs=1e-12
        )

    def test_matches_six_ordering_oracle_on_three_categories(self):
        catalog = make_catalog([0.1, 0.1, 0.1])
        model = ReturnModel(
            kind="log-saturating",
            parameters={"c0": {"a": 1.0, "b": 2.0}, "c1": {"a": 0.7, "b": 4.0},
                        "c2": {"a": 0.3, "b": 8.0}},
            baseline=0.1,
        )
        base = Portfolio((0.5, 0.3, 0.2), "test")
        worth = {}
        ids = catalog.ids
        for mask in range(8):
            members = frozenset(i for i in range(3) if mask >> i & 1)
            worth[members] = evaluate_subset_return(
                model, {ids[i] for i in members}, base, catalog
            )
        oracle = shapley_by_permutations(worth, 3)
        result = shapley_exact(model, base, catalog)
        for i, cid in enumerate(ids):
            assert result.phi[cid] == pytest.approx(oracle[i], abs=1e-12)

    def test_category_count_cap(self):
        catalog = make_catalog([0.1] * 21)
        model = ReturnModel(
            kind="linear", parameters={f"c{i}": {"m": 0.1} for i in range(21)}
        )
        with pytest.raises(ConfigurationError, match="Monte Carlo"):
            shapley_exact(model, Portfolio(tuple([1 / 21] * 21), "test"), catalog)


class TestMonteCarlo:
    def fixture6(self):
        catalog = make_catalog([0.1] * 6)
        model = ReturnModel(
            kind="log-saturating",
            parameters={f"c{i}": {"a": 0.4 + 0.15 * i, "b": 1.5 + 0.5 * i}
                        for i in range(6)},
        )
        base = Portfolio((0.3, 0.25, 0.2, 0.1, 0.1, 0.05), "test")
        return catalog, model, base

    def test_zero_variance_game_recovers_exactly(self):
        catalog = make_catalog([0.1] * 3)
        ms = {"c0": 0.4, "c1": 0.1, "c2": 0.3}

        def subset_sum(w, cat):
            return sum(ms[cid] for cid, wi in zip(cat.ids, w) if wi > 0)

        model = ReturnModel(kind="external", evaluator=subset_sum)
        base = Portfolio((1 / 3, 1 / 3, 1 / 3), "test")
        result = shapley_montecarlo(model, base, catalog, permutations=100, seed=5)
        for cid, m in ms.items():
            assert result.phi[cid] == pytest.approx(m, abs=1e-12)
            assert result.stderr[cid] == pytest.approx(0.0, abs=1e-8)

    def test_within_three_stderr_of_exact(self):
        catalog, model, base = self.fixture6()
        exact = shapley_exact(model, base, catalog)
        mc = shapley_montecarlo(model, base, catalog, permutations=2_000, seed=31)
        for cid in catalog.ids:
            band = 3 * mc.stderr[cid] + 1e-12
            assert abs(mc.phi[cid] - exact.phi[cid]) <= band

    def test_seed_determinism(self):
        catalog, model, base = self.fixture6()
        a = shapley_montecarlo(model, base, catalog, permutations=200, seed=8)
        b = shapley_montecarlo(model, base, catalog, permutations=200, seed=8)
        assert a == b

    def test_minimum_permutations_enforced(self):
        catalog, model, base = self.fixture6()
        with pytest.raises(ConfigurationError):
            shapley_montecarlo(model, base, catalog, permutations=50, seed=1)

    def test_unbiased_across_seeds(self):
        catalog, model, base = self.fixture6()
        exact = shapley_exact(model, base, catalog)
        estimates = {cid: [] for cid in catalog.ids}
        stderrs = {cid: [] for cid in catalog.ids}
        for seed in range(50):
            mc = shapley_montecarlo(model, base, catalog, permutations=200, seed=seed)
            for cid in catalog.ids:
                estimates[cid].append(mc.phi[cid])
                stderrs[cid].append(mc.stderr[cid])
        for cid in catalog.ids:
            mean = float(np.mean(estimates[cid]))
            pooled = float(np.mean(stderrs[cid])) / np.sqrt(50)
            assert abs(mean - exact.phi[cid]) <= 2 * pooled + 1e-9

    def test_efficiency_within_aggregate_band(self):
        catalog, model, base = self.fixture6()
        mc = shapley_montecarlo(model, base, catalog, permutations=500, seed=2)
        total = sum(mc.phi.values())
        agg_stderr = float(np.sqrt(sum(s**2 for s in mc.stderr.values())))
        assert abs(total - (mc.grand_value - mc.baseline_value)) <= 3 * agg_stderr + 1e-9


class TestNoFeedback:
    def test_frontier_and_optimum_unchanged_by_attribution(self, device_finance):
        cfg = SamplerConfig(method="dirichlet", seed=13, count=80)
        args = (device_finance.constraints, device_finance.catalog,
                device_finance.policy, device_finance.model, cfg)
        before_frontier = build_frontier(*args)
        before_opt = optimize_exact(
            device_finance.model, device_finance.constraints,
            device_finance.catalog, device_finance.policy,
        )
        shapley_exact(device_finance.model, before_opt.portfolio, device_finance.catalog)
        shapley_montecarlo(device_finance.model, before_opt.portfolio,
                           device_finance.catalog, permutations=300, seed=1)
        after_frontier = build_frontier(*args)
        after_opt = optimize_exact(
            device_finance.model, device_finance.constraints,
            device_finance.catalog, device_finance.policy,
        )
        assert before_frontier == after_frontier
        assert before_opt == after_opt
