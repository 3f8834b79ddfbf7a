"""Return models: evaluation, subset restriction, shifts, curvature."""

from __future__ import annotations

import numpy as np
import pytest

from conftest import make_catalog
from sdp.core import Portfolio
from sdp.errors import ConfigurationError
from sdp.returns import (
    EvaluationCache,
    ReturnModel,
    ShiftOperator,
    apply_shift,
    evaluate_return,
    evaluate_subset_return,
    perturb_scores,
)

CAT2 = make_catalog([0.1, 0.1])


def linear2(m0=0.5, m1=0.9, baseline=0.0) -> ReturnModel:
    return ReturnModel(kind="linear", baseline=baseline,
                       parameters={"c0": {"m": m0}, "c1": {"m": m1}})


class TestEvaluate:
    def test_vertex(self):
        assert evaluate_return(linear2(), Portfolio((1.0, 0.0)), CAT2) == pytest.approx(0.5)

    def test_interior_hand_value(self):
        assert evaluate_return(linear2(), Portfolio((0.5, 0.5)), CAT2) == pytest.approx(0.7)

    def test_log_saturating_zero_curvature_is_baseline(self):
        model = ReturnModel(
            kind="log-saturating", baseline=0.3,
            parameters={"c0": {"a": 1.0, "b": 0.0}, "c1": {"a": 1.0, "b": 0.0}},
        )
        for w in ((1.0, 0.0), (0.25, 0.75)):
            assert evaluate_return(model, Portfolio(w), CAT2) == pytest.approx(0.3)

    def test_missing_coefficient_with_positive_weight(self):
        model = ReturnModel(kind="linear", parameters={"c0": {"m": 0.5}})
        with pytest.raises(ConfigurationError, match="c1"):
            evaluate_return(model, Portfolio((0.5, 0.5)), CAT2)
        # zero weight on the uncovered category is fine
        assert evaluate_return(model, Portfolio((1.0, 0.0)), CAT2) == pytest.approx(0.5)

    def test_linear_model_is_affine(self):
        rng = np.random.default_rng(7)
        catalog = make_catalog([0.1] * 4)
        model = ReturnModel(
            kind="linear",
            parameters={f"c{i}": {"m": float(rng.normal())} for i in range(4)},
            baseline=0.2,
        )
        for _ in range(20):
            w, v = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
            lam = rng.uniform()
            mid = lam * w + (1 - lam) * v
            lhs = evaluate_return(model, Portfolio(tuple(mid)), catalog)
            rhs = lam * evaluate_return(model, Portfolio(tuple(w)), catalog) + (
                1 - lam
            ) * evaluate_return(model, Portfolio(tuple(v)), catalog)
            assert lhs == pytest.approx(rhs, abs=1e-12)

    @pytest.mark.parametrize("kind", ["log-saturating", "quadratic-interaction"])
    def test_midpoint_concavity(self, kind):
        rng = np.random.default_rng(9)
        catalog = make_catalog([0.1] * 3)
        if kind == "log-saturating":
            model = ReturnModel(
                kind=kind,
                parameters={f"c{i}": {"a": 1.0 + i, "b": 2.0 + i} for i in range(3)},
            )
        else:
            model = ReturnModel(
                kind=kind,
                parameters={f"c{i}": {"m": 0.5 + 0.1 * i} for i in range(3)},
                interaction={
                    "c0": {"c0": 0.2, "c1": 0.05},
                    "c1": {"c0": 0.05, "c1": 0.15},
                    "c2": {"c2": 0.1},
                },
            )
        for _ in range(30):
            w, v = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
            mid = (w + v) / 2
            lhs = evaluate_return(model, Portfolio(tuple(mid)), catalog)
            rhs = 0.5 * (
                evaluate_return(model, Portfolio(tuple(w)), catalog)
                + evaluate_return(model, Portfolio(tuple(v)), catalog)
            )
            assert lhs >= rhs - 1e-9

    def test_non_psd_interaction_rejected(self):
        with pytest.raises(ConfigurationError, match="positive semidefinite"):
            ReturnModel(
                kind="quadratic-interaction",
                parameters={"c0": {"m": 0.5}, "c1": {"m": 0.5}},
                interaction={"c0": {"c0": -0.5}, "c1": {"c1": 0.1}},
            )

    def test_asymmetric_interaction_rejected(self):
        with pytest.raises(ConfigurationError, match="symmetric"):
            ReturnModel(
                kind="quadratic-interaction",
                parameters={},
                interaction={"c0": {"c0": 0.1, "c1": 0.3}, "c1": {"c1": 0.1}},
            )


class TestSubsetReturn:
    def test_full_set_equals_plain_evaluation(self):
        base = Portfolio((0.5, 0.5))
        assert evaluate_subset_return(linear2(), {"c0", "c1"}, base, CAT2) == pytest.approx(
            evaluate_return(linear2(), base, CAT2)
        )

    def test_empty_set_is_baseline(self):
        assert evaluate_subset_return(linear2(baseline=0.4), set(), Portfolio((0.5, 0.5)),
                                      CAT2) == pytest.approx(0.4)

    def test_singleton_renormalizes(self):
        assert evaluate_subset_return(
            linear2(), {"c1"}, Portfolio((0.5, 0.5)), CAT2
        ) == pytest.approx(0.9)

    def test_zero_mass_subset_is_baseline(self):
        assert evaluate_subset_return(
            linear2(baseline=0.25), {"c1"}, Portfolio((1.0, 0.0)), CAT2
        ) == pytest.approx(0.25)

    def test_unknown_id_rejected(self):
        with pytest.raises(ConfigurationError):
            evaluate_subset_return(linear2(), {"ghost"}, Portfolio((0.5, 0.5)), CAT2)


class TestShifts:
    def test_null_coefficient_shift_is_identity(self):
        shift = ShiftOperator(id="null", kind="coefficient-perturbation",
                              params={"deltas": {}})
        p = Portfolio((0.3, 0.7))
        assert apply_shift(linear2(), p, shift, CAT2) == pytest.approx(
            evaluate_return(linear2(), p, CAT2), abs=1e-12
        )

    def test_coefficient_perturbation_hand_value(self):
        shift = ShiftOperator(id="drift", kind="coefficient-perturbation",
                              params={"deltas": {"c0": {"m": -0.1}}})
        assert apply_shift(linear2(), Portfolio((1.0, 0.0)), shift, CAT2) == pytest.approx(0.4)

    def test_weight_reallocation_hand_value(self):
        shift = ShiftOperator(id="geo", kind="weight-reallocation",
                              params={"source": "c1", "target": "c0", "amount": 0.1})
        assert apply_shift(linear2(), Portfolio((0.5, 0.5)), shift, CAT2) == pytest.approx(0.66)

    def test_reallocation_clamped_at_available_weight(self):
        shift = ShiftOperator(id="geo", kind="weight-reallocation",
                              params={"source": "c1", "target": "c0", "amount": 5.0})
        assert apply_shift(linear2(), Portfolio((0.5, 0.5)), shift, CAT2) == pytest.approx(0.5)

    def test_score_perturbation_does_not_move_returns(self):
        shift = ShiftOperator(id="scores", kind="score-perturbation",
                              params={"deltas": {"c0": {"fairness": 0.5}}})
        p = Portfolio((0.5, 0.5))
        assert apply_shift(linear2(), p, shift, CAT2) == pytest.approx(
            evaluate_return(linear2(), p, CAT2), abs=1e-15
        )

    def test_score_perturbation_clips_to_unit_interval(self):
        shifted, clipped = perturb_scores(CAT2, {"c0": {"fairness": 5.0}})
        assert clipped
        assert shifted.categories[0].fairness_score == 1.0


class TestExternalModel:
    def test_external_evaluations_memoized(self):
        calls = []

        def evaluator(w, catalog):
            calls.append(tuple(w))
            return float(w[0] * 0.4)

        model = ReturnModel(kind="external", evaluator=evaluator)
        p = Portfolio((0.25, 0.75))
        first = evaluate_return(model, p, CAT2)
        second = evaluate_return(model, p, CAT2)
        assert first == second
        assert len(calls) == 1

    def test_cache_quantization_key(self):
        key_a = EvaluationCache.key((0.1, 0.9))
        key_b = EvaluationCache.key((0.1 + 1e-12, 0.9 - 1e-12))
        assert key_a == key_b

    def test_cache_eviction_cap(self):
        cache = EvaluationCache(max_entries=3)
        for i in range(5):
            cache.put((i,), float(i))
        assert len(cache) == 3
        assert cache.get((0,)) is None
        assert cache.get((4,)) == 4.0
