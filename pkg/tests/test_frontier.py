"""Frontier: sampling, domination filtering, hull fitting, determinism."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import brute_force_pareto
from conftest import make_catalog
from sdp.core import Band, ConstraintSet, Portfolio, check_constraints
from sdp.errors import ConfigurationError
from sdp.frontier import (
    CandidatePoint,
    SamplerConfig,
    build_frontier,
    fit_upper_envelope,
    hull_value,
    pareto_filter,
    sample_candidates,
)
from sdp.returns import ReturnModel


def pts(*pairs):
    return [
        CandidatePoint(Portfolio((1.0,)), mu=mu, sigma=sigma, feasible=True)
        for sigma, mu in pairs
    ]


class TestSampling:
    def test_grid_two_categories_resolution_two(self):
        catalog = make_catalog([0.1, 0.1])
        out = sample_candidates(
            ConstraintSet(), catalog, SamplerConfig(method="grid", seed=0, resolution=2)
        )
        assert sorted(p.weights for p in out) == [(0.0, 1.0), (0.5, 0.5), (1.0, 0.0)]

    def test_grid_three_categories_resolution_two_has_six_points(self):
        catalog = make_catalog([0.1, 0.1, 0.1])
        out = sample_candidates(
            ConstraintSet(), catalog, SamplerConfig(method="grid", seed=0, resolution=2)
        )
        assert len(out) == math.comb(2 + 3 - 1, 3 - 1) == 6

    def test_grid_projection_deduplicates(self):
        catalog = make_catalog([0.1, 0.1])
        cs = ConstraintSet(bands={"c0": Band(0.0, 0.4)})
        out = sample_candidates(
            cs, catalog, SamplerConfig(method="grid", seed=0, resolution=4)
        )
        # (1,0), (.75,.25) and (.5,.5) all repair to (.4,.6)
        got = sorted(p.weights for p in out)
        assert len(got) == 3
        for actual, expected in zip(got, [(0.0, 1.0), (0.25, 0.75), (0.4, 0.6)]):
            assert actual == pytest.approx(expected, abs=1e-12)

    def test_grid_blowup_guard(self):
        catalog = make_catalog([0.1] * 10)
        with pytest.raises(ConfigurationError, match="dirichlet"):
            sample_candidates(
                ConstraintSet(), catalog,
                SamplerConfig(method="grid", seed=0, resolution=100),
            )

    def test_dirichlet_seed_determinism(self):
        catalog = make_catalog([0.1, 0.2, 0.3])
        cfg = SamplerConfig(method="dirichlet", seed=77, count=40)
        a = sample_candidates(ConstraintSet(), catalog, cfg)
        b = sample_candidates(ConstraintSet(), catalog, cfg)
        assert a == b

    def test_samples_satisfy_weight_space_constraints(self, device_finance):
        out = sample_candidates(
            device_finance.constraints, device_finance.catalog,
            SamplerConfig(method="dirichlet", seed=5, count=100),
        )
        for p in out:
            assert check_constraints(p, device_finance.constraints,
                                     device_finance.catalog) == []


class TestParetoFilter:
    def test_single_point(self):
        out = pareto_filter(pts((0.1, 0.5)))
        assert len(out) == 1

    def test_spec_triple(self):
        out = pareto_filter(pts((0.1, 0.5), (0.2, 0.6), (0.15, 0.4)))
        assert [(p.sigma, p.mu) for p in out] == [(0.1, 0.5), (0.2, 0.6)]

    def test_duplicates_keep_one_survivor(self):
        out = pareto_filter(pts((0.1, 0.5), (0.1, 0.5), (0.1, 0.5)))
        assert len(out) == 1

    def test_matches_brute_force_on_random_sets(self):
        rng = np.random.default_rng(17)
        for _ in range(30):
            m = int(rng.integers(1, 400))
            sigma = rng.uniform(0, 1, m).round(2)  # coarse rounding forces ties
            mu = rng.uniform(0, 1, m).round(2)
            points = pts(*zip(sigma, mu))
            mine = [(p.sigma, p.mu) for p in pareto_filter(points)]
            oracle = [
                (points[i].sigma, points[i].mu)
                for i in brute_force_pareto(list(zip(sigma, mu)))
            ]
            assert mine == oracle

    @given(st.lists(st.tuples(st.integers(0, 6), st.integers(0, 6)),
                    min_size=1, max_size=40))
    @settings(deadline=None)
    def test_matches_brute_force_hypothesis(self, pairs):
        points = pts(*[(s / 6, m / 6) for s, m in pairs])
        mine = [(p.sigma, p.mu) for p in pareto_filter(points)]
        oracle = [
            (points[i].sigma, points[i].mu)
            for i in brute_force_pareto([(p.sigma, p.mu) for p in points])
        ]
        assert mine == oracle


class TestHull:
    def test_two_points_are_their_own_hull(self):
        hull = fit_upper_envelope(pts((0.1, 0.5), (0.2, 0.6)))
        assert hull == [(0.1, 0.5), (0.2, 0.6)]

    def test_concave_triple_fully_retained(self):
        hull = fit_upper_envelope(pts((0.1, 0.5), (0.2, 0.6), (0.3, 0.62)))
        assert hull == [(0.1, 0.5), (0.2, 0.6), (0.3, 0.62)]

    def test_convex_middle_dropped(self):
        hull = fit_upper_envelope(pts((0.1, 0.5), (0.2, 0.52), (0.3, 0.62)))
        assert hull == [(0.1, 0.5), (0.3, 0.62)]

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            fit_upper_envelope([])

    def test_random_frontiers_slopes_and_majorization(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            m = int(rng.integers(2, 300))
            sigma = np.sort(rng.uniform(0, 1, m))
            mu = np.cumsum(rng.uniform(0, 1, m))  # strictly increasing
            pareto = pareto_filter(pts(*zip(sigma, mu)))
            hull = fit_upper_envelope(pareto)
            slopes = [
                (y1 - y0) / (x1 - x0)
                for (x0, y0), (x1, y1) in zip(hull, hull[1:])
                if x1 > x0
            ]
            assert all(a >= b - 1e-9 for a, b in zip(slopes, slopes[1:]))
            for p in pareto:
                assert p.mu <= hull_value(hull, p.sigma) + 1e-9

    def test_hull_monotone_in_candidate_set(self):
        rng = np.random.default_rng(29)
        base_pts = [(float(s), float(m)) for s, m in rng.uniform(0, 1, (60, 2))]
        extra_pts = [(float(s), float(m)) for s, m in rng.uniform(0, 1, (30, 2))]
        small_hull = fit_upper_envelope(pareto_filter(pts(*base_pts)))
        big_hull = fit_upper_envelope(pareto_filter(pts(*base_pts, *extra_pts)))
        for s in np.linspace(0, 1, 50):
            lo = hull_value(small_hull, s)
            hi = hull_value(big_hull, s)
            # Outside the small hull's sigma range the clamp rule applies,
            # so compare only where both are interpolating.
            if small_hull[0][0] <= s <= small_hull[-1][0]:
                assert hi >= lo - 1e-9


class TestBuildFrontier:
    def test_linear_two_category_hull_is_segment(self, thirds_policy):
        catalog = make_catalog([0.02, 0.10])
        model = ReturnModel(kind="linear",
                            parameters={"c0": {"m": 0.5}, "c1": {"m": 0.9}})
        result = build_frontier(
            ConstraintSet(), catalog, thirds_policy, model,
            SamplerConfig(method="grid", seed=0, resolution=50),
        )
        assert result.hull[0] == pytest.approx((0.02, 0.5))
        assert result.hull[-1] == pytest.approx((0.10, 0.9))
        # every hull vertex lies on the segment (affine image of the simplex)
        for s, m in result.hull:
            t = (s - 0.02) / 0.08
            assert m == pytest.approx(0.5 + 0.4 * t, abs=1e-9)

    def test_identical_categories_degenerate_to_a_point(self, thirds_policy):
        # Dyadic scores and weights keep every candidate's (sigma, mu)
        # bit-identical, so symmetry collapses the staircase exactly.
        catalog = make_catalog([0.25, 0.25, 0.25])
        model = ReturnModel(kind="linear",
                            parameters={f"c{i}": {"m": 0.5} for i in range(3)})
        result = build_frontier(
            ConstraintSet(), catalog, thirds_policy, model,
            SamplerConfig(method="grid", seed=0, resolution=4),
        )
        assert len(result.pareto) == 1
        assert len(result.hull) == 1

    def test_concave_model_gives_concave_multi_vertex_hull(self, thirds_policy):
        catalog = make_catalog([0.05, 0.2, 0.6])
        model = ReturnModel(
            kind="log-saturating",
            parameters={"c0": {"a": 0.3, "b": 1.0}, "c1": {"a": 0.8, "b": 3.0},
                        "c2": {"a": 1.2, "b": 5.0}},
        )
        result = build_frontier(
            ConstraintSet(), catalog, thirds_policy, model,
            SamplerConfig(method="dirichlet", seed=3, count=400),
        )
        assert len(result.hull) >= 2
        slopes = [
            (y1 - y0) / (x1 - x0)
            for (x0, y0), (x1, y1) in zip(result.hull, result.hull[1:])
        ]
        assert all(a >= b - 1e-9 for a, b in zip(slopes, slopes[1:]))

    def test_feasible_flag_tracks_risk_cap(self, thirds_policy):
        catalog = make_catalog([0.02, 0.10])
        model = ReturnModel(kind="linear",
                            parameters={"c0": {"m": 0.5}, "c1": {"m": 0.9}})
        result = build_frontier(
            ConstraintSet(risk_cap=0.06), catalog, thirds_policy, model,
            SamplerConfig(method="grid", seed=0, resolution=10),
        )
        for c in result.candidates:
            assert c.feasible == (c.sigma <= 0.06 + 1e-9)

    def test_bit_identical_across_runs_and_workers(self, device_finance):
        cfg = SamplerConfig(method="dirichlet", seed=42, count=150)
        runs = [
            build_frontier(
                device_finance.constraints, device_finance.catalog,
                device_finance.policy, device_finance.model, cfg, workers=w,
            )
            for w in (1, 1, 4)
        ]
        assert runs[0] == runs[1] == runs[2]
