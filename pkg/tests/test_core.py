"""portfolio-core: validation, constraint checks, and projection geometry."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DEVICE_FINANCE_WEIGHTS, make_catalog
from sdp.core import (
    BAND_EXCEEDED,
    Band,
    CategoryCatalog,
    ConstraintSet,
    DataCategory,
    GroupBound,
    AggregateCap,
    PolicyParameters,
    Portfolio,
    check_constraints,
    constraint_status,
    diagnose_infeasibility,
    ensure_feasible,
    project_simplex,
    project_to_feasible,
    validate_portfolio,
)
from sdp.errors import ConfigurationError, InfeasibleError
from sdp.risk import composite_risk


class TestDomainTypes:
    def test_scores_must_be_unit_interval(self):
        with pytest.raises(ConfigurationError):
            DataCategory(id="x", name="x", fairness_score=1.2,
                         provenance_score=0.1, robustness_score=0.1)

    def test_negative_risk_weight_rejected(self):
        with pytest.raises(ConfigurationError):
            DataCategory(id="x", name="x", fairness_score=0.1,
                         provenance_score=0.1, robustness_score=0.1, risk_weight=-1)

    def test_duplicate_ids_rejected(self):
        cat = DataCategory(id="x", name="x", fairness_score=0.1,
                           provenance_score=0.1, robustness_score=0.1)
        with pytest.raises(ConfigurationError, match="duplicate"):
            CategoryCatalog((cat, cat))

    def test_empty_catalog_rejected(self):
        with pytest.raises(ConfigurationError):
            CategoryCatalog(())

    def test_policy_needs_positive_parameter(self):
        with pytest.raises(ConfigurationError):
            PolicyParameters(0, 0, 0)
        with pytest.raises(ConfigurationError):
            PolicyParameters(-0.1, 0.5, 0.5)

    def test_band_ordering_enforced(self):
        with pytest.raises(ConfigurationError):
            Band(0.5, 0.2)
        with pytest.raises(ConfigurationError):
            Band(-0.1, 0.2)

    def test_band_lower_sum_over_one_flagged_at_load(self):
        with pytest.raises(ConfigurationError, match="feasible region is empty"):
            ConstraintSet(bands={"a": Band(0.6, 0.9), "b": Band(0.6, 0.9)})

    def test_prohibited_with_positive_lower_is_inconsistent(self):
        catalog = make_catalog([0.1, 0.1])
        cs = ConstraintSet(prohibited={"c0"}, bands={"c0": Band(0.2, 0.5)})
        with pytest.raises(ConfigurationError, match="prohibited"):
            cs.validate_against(catalog)


class TestValidatePortfolio:
    def test_uniform_split_is_valid(self):
        catalog = make_catalog([0.1, 0.1])
        assert validate_portfolio(Portfolio((0.5, 0.5)), catalog) == []

    def test_device_finance_weights_valid(self, device_finance):
        p = Portfolio(DEVICE_FINANCE_WEIGHTS, device_finance.catalog.version)
        assert validate_portfolio(p, device_finance.catalog) == []

    def test_sum_violation_reported(self):
        catalog = make_catalog([0.1, 0.1])
        issues = validate_portfolio(Portfolio((0.6, 0.6)), catalog)
        assert [v.code for v in issues] == ["WEIGHT_SUM"]
        assert issues[0].observed == pytest.approx(1.2)

    def test_length_mismatch(self):
        catalog = make_catalog([0.1, 0.1, 0.1])
        issues = validate_portfolio(Portfolio((0.5, 0.5)), catalog)
        assert [v.code for v in issues] == ["LENGTH_MISMATCH"]

    def test_negative_weight(self):
        catalog = make_catalog([0.1, 0.1])
        issues = validate_portfolio(Portfolio((-0.2, 1.2)), catalog)
        assert "NEGATIVE_WEIGHT" in {v.code for v in issues}

    @given(st.lists(st.floats(min_value=0.01, max_value=10.0), min_size=2, max_size=8))
    @settings(deadline=None)
    def test_accepts_exactly_the_simplex(self, raw):
        catalog = make_catalog([0.1] * len(raw))
        w = np.asarray(raw) / np.sum(raw)
        assert validate_portfolio(Portfolio(tuple(w)), catalog) == []
        bumped = w.copy()
        bumped[0] += 5e-6
        issues = validate_portfolio(Portfolio(tuple(bumped)), catalog)
        assert any(v.code == "WEIGHT_SUM" for v in issues)


class TestCheckConstraints:
    def test_empty_constraint_set_always_feasible(self):
        catalog = make_catalog([0.1, 0.4])
        assert check_constraints(Portfolio((0.3, 0.7)), ConstraintSet(), catalog) == []

    def test_device_finance_filed_portfolio_feasible(
        self, device_finance, device_finance_portfolio
    ):
        summary = composite_risk(
            device_finance_portfolio, device_finance.catalog, device_finance.policy
        )
        violations = check_constraints(
            device_finance_portfolio, device_finance.constraints,
            device_finance.catalog, summary,
        )
        assert violations == []

    def test_raised_behavioral_weight_violates_band(self, device_finance):
        # Move 0.07 from the low-risk anchor into the capped category.
        p = Portfolio((0.33, 0.25, 0.15, 0.15, 0.12), device_finance.catalog.version)
        summary = composite_risk(p, device_finance.catalog, device_finance.policy)
        violations = check_constraints(
            p, device_finance.constraints, device_finance.catalog, summary
        )
        assert len(violations) == 1
        assert violations[0].code == BAND_EXCEEDED
        assert violations[0].constraint_id == "band:behavioral_traces"
        assert violations[0].observed == pytest.approx(0.12)
        assert violations[0].bound == pytest.approx(0.10)

    def test_personalization_band_binds_at_cap(
        self, personalization, personalization_portfolio
    ):
        rows = constraint_status(
            personalization_portfolio, personalization.constraints,
            personalization.catalog,
        )
        by_id = {r.constraint_id: r for r in rows if r.code == BAND_EXCEEDED}
        assert by_id["band:behavioral_traces"].status == "binding"
        assert by_id["band:behavioral_traces"].observed == pytest.approx(0.15)

    def test_unknown_category_in_constraints_is_config_error(self):
        catalog = make_catalog([0.1, 0.1])
        cs = ConstraintSet(bands={"ghost": Band(0.0, 0.5)})
        with pytest.raises(ConfigurationError, match="ghost"):
            check_constraints(Portfolio((0.5, 0.5)), cs, catalog)

    def test_group_and_concentration_checks(self):
        catalog = make_catalog(
            [0.1, 0.1, 0.1],
            groups={0: ("stable",), 1: ("stable",)},
            suppliers={1: "vendor", 2: "vendor"},
        )
        cs = ConstraintSet(
            group_bounds=(GroupBound("stable", lower=0.5),),
            concentration_limits={"vendor": 0.4},
        )
        violations = check_constraints(Portfolio((0.2, 0.2, 0.6)), cs, catalog)
        codes = {v.code for v in violations}
        assert codes == {"GROUP_BELOW", "CONCENTRATION_LIMIT"}

    def test_monotone_in_caps(self, thirds_policy):
        # Loosening any bound never adds a violation.
        rng = np.random.default_rng(5)
        catalog = make_catalog([0.2, 0.4, 0.6], risk_weights={0: 0.5, 1: 1.0, 2: 2.0})
        for _ in range(25):
            w = rng.dirichlet(np.ones(3))
            p = Portfolio(tuple(w))
            base_band = rng.uniform(0.1, 0.9)
            cs_tight = ConstraintSet(
                bands={"c1": Band(0.0, base_band)},
                risk_cap=rng.uniform(0.1, 0.5),
                drwa_budget=rng.uniform(0.3, 1.5),
            )
            cs_loose = ConstraintSet(
                bands={"c1": Band(0.0, min(1.0, base_band + 0.1))},
                risk_cap=cs_tight.risk_cap + 0.1,
                drwa_budget=cs_tight.drwa_budget + 0.2,
            )
            summary = composite_risk(p, catalog, thirds_policy)
            tight = {v.constraint_id for v in check_constraints(p, cs_tight, catalog, summary)}
            loose = {v.constraint_id for v in check_constraints(p, cs_loose, catalog, summary)}
            assert loose <= tight


class TestProjection:
    def test_dominating_coordinate(self):
        catalog = make_catalog([0.1, 0.1])
        p = project_to_feasible([2.0, 0.0], ConstraintSet(), catalog)
        assert p.weights == pytest.approx((1.0, 0.0))

    def test_band_projection_hand_case(self):
        # argmin over w1+w2=1, w1<=0.2 of (w1-.5)^2+(w2-.5)^2 is (0.2, 0.8)
        catalog = make_catalog([0.1, 0.1])
        cs = ConstraintSet(bands={"c0": Band(0.0, 0.2)})
        p = project_to_feasible([0.5, 0.5], cs, catalog)
        assert p.weights == pytest.approx((0.2, 0.8), abs=1e-12)

    def test_feasible_point_unchanged(self, device_finance):
        p = project_to_feasible(
            DEVICE_FINANCE_WEIGHTS, device_finance.constraints, device_finance.catalog
        )
        assert p.weights == pytest.approx(DEVICE_FINANCE_WEIGHTS, abs=1e-9)

    @given(
        st.lists(st.floats(min_value=-2, max_value=2), min_size=3, max_size=7),
        st.floats(min_value=0.4, max_value=1.0),
    )
    @settings(deadline=None, max_examples=40)
    def test_idempotence_and_feasibility(self, raw, upper):
        n = len(raw)
        # Group over the first two coordinates only, so the slab never
        # conflicts with the simplex sum.
        catalog = make_catalog([0.1] * n, groups={0: ("g",), 1: ("g",)})
        cs = ConstraintSet(
            bands={"c0": Band(0.0, float(upper))},
            group_bounds=(GroupBound("g", lower=0.05, upper=0.95),),
        )
        once = project_to_feasible(raw, cs, catalog)
        w = once.as_array()
        lo, hi = cs.effective_bands(catalog)
        assert w.sum() == pytest.approx(1.0, abs=1e-9)
        assert (w >= lo - 1e-9).all() and (w <= hi + 1e-9).all()
        gsum = w[:2].sum()
        assert 0.05 - 1e-9 <= gsum <= 0.95 + 1e-9
        twice = project_to_feasible(once.weights, cs, catalog)
        assert np.max(np.abs(twice.as_array() - w)) <= 1e-9

    def test_matches_quadratic_program_oracle(self):
        cvxpy = pytest.importorskip("cvxpy")
        rng = np.random.default_rng(11)
        catalog = make_catalog(
            [0.1] * 5,
            groups={0: ("a",), 1: ("a",), 2: ("b",), 3: ("b",)},
            suppliers={3: "s", 4: "s"},
        )
        cs = ConstraintSet(
            bands={"c0": Band(0.05, 0.6), "c4": Band(0.0, 0.3)},
            group_bounds=(GroupBound("a", lower=0.2, upper=0.8),),
            concentration_limits={"s": 0.5},
        )
        lo, hi = cs.effective_bands(catalog)
        for _ in range(10):
            v = rng.normal(size=5)
            mine = project_to_feasible(v, cs, catalog).as_array()
            x = cvxpy.Variable(5)
            cons = [
                cvxpy.sum(x) == 1, x >= lo, x <= hi,
                x[0] + x[1] >= 0.2, x[0] + x[1] <= 0.8,
                x[3] + x[4] <= 0.5,
            ]
            prob = cvxpy.Problem(cvxpy.Minimize(cvxpy.sum_squares(x - v)), cons)
            prob.solve()
            assert np.max(np.abs(mine - x.value)) < 1e-5

    def test_simplex_fast_path_matches_box_path(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            v = rng.normal(size=6)
            a = project_simplex(v)
            catalog = make_catalog([0.1] * 6)
            cs = ConstraintSet(bands={"c0": Band(0.0, 1.0)})  # box path, trivial box
            b = project_to_feasible(v, cs, catalog).as_array()
            assert np.max(np.abs(a - b)) < 1e-10


class TestFeasibilityProbe:
    def test_conflicting_bands_detected(self):
        catalog = make_catalog([0.1, 0.1])
        cs = ConstraintSet(bands={"c0": Band(0.0, 0.2), "c1": Band(0.0, 0.3)})
        with pytest.raises(InfeasibleError) as err:
            ensure_feasible(cs, catalog)
        assert set(err.value.conflicts) == {"band:c0", "band:c1"}

    def test_group_conflict_named(self):
        catalog = make_catalog([0.1, 0.1, 0.1], groups={0: ("g",), 1: ("g",)})
        cs = ConstraintSet(
            group_bounds=(GroupBound("g", lower=0.8),),
            bands={"c2": Band(0.5, 1.0)},
        )
        conflicts = diagnose_infeasibility(cs, catalog)
        assert set(conflicts) == {"group:g", "band:c2"}

    def test_feasible_set_produces_no_conflicts(self, device_finance):
        assert diagnose_infeasibility(
            device_finance.constraints, device_finance.catalog
        ) == []

    def test_projection_on_empty_region_raises_named_error(self):
        catalog = make_catalog([0.1, 0.1])
        cs = ConstraintSet(
            bands={"c0": Band(0.0, 0.2)},
            aggregate_caps=(AggregateCap(frozenset({"c1"}), 0.3),),
        )
        with pytest.raises(InfeasibleError) as err:
            project_to_feasible([0.5, 0.5], cs, catalog)
        assert err.value.conflicts
