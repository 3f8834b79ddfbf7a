"""Domain types and weight-space geometry for governed data portfolios.

Everything here is immutable after construction and every operation is a
pure function of its inputs, so concurrent evaluation needs no locking.
The constraint machinery normalizes every weight-space rule (bands,
prohibitions, group bounds, aggregate caps, concentration limits) into
subset-sum conditions over one polytope, which the projection, the
feasibility probe, and the optimizer all share.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Protocol, Sequence

import numpy as np

from . import lp
from .errors import ConfigurationError, InfeasibleError

SIMPLEX_TOL = 1e-9
FEAS_TOL = 1e-9
BINDING_TOL = 1e-7


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


def _check_unit(value: float, name: str) -> None:
    if not 0.0 <= value <= 1.0:
        raise ConfigurationError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class DataCategory:
    """One regulated data category with its governance scores.

    ``fairness_score``, ``provenance_score`` and ``robustness_score`` are
    already normalized to [0, 1].  ``risk_weight`` feeds the risk-weighted
    exposure index; ``supplier_group`` identifies the connected-source
    equivalence class used by concentration limits.
    """

    id: str
    name: str
    fairness_score: float
    provenance_score: float
    robustness_score: float
    groups: frozenset[str] = frozenset()
    supplier_group: str = ""
    risk_weight: float = 0.0
    return_params: Mapping[str, float] = field(default_factory=dict)
    rationale: str = ""
    lineage: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if not self.id:
            raise ConfigurationError("category id must be nonempty")
        _check_unit(self.fairness_score, f"fairness_score[{self.id}]")
        _check_unit(self.provenance_score, f"provenance_score[{self.id}]")
        _check_unit(self.robustness_score, f"robustness_score[{self.id}]")
        if self.risk_weight < 0:
            raise ConfigurationError(f"risk_weight[{self.id}] must be >= 0")
        object.__setattr__(self, "groups", frozenset(self.groups))


@dataclass(frozen=True)
class CategoryCatalog:
    """Canonically ordered universe of categories; weight vectors index into it."""

    categories: tuple[DataCategory, ...]
    version: str = ""
    created_at: str = ""

    def __post_init__(self):
        object.__setattr__(self, "categories", tuple(self.categories))
        if not self.categories:
            raise ConfigurationError("catalog must contain at least one category")
        ids = [c.id for c in self.categories]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ConfigurationError(f"duplicate category ids: {dupes}")

    def __len__(self) -> int:
        return len(self.categories)

    @cached_property
    def ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.categories)

    @cached_property
    def index(self) -> Mapping[str, int]:
        return {c.id: i for i, c in enumerate(self.categories)}

    def category(self, cid: str) -> DataCategory:
        try:
            return self.categories[self.index[cid]]
        except KeyError:
            raise ConfigurationError(f"unknown category id: {cid!r}") from None

    @cached_property
    def fairness(self) -> np.ndarray:
        return np.array([c.fairness_score for c in self.categories])

    @cached_property
    def provenance(self) -> np.ndarray:
        return np.array([c.provenance_score for c in self.categories])

    @cached_property
    def robustness(self) -> np.ndarray:
        return np.array([c.robustness_score for c in self.categories])

    @cached_property
    def risk_weights(self) -> np.ndarray:
        return np.array([c.risk_weight for c in self.categories])

    def group_members(self, label: str) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.categories) if label in c.groups)

    def supplier_members(self, label: str) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.categories) if c.supplier_group == label)


@dataclass(frozen=True)
class Portfolio:
    """Nonnegative weight vector on the simplex over a catalog."""

    weights: tuple[float, ...]
    catalog_version: str = ""

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.weights)


@dataclass(frozen=True)
class PolicyParameters:
    """Regulatory component prices (alpha, beta, gamma) and optional CVaR tail."""

    alpha: float
    beta: float
    gamma: float
    cvar_eta: float | None = None

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ConfigurationError("policy parameters must be nonnegative")
        if self.alpha == self.beta == self.gamma == 0:
            raise ConfigurationError("at least one policy parameter must be positive")
        if self.cvar_eta is not None and not 0 < self.cvar_eta < 1:
            raise ConfigurationError(f"cvar_eta must lie in (0, 1), got {self.cvar_eta}")


@dataclass(frozen=True)
class Band:
    lower: float = 0.0
    upper: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.lower <= self.upper <= 1.0:
            raise ConfigurationError(
                f"band must satisfy 0 <= lower <= upper <= 1, got ({self.lower}, {self.upper})"
            )


@dataclass(frozen=True)
class GroupBound:
    group: str
    lower: float | None = None
    upper: float | None = None

    def __post_init__(self):
        if self.lower is None and self.upper is None:
            raise ConfigurationError(f"group bound {self.group!r} has neither side")
        if self.lower is not None and self.upper is not None and self.lower > self.upper:
            raise ConfigurationError(f"group bound {self.group!r} has lower > upper")


@dataclass(frozen=True)
class AggregateCap:
    categories: frozenset[str]
    bound: float

    def __post_init__(self):
        object.__setattr__(self, "categories", frozenset(self.categories))
        if not self.categories:
            raise ConfigurationError("aggregate cap needs a nonempty category set")
        if self.bound < 0:
            raise ConfigurationError("aggregate cap bound must be >= 0")


@dataclass(frozen=True)
class ComponentCaps:
    fairness: float | None = None
    provenance: float | None = None
    robustness: float | None = None


@dataclass(frozen=True)
class ConstraintSet:
    """The complete regulator envelope over weight space and risk space."""

    prohibited: frozenset[str] = frozenset()
    aggregate_caps: tuple[AggregateCap, ...] = ()
    bands: Mapping[str, Band] = field(default_factory=dict)
    group_bounds: tuple[GroupBound, ...] = ()
    risk_cap: float | None = None
    cvar_cap: float | None = None
    concentration_limits: Mapping[str, float] = field(default_factory=dict)
    drwa_budget: float | None = None
    stress_caps: Mapping[str, float] = field(default_factory=dict)
    component_caps: ComponentCaps | None = None

    def __post_init__(self):
        object.__setattr__(self, "prohibited", frozenset(self.prohibited))
        object.__setattr__(self, "aggregate_caps", tuple(self.aggregate_caps))
        object.__setattr__(self, "group_bounds", tuple(self.group_bounds))
        object.__setattr__(self, "bands", dict(self.bands))
        object.__setattr__(self, "concentration_limits", dict(self.concentration_limits))
        object.__setattr__(self, "stress_caps", dict(self.stress_caps))
        lower_sum = sum(b.lower for b in self.bands.values())
        if lower_sum > 1.0 + FEAS_TOL:
            raise ConfigurationError(
                f"band lower bounds sum to {lower_sum:.6f} > 1; feasible region is empty"
            )
        for name, theta in self.concentration_limits.items():
            if not 0.0 <= theta <= 1.0:
                raise ConfigurationError(f"concentration limit {name!r} must lie in [0, 1]")
        for label, cap in (
            ("risk_cap", self.risk_cap),
            ("cvar_cap", self.cvar_cap),
            ("drwa_budget", self.drwa_budget),
        ):
            if cap is not None and cap < 0:
                raise ConfigurationError(f"{label} must be >= 0")
        for sid, cap in self.stress_caps.items():
            if cap < 0:
                raise ConfigurationError(f"stress cap {sid!r} must be >= 0")

    def validate_against(self, catalog: CategoryCatalog) -> None:
        """Cross-check every id reference; raise ConfigurationError on unknowns."""
        known = set(catalog.ids)
        for cid in sorted(self.prohibited):
            if cid not in known:
                raise ConfigurationError(f"prohibited references unknown category {cid!r}")
            band = self.bands.get(cid)
            if band is not None and band.lower > 0:
                raise ConfigurationError(
                    f"category {cid!r} is prohibited but has band lower bound {band.lower}"
                )
        for cid in self.bands:
            if cid not in known:
                raise ConfigurationError(f"band references unknown category {cid!r}")
        for cap in self.aggregate_caps:
            missing = sorted(cap.categories - known)
            if missing:
                raise ConfigurationError(f"aggregate cap references unknown categories {missing}")
        groups = set().union(*(c.groups for c in catalog.categories))
        for gb in self.group_bounds:
            if gb.group not in groups:
                raise ConfigurationError(f"group bound references unknown group {gb.group!r}")
        suppliers = {c.supplier_group for c in catalog.categories if c.supplier_group}
        for name in self.concentration_limits:
            if name not in suppliers:
                raise ConfigurationError(
                    f"concentration limit references unknown supplier group {name!r}"
                )

    def effective_bands(self, catalog: CategoryCatalog) -> tuple[np.ndarray, np.ndarray]:
        """Per-category (lower, upper) arrays; prohibition collapses to (0, 0)."""
        lo = np.zeros(len(catalog))
        hi = np.ones(len(catalog))
        for cid, band in self.bands.items():
            i = catalog.index[cid]
            lo[i], hi[i] = band.lower, band.upper
        for cid in self.prohibited:
            i = catalog.index[cid]
            lo[i], hi[i] = 0.0, 0.0
        return lo, hi


# ---------------------------------------------------------------------------
# Constraint evaluation
# ---------------------------------------------------------------------------

# Stable machine-readable violation codes (also used by report linting).
NEGATIVE_WEIGHT = "NEGATIVE_WEIGHT"
WEIGHT_SUM = "WEIGHT_SUM"
LENGTH_MISMATCH = "LENGTH_MISMATCH"
CATALOG_VERSION = "CATALOG_VERSION"
PROHIBITED = "PROHIBITED"
BAND_EXCEEDED = "BAND_EXCEEDED"
BAND_BELOW = "BAND_BELOW"
GROUP_EXCEEDED = "GROUP_EXCEEDED"
GROUP_BELOW = "GROUP_BELOW"
AGGREGATE_CAP = "AGGREGATE_CAP"
CONCENTRATION_LIMIT = "CONCENTRATION_LIMIT"
RISK_CAP = "RISK_CAP"
CVAR_CAP = "CVAR_CAP"
DRWA_BUDGET = "DRWA_BUDGET"
COMPONENT_CAP = "COMPONENT_CAP"
STRESS_CAP = "STRESS_CAP"
SELF_CONSISTENCY = "SELF_CONSISTENCY"
SCHEMA_ERROR = "SCHEMA_ERROR"
UNKNOWN_CATEGORY = "UNKNOWN_CATEGORY"


@dataclass(frozen=True)
class Violation:
    constraint_id: str
    code: str
    observed: float
    bound: float
    message: str = ""

    def as_dict(self) -> dict:
        return {
            "constraint_id": self.constraint_id,
            "code": self.code,
            "observed": self.observed,
            "bound": self.bound,
            "message": self.message,
        }


@dataclass(frozen=True)
class ConstraintStatus:
    """One inequality's state at a portfolio: ok, binding, or violated."""

    constraint_id: str
    code: str
    observed: float
    bound: float
    status: str  # "ok" | "binding" | "violated"

    def as_dict(self) -> dict:
        return {
            "constraint_id": self.constraint_id,
            "code": self.code,
            "observed": self.observed,
            "bound": self.bound,
            "status": self.status,
        }


def validate_portfolio(p: Portfolio, catalog: CategoryCatalog) -> list[Violation]:
    """Simplex-membership report; an empty list means the portfolio is valid."""
    out: list[Violation] = []
    if len(p.weights) != len(catalog):
        out.append(
            Violation(
                "portfolio", LENGTH_MISMATCH, float(len(p.weights)), float(len(catalog)),
                f"portfolio has {len(p.weights)} weights for {len(catalog)} categories",
            )
        )
        return out
    if p.catalog_version and catalog.version and p.catalog_version != catalog.version:
        out.append(
            Violation("portfolio", CATALOG_VERSION, 0.0, 0.0,
                      f"portfolio built for catalog {p.catalog_version!r}, "
                      f"checked against {catalog.version!r}")
        )
    for cid, w in zip(catalog.ids, p.weights):
        if w < -SIMPLEX_TOL:
            out.append(Violation(f"weight:{cid}", NEGATIVE_WEIGHT, w, 0.0,
                                 f"weight of {cid} is negative"))
    total = math.fsum(p.weights)
    if abs(total - 1.0) > SIMPLEX_TOL:
        out.append(Violation("portfolio", WEIGHT_SUM, total, 1.0,
                             f"weights sum to {total!r}"))
    return out


def _upper_status(cid: str, code: str, observed: float, bound: float) -> ConstraintStatus:
    if observed > bound + FEAS_TOL:
        status = "violated"
    elif observed >= bound - BINDING_TOL:
        status = "binding"
    else:
        status = "ok"
    return ConstraintStatus(cid, code, observed, bound, status)


def _lower_status(cid: str, code: str, observed: float, bound: float) -> ConstraintStatus:
    if observed < bound - FEAS_TOL:
        status = "violated"
    elif observed <= bound + BINDING_TOL:
        status = "binding"
    else:
        status = "ok"
    return ConstraintStatus(cid, code, observed, bound, status)


def constraint_status(
    p: Portfolio,
    cs: ConstraintSet,
    catalog: CategoryCatalog,
    sigma: "RiskView | None" = None,
) -> list[ConstraintStatus]:
    """Evaluate every applicable constraint at ``p``.

    Weight-space constraints are always evaluated.  The risk cap, CVaR cap
    and component caps need portfolio-level risk numbers, so they are only
    evaluated when a risk summary is supplied.  Stress caps are handled by
    ``stress_evaluate`` in the risk engine, not here.
    """
    cs.validate_against(catalog)
    w = p.as_array()
    rows: list[ConstraintStatus] = []

    for cid in sorted(cs.prohibited):
        i = catalog.index[cid]
        rows.append(_upper_status(f"prohibited:{cid}", PROHIBITED, float(w[i]), 0.0))
    for cid, band in cs.bands.items():
        if cid in cs.prohibited:
            continue
        i = catalog.index[cid]
        rows.append(_upper_status(f"band:{cid}", BAND_EXCEEDED, float(w[i]), band.upper))
        if band.lower > 0:
            rows.append(_lower_status(f"band:{cid}", BAND_BELOW, float(w[i]), band.lower))
    for gb in cs.group_bounds:
        members = catalog.group_members(gb.group)
        total = float(w[list(members)].sum()) if members else 0.0
        if gb.upper is not None:
            rows.append(_upper_status(f"group:{gb.group}", GROUP_EXCEEDED, total, gb.upper))
        if gb.lower is not None:
            rows.append(_lower_status(f"group:{gb.group}", GROUP_BELOW, total, gb.lower))
    for cap in cs.aggregate_caps:
        ids = sorted(cap.categories)
        total = float(sum(w[catalog.index[c]] for c in ids))
        rows.append(
            _upper_status(f"aggregate_cap:{'+'.join(ids)}", AGGREGATE_CAP, total, cap.bound)
        )
    for name in sorted(cs.concentration_limits):
        theta = cs.concentration_limits[name]
        members = catalog.supplier_members(name)
        total = float(w[list(members)].sum()) if members else 0.0
        rows.append(_upper_status(f"concentration:{name}", CONCENTRATION_LIMIT, total, theta))
    if cs.drwa_budget is not None:
        rows.append(
            _upper_status("drwa_budget", DRWA_BUDGET,
                          float(w @ catalog.risk_weights), cs.drwa_budget)
        )

    if sigma is not None:
        if cs.risk_cap is not None:
            rows.append(_upper_status("risk_cap", RISK_CAP, sigma.composite, cs.risk_cap))
        if cs.cvar_cap is not None and sigma.cvar is not None:
            rows.append(_upper_status("cvar_cap", CVAR_CAP, sigma.cvar, cs.cvar_cap))
        if cs.component_caps is not None:
            caps = cs.component_caps
            for label, value, cap in (
                ("fairness", sigma.fairness, caps.fairness),
                ("provenance", sigma.provenance, caps.provenance),
                ("robustness", sigma.robustness, caps.robustness),
            ):
                if cap is not None:
                    rows.append(
                        _upper_status(f"component_cap:{label}", COMPONENT_CAP, value, cap)
                    )
    return rows


def check_constraints(
    p: Portfolio,
    cs: ConstraintSet,
    catalog: CategoryCatalog,
    sigma: "RiskView | None" = None,
) -> list[Violation]:
    """Violated constraints only; the portfolio is feasible iff this is empty."""
    return [
        Violation(s.constraint_id, s.code, s.observed, s.bound,
                  f"{s.constraint_id}: observed {s.observed:.9g} vs bound {s.bound:.9g}")
        for s in constraint_status(p, cs, catalog, sigma)
        if s.status == "violated"
    ]


def binding_constraints(
    p: Portfolio,
    cs: ConstraintSet,
    catalog: CategoryCatalog,
    sigma: "RiskView | None" = None,
) -> list[str]:
    return [s.constraint_id for s in constraint_status(p, cs, catalog, sigma)
            if s.status == "binding"]


class RiskView(Protocol):
    """The view the constraint checker needs from a risk summary."""

    fairness: float
    provenance: float
    robustness: float
    composite: float
    cvar: float | None


# ---------------------------------------------------------------------------
# Weight polytope: shared linear-condition form
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SumCondition:
    """lower <= sum(w[i] for i in indices) <= upper (either side optional)."""

    constraint_id: str
    indices: tuple[int, ...]
    lower: float | None
    upper: float | None


def weight_polytope(cs: ConstraintSet, catalog: CategoryCatalog) -> list[SumCondition]:
    """All weight-space constraints beyond the simplex, as subset-sum slabs.

    Per-category bands (including prohibitions) come first, then group
    bounds, aggregate caps, and concentration limits, in a fixed order so
    the LP assembly and the infeasibility diagnosis are deterministic.
    """
    cs.validate_against(catalog)
    lo, hi = cs.effective_bands(catalog)
    rows: list[SumCondition] = []
    for i, cid in enumerate(catalog.ids):
        if lo[i] > 0.0 or hi[i] < 1.0:
            name = f"prohibited:{cid}" if cid in cs.prohibited else f"band:{cid}"
            rows.append(SumCondition(name, (i,), float(lo[i]), float(hi[i])))
    for gb in cs.group_bounds:
        rows.append(
            SumCondition(f"group:{gb.group}", catalog.group_members(gb.group),
                         gb.lower, gb.upper)
        )
    for cap in cs.aggregate_caps:
        ids = sorted(cap.categories)
        idx = tuple(catalog.index[c] for c in ids)
        rows.append(SumCondition(f"aggregate_cap:{'+'.join(ids)}", idx, None, cap.bound))
    for name in sorted(cs.concentration_limits):
        rows.append(
            SumCondition(f"concentration:{name}", catalog.supplier_members(name),
                         None, cs.concentration_limits[name])
        )
    return rows


def polytope_rows(
    conditions: Sequence[SumCondition], n: int
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Stack conditions into A w <= b rows with one label per row."""
    mats, bs, labels = [], [], []
    for cond in conditions:
        ind = np.zeros(n)
        ind[list(cond.indices)] = 1.0
        if cond.upper is not None:
            mats.append(ind)
            bs.append(cond.upper)
            labels.append(cond.constraint_id)
        if cond.lower is not None and cond.lower > 0.0:
            mats.append(-ind)
            bs.append(-cond.lower)
            labels.append(cond.constraint_id)
    A = np.vstack(mats) if mats else np.empty((0, n))
    return A, np.asarray(bs, dtype=float), labels


def _phase_one_feasible(conditions: Sequence[SumCondition], n: int) -> bool:
    A, b, _ = polytope_rows(conditions, n)
    res = lp.solve_lp(np.zeros(n), A_ub=A, b_ub=b, A_eq=np.ones((1, n)), b_eq=[1.0])
    return res.status == "optimal"


def diagnose_infeasibility(cs: ConstraintSet, catalog: CategoryCatalog) -> list[str]:
    """Greedy deletion filter: a small mutually inconsistent constraint subset.

    Drops each condition in turn and keeps it only if the remainder is
    still feasible without it (so it is necessary for the conflict).  Not
    a certified irreducible subsystem, but cheap and usually minimal.
    """
    n = len(catalog)
    conditions = weight_polytope(cs, catalog)
    if _phase_one_feasible(conditions, n):
        return []
    kept = list(conditions)
    i = 0
    while i < len(kept):
        trial = kept[:i] + kept[i + 1 :]
        if not _phase_one_feasible(trial, n):
            kept = trial  # still conflicting without it -> discard
        else:
            i += 1  # necessary for the conflict -> keep
    return [c.constraint_id for c in kept]


def ensure_feasible(cs: ConstraintSet, catalog: CategoryCatalog) -> None:
    """Phase-one feasibility probe; raises with a named conflict set if empty."""
    if not _phase_one_feasible(weight_polytope(cs, catalog), len(catalog)):
        conflicts = diagnose_infeasibility(cs, catalog)
        raise InfeasibleError(
            "constraint set admits no weight vector on the simplex; "
            "conflicting constraints: " + (", ".join(conflicts) or "simplex"),
            conflicts=conflicts,
        )


# ---------------------------------------------------------------------------
# Projections
# ---------------------------------------------------------------------------


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sorting method)."""
    v = np.asarray(v, dtype=float)
    n = v.shape[0]
    u = np.sort(v)[::-1]
    cssv = np.cumsum(u) - 1.0
    rho = np.nonzero(u * np.arange(1, n + 1) > cssv)[0][-1]
    theta = cssv[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def project_box_simplex(v: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Exact projection onto {lo <= w <= hi, sum w = 1}.

    Solves sum(clip(v - t, lo, hi)) = 1 for the shift t.  The left side is
    piecewise linear and nonincreasing in t with breakpoints at v - hi and
    v - lo, so scanning the sorted breakpoints finds the crossing segment
    and the exact t on it (no bisection).
    """
    v = np.asarray(v, dtype=float)
    lo_sum, hi_sum = lo.sum(), hi.sum()
    if lo_sum > 1.0 + FEAS_TOL or hi_sum < 1.0 - FEAS_TOL:
        raise InfeasibleError(
            f"box [sum lower={lo_sum:.6f}, sum upper={hi_sum:.6f}] cannot reach sum 1"
        )
    bps = np.unique(np.concatenate([v - hi, v - lo]))
    masses = np.clip(v[None, :] - bps[:, None], lo, hi).sum(axis=1)
    # masses is nonincreasing from hi_sum to lo_sum; locate the crossing of 1.
    above = np.nonzero(masses >= 1.0)[0]
    if above.size == 0:
        t = float(bps[0])  # hi_sum == 1 within tolerance
    else:
        j = int(above[-1])
        if j == len(bps) - 1 or masses[j] == 1.0:
            t = float(bps[j])
        else:
            m0, m1 = masses[j], masses[j + 1]
            t = float(bps[j] + (m0 - 1.0) * (bps[j + 1] - bps[j]) / (m0 - m1))
    w = np.clip(v - t, lo, hi)
    # One exact correction spread over strictly interior coordinates kills
    # the last float-level drift in the sum.
    interior = (w > lo + 1e-12) & (w < hi - 1e-12)
    gap = 1.0 - w.sum()
    if interior.any():
        w[interior] += gap / interior.sum()
    return w


def _project_slab(w: np.ndarray, cond: SumCondition) -> np.ndarray:
    idx = list(cond.indices)
    if not idx:
        return w
    total = w[idx].sum()
    lo = cond.lower if cond.lower is not None else -np.inf
    hi = cond.upper if cond.upper is not None else np.inf
    target = min(max(total, lo), hi)
    if target == total:
        return w
    out = w.copy()
    out[idx] += (target - total) / len(idx)
    return out


def _max_violation(
    w: np.ndarray, lo: np.ndarray, hi: np.ndarray, slabs: Sequence[SumCondition]
) -> float:
    viol = max(float(np.max(lo - w, initial=0.0)), float(np.max(w - hi, initial=0.0)))
    viol = max(viol, abs(w.sum() - 1.0))
    for cond in slabs:
        total = w[list(cond.indices)].sum()
        if cond.upper is not None:
            viol = max(viol, total - cond.upper)
        if cond.lower is not None:
            viol = max(viol, cond.lower - total)
    return viol


def _active_set_polish(
    v: np.ndarray,
    w: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    slabs: Sequence[SumCondition],
) -> np.ndarray | None:
    """Exact equality-constrained projection onto the face Dykstra found.

    Constraints within 1e-7 of binding at ``w`` are pinned as equalities
    and the projection of ``v`` onto that affine face has a closed form
    via least squares.  Returned only if it is feasible and at least as
    close to ``v`` as the iterate, else None.
    """
    n = v.shape[0]
    rows, rhs = [np.ones(n)], [1.0]
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        if abs(w[i] - lo[i]) <= 1e-7:
            rows.append(e)
            rhs.append(lo[i])
        elif abs(w[i] - hi[i]) <= 1e-7:
            rows.append(e)
            rhs.append(hi[i])
    for cond in slabs:
        ind = np.zeros(n)
        ind[list(cond.indices)] = 1.0
        total = w[list(cond.indices)].sum()
        if cond.upper is not None and abs(total - cond.upper) <= 1e-7:
            rows.append(ind)
            rhs.append(cond.upper)
        elif cond.lower is not None and abs(total - cond.lower) <= 1e-7:
            rows.append(ind)
            rhs.append(cond.lower)
    G = np.vstack(rows)
    h = np.asarray(rhs)
    lam, *_ = np.linalg.lstsq(G @ G.T, G @ v - h, rcond=None)
    cand = v - G.T @ lam
    if _max_violation(cand, lo, hi, slabs) > 1e-10:
        return None
    if np.linalg.norm(cand - v) > np.linalg.norm(w - v) + 1e-9:
        return None
    return cand


def project_to_feasible(
    w: Sequence[float] | np.ndarray,
    cs: ConstraintSet,
    catalog: CategoryCatalog,
    max_cycles: int = 5_000,
) -> Portfolio:
    """Euclidean projection of a raw vector onto the weight polytope.

    The box-and-simplex part has an exact closed form, and when that
    projection already satisfies the group-sum slabs it is the projection
    onto the whole intersection.  Otherwise slabs are folded in with
    Dykstra's alternating projections (each member projection exact) and
    an active-set polish snaps the iterate onto the exact face, keeping
    the result idempotent and feasible to well under 1e-9.
    """
    v = np.asarray(w, dtype=float)
    if v.shape[0] != len(catalog):
        raise ConfigurationError(
            f"vector has {v.shape[0]} entries for {len(catalog)} categories"
        )
    lo, hi = cs.effective_bands(catalog)
    # Single-category group/cap conditions tighten the box; only genuine
    # multi-category sums need alternating projections.
    slabs = []
    boxed = bool(cs.bands or cs.prohibited)
    for cond in weight_polytope(cs, catalog):
        if len(cond.indices) == 1:
            i = cond.indices[0]
            if cond.lower is not None:
                lo[i] = max(lo[i], cond.lower)
            if cond.upper is not None:
                hi[i] = min(hi[i], cond.upper)
            boxed = True
        elif len(cond.indices) > 1:
            slabs.append(cond)
    if np.any(lo > hi + FEAS_TOL):
        ensure_feasible(cs, catalog)  # raises with named conflicts
        raise InfeasibleError("per-category bounds are mutually inconsistent")

    try:
        x = project_box_simplex(v, lo, hi) if boxed else project_simplex(v)
    except InfeasibleError:
        ensure_feasible(cs, catalog)  # raises with named conflicts
        raise
    if not slabs or _max_violation(x, lo, hi, slabs) <= 1e-12:
        return Portfolio(tuple(float(t) for t in x), catalog.version)

    # Dykstra over {box ∩ sum=1} and each slab.
    sets: list = [None] + list(slabs)  # index 0 = box/simplex member
    increments = [np.zeros_like(v) for _ in sets]
    x = v.copy()
    for _ in range(max_cycles):
        x_prev = x.copy()
        for k, cond in enumerate(sets):
            y = x + increments[k]
            x_new = project_box_simplex(y, lo, hi) if cond is None else _project_slab(y, cond)
            increments[k] = y - x_new
            x = x_new
        if _max_violation(x, lo, hi, slabs) <= 1e-11 and np.abs(x - x_prev).max() <= 1e-12:
            break
    else:
        if _max_violation(x, lo, hi, slabs) > 1e-9:
            ensure_feasible(cs, catalog)  # raises with conflict list if empty
            raise ArithmeticError("projection failed to converge on a feasible polytope")

    polished = _active_set_polish(v, x, lo, hi, slabs)
    if polished is not None:
        x = polished
    return Portfolio(tuple(float(t) for t in x), catalog.version)
