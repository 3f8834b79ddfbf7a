"""Governance-risk quantities: component aggregates, composite, tail risk.

The composite is deliberately linear in the component aggregates so that
supervisors can read it, cap it, and embed it in linear programs.  Two
robustness conventions coexist: the score-weighted column from the
catalog (the default) and a model-based shift volatility; summaries
record which one they carry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .core import CategoryCatalog, PolicyParameters, Portfolio
from .errors import ConfigurationError
from .returns import (
    ReturnModel,
    Scenario,
    ShiftOperator,
    apply_coefficient_deltas,
    apply_shift,
    evaluate_return,
    perturb_scores,
)

EXHAUSTIVE_ATOM_LIMIT = 10_000


@dataclass(frozen=True)
class RiskSummary:
    fairness: float
    provenance: float
    robustness: float
    composite: float
    cvar: float | None = None
    drwa: float | None = None
    robustness_source: str = "score-weighted"  # or "shift-volatility"

    def __post_init__(self):
        for name in ("fairness", "provenance", "robustness"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigurationError(f"{name} component must lie in [0, 1], got {value}")

    def as_dict(self) -> dict:
        return {
            "fairness": self.fairness,
            "provenance": self.provenance,
            "robustness": self.robustness,
            "composite": self.composite,
            "cvar": self.cvar,
            "drwa": self.drwa,
            "robustness_source": self.robustness_source,
        }


def aggregate_components(
    p: Portfolio, catalog: CategoryCatalog
) -> tuple[float, float, float]:
    """Weighted component sums (F, P, R) of a portfolio."""
    w = p.as_array()
    return (
        float(w @ catalog.fairness),
        float(w @ catalog.provenance),
        float(w @ catalog.robustness),
    )


def composite_cost_vector(catalog: CategoryCatalog, policy: PolicyParameters) -> np.ndarray:
    """Per-category composite risk prices; the composite is their dot with w."""
    return (
        policy.alpha * catalog.fairness
        + policy.beta * catalog.provenance
        + policy.gamma * catalog.robustness
    )


def composite_risk(
    p: Portfolio,
    catalog: CategoryCatalog,
    policy: PolicyParameters,
    robustness_override: float | None = None,
) -> RiskSummary:
    """Composite governance risk of a portfolio.

    ``robustness_override`` substitutes a model-based shift volatility for
    the score-weighted robustness column; the summary records the choice.
    """
    f, pr, r = aggregate_components(p, catalog)
    source = "score-weighted"
    if robustness_override is not None:
        if not 0.0 <= robustness_override <= 1.0:
            raise ConfigurationError(
                f"robustness override must lie in [0, 1], got {robustness_override}"
            )
        r = robustness_override
        source = "shift-volatility"
    composite = policy.alpha * f + policy.beta * pr + policy.gamma * r
    return RiskSummary(f, pr, r, composite, robustness_source=source)


def robustness_volatility(
    model: ReturnModel,
    p: Portfolio,
    shifts: Sequence[ShiftOperator],
    catalog: CategoryCatalog,
) -> float:
    """Largest absolute deviation of shifted evaluations from the unshifted one.

    An empty shift set scores 0 (nothing to deviate under).
    """
    if not shifts:
        return 0.0
    base = evaluate_return(model, p, catalog)
    return max(abs(base - apply_shift(model, p, s, catalog)) for s in shifts)


def drwa(p: Portfolio, catalog: CategoryCatalog) -> float:
    """Risk-weighted data exposure: the risk-weight column dotted with w."""
    return float(p.as_array() @ catalog.risk_weights)


# ---------------------------------------------------------------------------
# Expected shortfall
# ---------------------------------------------------------------------------


def expected_shortfall(losses, probabilities, eta: float) -> float:
    """Upper-tail expected shortfall of a discrete loss distribution.

    Sorts losses descending and averages the worst eta-tail, splitting the
    atom that straddles the tail boundary so ES at eta = 1 is exactly the
    probability-weighted mean.
    """
    if not 0 < eta <= 1:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    losses = np.asarray(losses, dtype=float)
    probs = np.asarray(probabilities, dtype=float)
    order = np.argsort(-losses, kind="stable")
    l_sorted, p_sorted = losses[order], probs[order]
    cum = np.cumsum(p_sorted)
    k = int(np.searchsorted(cum, eta - 1e-15))
    k = min(k, len(l_sorted) - 1)
    full = float(p_sorted[:k] @ l_sorted[:k])
    partial = (eta - (cum[k - 1] if k > 0 else 0.0)) * l_sorted[k]
    return float((full + partial) / eta)


def expected_shortfall_minform(losses, probabilities, eta: float) -> float:
    """ES via the auxiliary-variable minimization min_t t + E[(L - t)+] / eta.

    The objective is convex piecewise linear with breakpoints at the loss
    atoms, so the minimum over t is attained at an atom; this is the form
    the CVaR-constrained linear program embeds.
    """
    if not 0 < eta <= 1:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    losses = np.asarray(losses, dtype=float)
    probs = np.asarray(probabilities, dtype=float)
    ts = np.unique(losses)
    values = ts + (np.clip(losses[None, :] - ts[:, None], 0.0, None) @ probs) / eta
    return float(values.min())


def scenario_losses(
    p: Portfolio,
    catalog: CategoryCatalog,
    policy: PolicyParameters,
    scenarios: Sequence[Scenario],
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Composite governance loss under each scenario's perturbed score table.

    Scenarios are processed in scenario-id order so reductions are
    deterministic regardless of input ordering.
    """
    ordered = sorted(scenarios, key=lambda s: s.id)
    losses, probs, ids = [], [], []
    for s in ordered:
        pert, _ = perturb_scores(catalog, s.score_deltas)
        f, pr, r = aggregate_components(p, pert)
        losses.append(policy.alpha * f + policy.beta * pr + policy.gamma * r)
        probs.append(s.probability)
        ids.append(s.id)
    return np.asarray(losses), np.asarray(probs), ids


def cvar_risk(
    p: Portfolio,
    catalog: CategoryCatalog,
    policy: PolicyParameters,
    scenarios: Sequence[Scenario],
    samples: int,
    seed: int,
    max_exhaustive: int = EXHAUSTIVE_ATOM_LIMIT,
) -> float:
    """Tail-sensitive governance risk: ES of the scenario loss distribution.

    Scenario sets up to ``max_exhaustive`` atoms are evaluated exhaustively
    with their exact probabilities (no sampling noise); larger sets are
    resampled proportionally to probability with the given seed.  Either
    way the result is deterministic for fixed inputs.
    """
    if policy.cvar_eta is None:
        raise ConfigurationError("policy.cvar_eta must be set for CVaR evaluation")
    if not scenarios:
        raise ConfigurationError("CVaR evaluation needs at least one scenario")
    eta = policy.cvar_eta
    if samples < 1.0 / eta:
        raise ValueError(
            f"{samples} samples cannot resolve a {eta} tail (need >= {math.ceil(1 / eta)})"
        )
    losses, probs, _ = scenario_losses(p, catalog, policy, scenarios)
    if len(losses) <= max_exhaustive:
        return expected_shortfall(losses, probs, eta)
    rng = np.random.default_rng(seed)
    draws = rng.choice(len(losses), size=samples, p=probs / probs.sum())
    drawn = losses[draws]
    return expected_shortfall(drawn, np.full(samples, 1.0 / samples), eta)


# ---------------------------------------------------------------------------
# Stress testing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StressRow:
    scenario_id: str
    mu: float
    sigma: float
    cap: float | None
    passed: bool | None
    clipped: bool

    def as_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "mu": self.mu,
            "sigma": self.sigma,
            "cap": self.cap,
            "passed": self.passed,
            "clipped": self.clipped,
        }


@dataclass(frozen=True)
class StressResult:
    rows: tuple[StressRow, ...]
    passed: bool

    def as_dict(self) -> dict:
        return {"rows": [r.as_dict() for r in self.rows], "passed": self.passed}


def stress_evaluate(
    p: Portfolio,
    catalog: CategoryCatalog,
    policy: PolicyParameters,
    scenarios: Sequence[Scenario],
    model: ReturnModel,
    stress_caps=None,
) -> StressResult:
    """Recompute (mu, sigma) under each scenario and compare against caps.

    A scenario passes when its perturbed composite stays at or below its
    declared cap; scenarios without caps are informational.  Score values
    pushed outside [0, 1] are clipped and the clipping is flagged per row.
    """
    caps = dict(stress_caps or {})
    unknown = set(caps) - {s.id for s in scenarios}
    if unknown:
        raise ConfigurationError(f"stress caps reference unknown scenarios {sorted(unknown)}")
    rows = []
    for s in sorted(scenarios, key=lambda sc: sc.id):
        pert_catalog, clipped = perturb_scores(catalog, s.score_deltas)
        summary = composite_risk(p, pert_catalog, policy)
        pert_model = apply_coefficient_deltas(model, s.coefficient_deltas)
        mu = evaluate_return(pert_model, p, catalog)
        cap = caps.get(s.id)
        passed = None if cap is None else summary.composite <= cap + 1e-9
        rows.append(StressRow(s.id, mu, summary.composite, cap, passed, clipped))
    overall = all(r.passed for r in rows if r.passed is not None)
    return StressResult(tuple(rows), overall)


def full_risk_summary(
    p: Portfolio,
    catalog: CategoryCatalog,
    policy: PolicyParameters,
    scenarios: Sequence[Scenario] = (),
    samples: int = 10_000,
    seed: int = 0,
    robustness_override: float | None = None,
) -> RiskSummary:
    """Composite summary with the exposure index and, when a tail is
    configured and scenarios exist, the CVaR attached."""
    summary = composite_risk(p, catalog, policy, robustness_override)
    summary = replace(summary, drwa=drwa(p, catalog))
    if policy.cvar_eta is not None and scenarios:
        summary = replace(
            summary, cvar=cvar_risk(p, catalog, policy, scenarios, samples, seed)
        )
    return summary
