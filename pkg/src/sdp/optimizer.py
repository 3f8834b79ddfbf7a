"""Governance-optimal portfolio solvers.

Two dispatch paths: linear return models go through an exact simplex LP
(deterministic Bland pivoting, certified vertex optimum), everything else
through a seeded multi-start local search that never leaves the feasible
region.  A CVaR-capped variant embeds the expected-shortfall auxiliary
reformulation as extra LP columns, and the equal-risk-contribution
baseline comes out in closed form because the composite is linear.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import lp
from .core import (
    CategoryCatalog,
    ConstraintSet,
    PolicyParameters,
    Portfolio,
    binding_constraints,
    check_constraints,
    diagnose_infeasibility,
    ensure_feasible,
    polytope_rows,
    project_to_feasible,
    weight_polytope,
)
from .errors import ConfigurationError, InfeasibleError
from .frontier import FrontierResult, SamplerConfig, build_frontier
from .returns import ReturnModel, Scenario, evaluate_return, perturb_scores
from .risk import (
    RiskSummary,
    composite_cost_vector,
    composite_risk,
    cvar_risk,
    full_risk_summary,
)


@dataclass(frozen=True)
class OptimizationResult:
    portfolio: Portfolio
    mu: float
    risk: RiskSummary
    binding_constraints: tuple[str, ...]
    solver: str  # "exact-lp" | "black-box-search"
    iterations: int = 0
    samples: int = 0
    seed: int | None = None

    def as_dict(self) -> dict:
        return {
            "weights": list(self.portfolio.weights),
            "mu": self.mu,
            "risk": self.risk.as_dict(),
            "binding_constraints": list(self.binding_constraints),
            "solver": self.solver,
            "iterations": self.iterations,
            "samples": self.samples,
            "seed": self.seed,
        }


def _risk_rows(
    cs: ConstraintSet, catalog: CategoryCatalog, policy: PolicyParameters
) -> tuple[list[np.ndarray], list[float], list[str]]:
    """Linear risk-space constraint rows (cap, components, exposure budget)."""
    rows, bounds, labels = [], [], []
    if cs.risk_cap is not None:
        rows.append(composite_cost_vector(catalog, policy))
        bounds.append(cs.risk_cap)
        labels.append("risk_cap")
    if cs.component_caps is not None:
        for label, vec, cap in (
            ("fairness", catalog.fairness, cs.component_caps.fairness),
            ("provenance", catalog.provenance, cs.component_caps.provenance),
            ("robustness", catalog.robustness, cs.component_caps.robustness),
        ):
            if cap is not None:
                rows.append(vec)
                bounds.append(cap)
                labels.append(f"component_cap:{label}")
    if cs.drwa_budget is not None:
        rows.append(catalog.risk_weights)
        bounds.append(cs.drwa_budget)
        labels.append("drwa_budget")
    return rows, bounds, labels


def _assemble_ub(
    cs: ConstraintSet, catalog: CategoryCatalog, policy: PolicyParameters
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    n = len(catalog)
    A, b, labels = polytope_rows(weight_polytope(cs, catalog), n)
    r_rows, r_bounds, r_labels = _risk_rows(cs, catalog, policy)
    if r_rows:
        A = np.vstack([A, np.vstack(r_rows)]) if A.size else np.vstack(r_rows)
        b = np.concatenate([b, np.asarray(r_bounds)])
        labels = labels + r_labels
    return A, b, labels


def _lp_infeasible_error(cs: ConstraintSet, catalog: CategoryCatalog) -> InfeasibleError:
    conflicts = diagnose_infeasibility(cs, catalog)
    if not conflicts:
        # Weight polytope alone is fine, so a risk-space cap is the culprit.
        if cs.risk_cap is not None:
            conflicts.append("risk_cap")
        if cs.cvar_cap is not None:
            conflicts.append("cvar_cap")
        if cs.drwa_budget is not None:
            conflicts.append("drwa_budget")
        if cs.component_caps is not None:
            conflicts.append("component_caps")
    return InfeasibleError(
        "no portfolio satisfies the constraint set; "
        "conflicting constraints: " + ", ".join(conflicts),
        conflicts=conflicts,
    )


def _finish(
    w: np.ndarray,
    cs: ConstraintSet,
    catalog: CategoryCatalog,
    policy: PolicyParameters,
    model: ReturnModel,
    solver: str,
    scenarios: Sequence[Scenario] = (),
    seed: int | None = None,
    iterations: int = 0,
    samples: int = 0,
    cvar_samples: int = 10_000,
) -> OptimizationResult:
    portfolio = Portfolio(tuple(float(x) for x in w), catalog.version)
    summary = full_risk_summary(
        portfolio, catalog, policy, scenarios, samples=cvar_samples, seed=seed or 0
    )
    mu = evaluate_return(model, portfolio, catalog)
    binding = tuple(binding_constraints(portfolio, cs, catalog, summary))
    return OptimizationResult(
        portfolio, mu, summary, binding, solver,
        iterations=iterations, samples=samples, seed=seed,
    )


def optimize_exact(
    model: ReturnModel,
    cs: ConstraintSet,
    catalog: CategoryCatalog,
    policy: PolicyParameters,
    scenarios: Sequence[Scenario] = (),
) -> OptimizationResult:
    """Certified-optimal vertex solution for linear return models.

    Every governance constraint here is linear in the weights (the
    composite uses the score-weighted robustness column), so the whole
    problem is a single LP solved with deterministic Bland pivoting.
    Tail-risk caps need scenario columns and belong to
    ``optimize_cvar_constrained``; the ``optimize`` dispatcher routes
    them there.
    """
    if model.kind != "linear":
        raise ConfigurationError(
            f"exact solver requires a linear model, got {model.kind!r}; "
            "use the black-box search instead"
        )
    n = len(catalog)
    m = model.coefficient_vector(catalog, "m")
    A, b, _ = _assemble_ub(cs, catalog, policy)
    res = lp.solve_lp(-m, A_ub=A if A.size else None, b_ub=b if b.size else None,
                      A_eq=np.ones((1, n)), b_eq=[1.0])
    if res.status == "infeasible":
        raise _lp_infeasible_error(cs, catalog)
    if res.status != "optimal":
        raise ArithmeticError(f"LP solver returned {res.status}")
    return _finish(res.x, cs, catalog, policy, model, "exact-lp",
                   scenarios, iterations=res.iterations)


def optimize_cvar_constrained(
    model: ReturnModel,
    cs: ConstraintSet,
    catalog: CategoryCatalog,
    policy: PolicyParameters,
    scenarios: Sequence[Scenario],
    seed: int = 0,
    budget: int = 20_000,
) -> OptimizationResult:
    """Maximize return subject to the tail-risk cap via the auxiliary LP.

    Variables are (w, t+, t-, u_j) with u_j >= L_j(w) - t and
    t + sum_j p_j u_j / eta <= cap; at the optimum the u-block realizes
    the expected shortfall exactly, so the returned portfolio's
    exhaustively recomputed ES respects the cap.  Nonlinear models fall
    back to the black-box search with the tail cap as a rejection test.
    """
    if cs.cvar_cap is None:
        raise ConfigurationError("constraint set has no cvar_cap")
    if policy.cvar_eta is None:
        raise ConfigurationError("policy.cvar_eta must be set for CVaR optimization")
    if not scenarios:
        raise ConfigurationError("CVaR optimization needs a scenario set")
    if len(scenarios) > 10_000:
        raise ConfigurationError("CVaR LP supports at most 10,000 scenario atoms")
    if model.kind != "linear":
        return optimize_blackbox(
            model, cs, catalog, policy, budget=budget, seed=seed, scenarios=scenarios
        )

    n = len(catalog)
    eta = policy.cvar_eta
    ordered = sorted(scenarios, key=lambda s: s.id)
    probs = np.array([s.probability for s in ordered])
    loss_rows = []
    for s in ordered:
        pert, _ = perturb_scores(catalog, s.score_deltas)
        loss_rows.append(composite_cost_vector(pert, policy))
    J = len(ordered)

    # Columns: w (n) | t+ | t- | u (J)
    ncols = n + 2 + J
    m_vec = model.coefficient_vector(catalog, "m")
    c = np.zeros(ncols)
    c[:n] = -m_vec

    A_w, b_w, _ = _assemble_ub(cs, catalog, policy)
    blocks = []
    rhs = []
    if A_w.size:
        wide = np.zeros((A_w.shape[0], ncols))
        wide[:, :n] = A_w
        blocks.append(wide)
        rhs.extend(b_w.tolist())
    tail = np.zeros(ncols)
    tail[n], tail[n + 1] = 1.0, -1.0
    tail[n + 2 :] = probs / eta
    blocks.append(tail.reshape(1, -1))
    rhs.append(cs.cvar_cap)
    for j, row in enumerate(loss_rows):
        r = np.zeros(ncols)
        r[:n] = row
        r[n], r[n + 1] = -1.0, 1.0
        r[n + 2 + j] = -1.0
        blocks.append(r.reshape(1, -1))
        rhs.append(0.0)
    A_ub = np.vstack(blocks)
    b_ub = np.asarray(rhs)
    A_eq = np.zeros((1, ncols))
    A_eq[0, :n] = 1.0

    res = lp.solve_lp(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0])
    if res.status == "infeasible":
        raise _lp_infeasible_error(cs, catalog)
    if res.status != "optimal":
        raise ArithmeticError(f"CVaR LP returned {res.status}")
    w = res.x[:n]
    out = _finish(w, cs, catalog, policy, model, "exact-lp", scenarios,
                  iterations=res.iterations)
    if out.risk.cvar is not None and out.risk.cvar > cs.cvar_cap + 1e-7:
        raise ArithmeticError(
            f"CVaR LP solution violates the tail cap on recomputation "
            f"({out.risk.cvar} > {cs.cvar_cap})"
        )
    return out


def optimize_blackbox(
    model: ReturnModel,
    cs: ConstraintSet,
    catalog: CategoryCatalog,
    policy: PolicyParameters,
    budget: int,
    seed: int,
    scenarios: Sequence[Scenario] = (),
    cvar_samples: int = 10_000,
) -> OptimizationResult:
    """Seeded multi-start pairwise-exchange search over the feasible region.

    Starts are Dirichlet draws repaired by projection plus the minimum
    composite-risk vertex (so at least one start survives tight caps).
    Moves shift delta between two coordinates, reproject, and accept on
    improvement; delta halves from 0.1 down to 1e-5 on stagnation.  Only
    feasible points are ever accepted, so the result is feasible by
    construction.  Deterministic for a fixed seed.
    """
    if budget < 1:
        raise ConfigurationError("evaluation budget must be >= 1")
    ensure_feasible(cs, catalog)
    n = len(catalog)
    rng = np.random.default_rng(seed)
    evaluations = 0

    check_cvar = cs.cvar_cap is not None and policy.cvar_eta is not None and scenarios

    def feasible(p: Portfolio) -> bool:
        summary = composite_risk(p, catalog, policy)
        if check_constraints(p, cs, catalog, summary):
            return False
        if check_cvar:
            es = cvar_risk(p, catalog, policy, scenarios, cvar_samples, seed)
            if es > cs.cvar_cap + 1e-9:
                return False
        return True

    def evaluate(p: Portfolio) -> float:
        nonlocal evaluations
        evaluations += 1
        return evaluate_return(model, p, catalog)

    # Anchor start: the minimum-composite vertex, feasible whenever any
    # point can satisfy a linear risk cap.
    A, b, _ = _assemble_ub(cs, catalog, policy)
    anchor = lp.solve_lp(
        composite_cost_vector(catalog, policy),
        A_ub=A if A.size else None, b_ub=b if b.size else None,
        A_eq=np.ones((1, n)), b_eq=[1.0],
    )
    starts: list[Portfolio] = []
    if anchor.status == "optimal":
        starts.append(Portfolio(tuple(float(x) for x in anchor.x), catalog.version))
    n_starts = max(1, min(8, budget // max(200, 4 * n * n)))
    for _ in range(n_starts):
        starts.append(project_to_feasible(rng.dirichlet(np.ones(n)), cs, catalog))

    best: tuple[float, int, Portfolio] | None = None
    for start_idx, start in enumerate(starts):
        if evaluations >= budget:
            break
        if not feasible(start):
            continue
        current, current_mu = start, evaluate(start)
        delta = 0.1
        while delta >= 1e-5 and evaluations < budget:
            improved = False
            for i in range(n):
                for j in range(n):
                    if i == j or evaluations >= budget:
                        continue
                    w = current.as_array().copy()
                    step = min(delta, w[i])
                    if step <= 0:
                        continue
                    w[i] -= step
                    w[j] += step
                    cand = project_to_feasible(w, cs, catalog)
                    if not feasible(cand):
                        continue
                    mu = evaluate(cand)
                    if mu > current_mu + 1e-12:
                        current, current_mu = cand, mu
                        improved = True
            if not improved:
                delta /= 2.0
        if best is None or current_mu > best[0] + 1e-15:
            best = (current_mu, start_idx, current)

    if best is None:
        raise InfeasibleError(
            "search found no feasible point within budget",
            conflicts=diagnose_infeasibility(cs, catalog) or ["cvar_cap"],
        )
    return _finish(
        best[2].as_array(), cs, catalog, policy, model, "black-box-search",
        scenarios, seed=seed, samples=evaluations, cvar_samples=cvar_samples,
    )


def optimize(
    model: ReturnModel,
    cs: ConstraintSet,
    catalog: CategoryCatalog,
    policy: PolicyParameters,
    solver: str = "auto",
    budget: int = 20_000,
    seed: int = 0,
    scenarios: Sequence[Scenario] = (),
) -> OptimizationResult:
    """Dispatch to the certified LP for linear models, search otherwise."""
    if solver == "auto":
        solver = "exact-lp" if model.kind == "linear" else "black-box-search"
    if solver == "exact-lp":
        if cs.cvar_cap is not None and scenarios:
            return optimize_cvar_constrained(model, cs, catalog, policy, scenarios, seed)
        return optimize_exact(model, cs, catalog, policy, scenarios)
    if solver == "black-box-search":
        return optimize_blackbox(model, cs, catalog, policy, budget, seed, scenarios)
    raise ConfigurationError(f"unknown solver {solver!r}")


def risk_parity_baseline(
    catalog: CategoryCatalog, policy: PolicyParameters
) -> Portfolio:
    """Equal-risk-contribution allocation, in closed form.

    With a linear composite the marginal risk of category i is its
    composite price c_i, so equal contributions w_i c_i force
    w_i proportional to 1 / c_i.  Zero-price categories make the
    allocation undefined and are rejected.
    """
    c = composite_cost_vector(catalog, policy)
    if np.any(c <= 0):
        bad = [catalog.ids[i] for i in np.nonzero(c <= 0)[0]]
        raise ConfigurationError(
            f"equal-risk-contribution weights are undefined for zero-risk categories: {bad}"
        )
    inv = 1.0 / c
    return Portfolio(tuple(inv / inv.sum()), catalog.version)


# ---------------------------------------------------------------------------
# What-if analysis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WhatifResult:
    result: OptimizationResult
    newly_binding: tuple[str, ...]
    no_longer_binding: tuple[str, ...]
    frontier: FrontierResult | None = None

    def as_dict(self) -> dict:
        return {
            "optimization": self.result.as_dict(),
            "newly_binding": list(self.newly_binding),
            "no_longer_binding": list(self.no_longer_binding),
            "frontier": self.frontier.as_dict() if self.frontier else None,
        }


def whatif(
    model: ReturnModel,
    base_cs: ConstraintSet,
    catalog: CategoryCatalog,
    base_policy: PolicyParameters,
    cs: ConstraintSet | None = None,
    policy: PolicyParameters | None = None,
    solver: str = "auto",
    budget: int = 20_000,
    seed: int = 0,
    scenarios: Sequence[Scenario] = (),
    sampler: SamplerConfig | None = None,
    base_result: OptimizationResult | None = None,
) -> WhatifResult:
    """Re-solve under overridden constraints/policy and diff binding status.

    ``cs``/``policy`` default to the base values (an empty override is a
    plain re-solve).  Infeasible override sets surface as InfeasibleError
    carrying a structured conflict list, never a crash.
    """
    eff_cs = cs if cs is not None else base_cs
    eff_policy = policy if policy is not None else base_policy
    ensure_feasible(eff_cs, catalog)
    if base_result is None:
        base_result = optimize(
            model, base_cs, catalog, base_policy,
            solver=solver, budget=budget, seed=seed, scenarios=scenarios,
        )
    new_result = optimize(
        model, eff_cs, catalog, eff_policy,
        solver=solver, budget=budget, seed=seed, scenarios=scenarios,
    )
    before = set(base_result.binding_constraints)
    after = set(new_result.binding_constraints)
    frontier = None
    if sampler is not None:
        frontier = build_frontier(eff_cs, catalog, eff_policy, model, sampler)
    return WhatifResult(
        result=new_result,
        newly_binding=tuple(sorted(after - before)),
        no_longer_binding=tuple(sorted(before - after)),
        frontier=frontier,
    )
