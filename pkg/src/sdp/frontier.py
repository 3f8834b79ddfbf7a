"""Frontier construction: sample, evaluate, filter dominated, fit envelope.

Candidates are sampled inside the weight polytope (off-polytope draws are
repaired by projection, not rejected, so sample counts stay predictable
near tight bands), scored as (sigma, mu) pairs, reduced to the
nondominated staircase, and capped with the concave upper envelope.
Everything is deterministic for a fixed seed, and candidate evaluation
is order-stable so parallel and serial builds agree bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .core import (
    CategoryCatalog,
    ConstraintSet,
    PolicyParameters,
    Portfolio,
    constraint_status,
    ensure_feasible,
    project_to_feasible,
)
from .errors import ConfigurationError
from .returns import ReturnModel, evaluate_return
from .risk import composite_risk

MAX_GRID_POINTS = 10_000_000


@dataclass(frozen=True)
class SamplerConfig:
    method: str  # "grid" | "dirichlet"
    seed: int
    count: int | None = None
    resolution: int | None = None
    concentration: float = 1.0

    def __post_init__(self):
        if self.method not in ("grid", "dirichlet"):
            raise ConfigurationError(f"unknown sampling method {self.method!r}")
        if self.method == "grid" and (self.resolution is None or self.resolution < 1):
            raise ConfigurationError("grid sampling needs a resolution >= 1")
        if self.method == "dirichlet" and (self.count is None or self.count < 1):
            raise ConfigurationError("dirichlet sampling needs a count >= 1")
        if self.concentration <= 0:
            raise ConfigurationError("dirichlet concentration must be > 0")

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "seed": self.seed,
            "count": self.count,
            "resolution": self.resolution,
            "concentration": self.concentration,
        }


@dataclass(frozen=True)
class CandidatePoint:
    portfolio: Portfolio
    mu: float
    sigma: float
    feasible: bool
    dominated: bool = False

    def as_dict(self) -> dict:
        return {
            "weights": list(self.portfolio.weights),
            "mu": self.mu,
            "sigma": self.sigma,
            "feasible": self.feasible,
            "dominated": self.dominated,
        }


@dataclass(frozen=True)
class FrontierResult:
    candidates: tuple[CandidatePoint, ...]
    pareto: tuple[CandidatePoint, ...]
    hull: tuple[tuple[float, float], ...]
    sampler_config: Mapping[str, object]

    def as_dict(self) -> dict:
        return {
            "candidates": [c.as_dict() for c in self.candidates],
            "pareto": [c.as_dict() for c in self.pareto],
            "hull": [list(v) for v in self.hull],
            "sampler": dict(self.sampler_config),
        }


def _grid_compositions(n: int, resolution: int):
    """All nonnegative integer n-tuples summing to ``resolution`` (stars and
    bars over sorted bar positions, so the order is lexicographic)."""
    total = resolution + n - 1
    for bars in combinations(range(total), n - 1):
        prev, counts = -1, []
        for b in bars:
            counts.append(b - prev - 1)
            prev = b
        counts.append(total - prev - 1)
        yield counts


def sample_candidates(
    cs: ConstraintSet,
    catalog: CategoryCatalog,
    sampler: SamplerConfig,
) -> tuple[Portfolio, ...]:
    """Feasible candidate portfolios per the sampler configuration.

    Grid mode enumerates integer compositions of the resolution and
    projects each onto the polytope, deduplicating repaired collisions.
    Dirichlet mode projects seeded draws; duplicates are kept so the
    effective count matches the request.
    """
    ensure_feasible(cs, catalog)
    n = len(catalog)
    if sampler.method == "grid":
        r = sampler.resolution
        n_points = math.comb(r + n - 1, n - 1)
        if n_points > MAX_GRID_POINTS:
            raise ConfigurationError(
                f"grid resolution {r} over {n} categories yields {n_points} points; "
                "use dirichlet sampling instead"
            )
        out, seen = [], set()
        for counts in _grid_compositions(n, r):
            p = project_to_feasible(np.asarray(counts, dtype=float) / r, cs, catalog)
            key = tuple(int(round(w * 1e9)) for w in p.weights)
            if key not in seen:
                seen.add(key)
                out.append(p)
        return tuple(out)
    rng = np.random.default_rng(sampler.seed)
    draws = rng.dirichlet(np.full(n, sampler.concentration), size=sampler.count)
    return tuple(project_to_feasible(row, cs, catalog) for row in draws)


def pareto_filter(points: Sequence[CandidatePoint]) -> list[CandidatePoint]:
    """Nondominated points, sigma-ascending, exact (sigma, mu) ties deduplicated.

    A point is dominated when some other point has sigma <= and mu >= with
    at least one strict inequality.  Sorting by (sigma asc, mu desc, input
    index) reduces the filter to one sweep keeping strictly rising mu.
    """
    order = sorted(range(len(points)), key=lambda i: (points[i].sigma, -points[i].mu, i))
    kept: list[CandidatePoint] = []
    best_mu = -math.inf
    for i in order:
        if points[i].mu > best_mu:
            kept.append(points[i])
            best_mu = points[i].mu
    return kept


def fit_upper_envelope(
    pareto: Sequence[CandidatePoint] | Sequence[tuple[float, float]],
) -> list[tuple[float, float]]:
    """Vertices of the concave majorant of a sigma-sorted nondominated set.

    Monotone-chain scan keeping only right turns, so consecutive hull
    slopes are nonincreasing and every input point lies on or below the
    piecewise-linear envelope.
    """
    if not pareto:
        raise ValueError("cannot fit an envelope through zero points")
    pts = [
        (p.sigma, p.mu) if isinstance(p, CandidatePoint) else (float(p[0]), float(p[1]))
        for p in pareto
    ]
    hull: list[tuple[float, float]] = []
    for pt in pts:
        while len(hull) >= 2:
            (ax, ay), (bx, by) = hull[-2], hull[-1]
            if (bx - ax) * (pt[1] - ay) - (by - ay) * (pt[0] - ax) >= 0:
                hull.pop()  # middle point is under or on the chord
            else:
                break
        hull.append(pt)
    return hull


def hull_value(hull: Sequence[tuple[float, float]], sigma: float) -> float:
    """Envelope height at ``sigma`` (clamped to the hull's sigma range)."""
    if not hull:
        raise ValueError("empty hull")
    if sigma <= hull[0][0]:
        return hull[0][1]
    if sigma >= hull[-1][0]:
        return hull[-1][1]
    for (x0, y0), (x1, y1) in zip(hull, hull[1:]):
        if x0 <= sigma <= x1:
            if x1 == x0:
                return max(y0, y1)
            return y0 + (y1 - y0) * (sigma - x0) / (x1 - x0)
    return hull[-1][1]


def evaluate_candidates(
    portfolios: Sequence[Portfolio],
    model: ReturnModel,
    catalog: CategoryCatalog,
    policy: PolicyParameters,
    cs: ConstraintSet,
    workers: int = 1,
) -> list[CandidatePoint]:
    """Score portfolios as (sigma, mu) pairs with full-feasibility flags.

    Feasibility covers the weight polytope plus the linear risk checks
    (risk cap, component caps, exposure budget); tail caps need scenario
    machinery and are left to the optimizer.  Reduction is by input index
    so threaded and serial runs produce identical results.
    """

    def score(p: Portfolio) -> CandidatePoint:
        summary = composite_risk(p, catalog, policy)
        mu = evaluate_return(model, p, catalog)
        feasible = all(
            s.status != "violated" for s in constraint_status(p, cs, catalog, summary)
        )
        return CandidatePoint(p, mu, summary.composite, feasible)

    if workers <= 1:
        return [score(p) for p in portfolios]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(score, portfolios))


def build_frontier(
    cs: ConstraintSet,
    catalog: CategoryCatalog,
    policy: PolicyParameters,
    model: ReturnModel,
    sampler: SamplerConfig,
    workers: int = 1,
) -> FrontierResult:
    """Sample, evaluate, filter, and fit; the full pipeline in one call."""
    portfolios = sample_candidates(cs, catalog, sampler)
    scored = evaluate_candidates(portfolios, model, catalog, policy, cs, workers)
    pareto = pareto_filter(scored)
    pareto_keys = {id(p) for p in pareto}
    candidates = tuple(
        replace(c, dominated=id(c) not in pareto_keys) for c in scored
    )
    hull = fit_upper_envelope(pareto)
    return FrontierResult(
        candidates=candidates,
        pareto=tuple(replace(p, dominated=False) for p in pareto),
        hull=tuple(hull),
        sampler_config=sampler.as_dict(),
    )
