"""Per-category return attribution via permutation-averaged marginals.

Coalition worth is the subset-restricted, renormalized return defined in
the returns module.  Attribution is purely explanatory: nothing here
feeds back into frontier construction or optimization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .core import CategoryCatalog, Portfolio
from .errors import ConfigurationError
from .returns import ReturnModel, evaluate_subset_return

EXACT_MAX_CATEGORIES = 20


@dataclass(frozen=True)
class AttributionResult:
    phi: Mapping[str, float]
    method: str  # "exact" | "monte-carlo"
    grand_value: float
    baseline_value: float
    permutations: int | None = None
    seed: int | None = None
    stderr: Mapping[str, float] | None = None

    def as_dict(self) -> dict:
        return {
            "phi": dict(self.phi),
            "method": self.method,
            "grand_value": self.grand_value,
            "baseline_value": self.baseline_value,
            "permutations": self.permutations,
            "seed": self.seed,
            "stderr": dict(self.stderr) if self.stderr is not None else None,
        }


def _coalition_value(
    model: ReturnModel, base: Portfolio, catalog: CategoryCatalog,
    mask: int, memo: dict[int, float],
) -> float:
    value = memo.get(mask)
    if value is None:
        ids = [catalog.ids[i] for i in range(len(catalog)) if mask >> i & 1]
        value = evaluate_subset_return(model, ids, base, catalog)
        memo[mask] = value
    return value


def shapley_exact(
    model: ReturnModel, base: Portfolio, catalog: CategoryCatalog
) -> AttributionResult:
    """Exact attribution by full subset enumeration (2^n coalition values)."""
    n = len(catalog)
    if n > EXACT_MAX_CATEGORIES:
        raise ConfigurationError(
            f"exact attribution caps at {EXACT_MAX_CATEGORIES} categories "
            f"(got {n}); use the Monte Carlo estimator"
        )
    coeff = [
        math.factorial(k) * math.factorial(n - k - 1) / math.factorial(n)
        for k in range(n)
    ]
    memo: dict[int, float] = {}
    phi = np.zeros(n)
    for mask in range(1 << n):
        k = bin(mask).count("1")
        if k == n:
            continue
        base_value = _coalition_value(model, base, catalog, mask, memo)
        for i in range(n):
            if not mask >> i & 1:
                with_i = _coalition_value(model, base, catalog, mask | 1 << i, memo)
                phi[i] += coeff[k] * (with_i - base_value)
    return AttributionResult(
        phi={cid: float(v) for cid, v in zip(catalog.ids, phi)},
        method="exact",
        grand_value=memo[(1 << n) - 1],
        baseline_value=memo[0],
    )


def shapley_montecarlo(
    model: ReturnModel,
    base: Portfolio,
    catalog: CategoryCatalog,
    permutations: int,
    seed: int,
) -> AttributionResult:
    """Permutation-sampling estimator with antithetic pairs.

    Each sampled permutation contributes the marginal-gain chain along its
    prefixes; its reversal is processed too (antithetic pairing halves the
    number of raw draws per seed, which changes which permutations a given
    seed visits but reduces variance).  Standard errors are the per-category
    sample deviations of the marginals across processed permutations.
    """
    if permutations < 100:
        raise ConfigurationError("Monte Carlo attribution needs at least 100 permutations")
    n = len(catalog)
    rng = np.random.default_rng(seed)
    memo: dict[int, float] = {}
    sums = np.zeros(n)
    sq_sums = np.zeros(n)

    def process(perm: np.ndarray) -> None:
        mask = 0
        prev = _coalition_value(model, base, catalog, 0, memo)
        for i in perm:
            mask |= 1 << int(i)
            cur = _coalition_value(model, base, catalog, mask, memo)
            gain = cur - prev
            sums[i] += gain
            sq_sums[i] += gain * gain
            prev = cur

    done = 0
    while done < permutations:
        perm = rng.permutation(n)
        process(perm)
        done += 1
        if done < permutations:
            process(perm[::-1])
            done += 1

    mean = sums / permutations
    var = np.maximum(sq_sums / permutations - mean**2, 0.0)
    if permutations > 1:
        var *= permutations / (permutations - 1)
    stderr = np.sqrt(var / permutations)
    return AttributionResult(
        phi={cid: float(v) for cid, v in zip(catalog.ids, mean)},
        method="monte-carlo",
        grand_value=_coalition_value(model, base, catalog, (1 << n) - 1, memo),
        baseline_value=_coalition_value(model, base, catalog, 0, memo),
        permutations=permutations,
        seed=seed,
        stderr={cid: float(s) for cid, s in zip(catalog.ids, stderr)},
    )
