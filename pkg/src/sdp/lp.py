"""Dense two-phase simplex solver with Bland's anti-cycling rule.

Solves   min c.x   s.t.   A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0.

Pivot selection is fully deterministic (Bland: lowest-index entering
column, ratio ties broken by lowest basis index), so repeated solves of
the same problem produce bit-identical bases and solutions.  Intended
for the small/medium programs this engine generates (tens of weight
variables plus scenario auxiliaries); no sparsity, no revised simplex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_PIVOT_EPS = 1e-11
_COST_EPS = 1e-9
_FEAS_EPS = 1e-8


@dataclass(frozen=True)
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    objective: float | None
    iterations: int


def solve_lp(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    maxiter: int = 50_000,
) -> LpResult:
    """Minimize ``c @ x`` over the given polyhedron with ``x >= 0``."""
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    A_ub = np.empty((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.empty(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.empty((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.empty(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    if A_ub.shape[0] != b_ub.shape[0] or A_eq.shape[0] != b_eq.shape[0]:
        raise ValueError("constraint matrix / rhs size mismatch")

    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq

    # Standard form: slack per <= row, then flip rows to make rhs >= 0.
    A = np.zeros((m, n + m_ub))
    A[:m_ub, :n] = A_ub
    A[:m_ub, n : n + m_ub] = np.eye(m_ub)
    A[m_ub:, :n] = A_eq
    b = np.concatenate([b_ub, b_eq])
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    n_slack = n + m_ub

    # Rows whose (possibly flipped) slack still has coefficient +1 can use
    # it as the initial basic variable; the rest get an artificial.
    art_rows = [i for i in range(m) if i >= m_ub or neg[i]]
    n_art = len(art_rows)
    T = np.zeros((m + 1, n_slack + n_art + 1))
    T[:m, :n_slack] = A
    T[:m, -1] = b
    basis = np.empty(m, dtype=int)
    for i in range(m_ub):
        basis[i] = n + i
    for k, i in enumerate(art_rows):
        T[i, n_slack + k] = 1.0
        basis[i] = n_slack + k

    iterations = 0

    def _pivot(tab: np.ndarray, row: int, col: int) -> None:
        tab[row] /= tab[row, col]
        for r in range(tab.shape[0]):
            if r != row and abs(tab[r, col]) > _PIVOT_EPS:
                tab[r] -= tab[r, col] * tab[row]
        basis[row] = col

    def _run(tab: np.ndarray, ncols: int) -> str:
        nonlocal iterations
        while True:
            if iterations >= maxiter:
                raise ArithmeticError("simplex iteration limit exceeded")
            # Bland: entering = lowest index with negative reduced cost.
            col = -1
            for j in range(ncols):
                if tab[-1, j] < -_COST_EPS:
                    col = j
                    break
            if col < 0:
                return "optimal"
            # Ratio test; ties -> lowest basis variable index (Bland).
            best_ratio, best_row = np.inf, -1
            for i in range(m):
                a = tab[i, col]
                if a > _PIVOT_EPS:
                    ratio = tab[i, -1] / a
                    if ratio < best_ratio - 1e-12 or (
                        abs(ratio - best_ratio) <= 1e-12
                        and (best_row < 0 or basis[i] < basis[best_row])
                    ):
                        best_ratio, best_row = ratio, i
            if best_row < 0:
                return "unbounded"
            _pivot(tab, best_row, col)
            iterations += 1

    # Phase 1: minimize the sum of artificials.
    if n_art:
        T[-1, n_slack : n_slack + n_art] = 1.0
        for i in art_rows:
            T[-1] -= T[i]
        status = _run(T, n_slack + n_art)
        if status != "optimal" or T[-1, -1] < -_FEAS_EPS:
            return LpResult("infeasible", None, None, iterations)
        # Drive remaining artificials out of the basis; a row with no
        # usable original column is redundant and can host the artificial
        # at zero forever.
        for i in range(m):
            if basis[i] >= n_slack:
                for j in range(n_slack):
                    if abs(T[i, j]) > 1e-9:
                        _pivot(T, i, j)
                        iterations += 1
                        break

    # Phase 2: restore the true objective over original + slack columns.
    T[-1, :] = 0.0
    T[-1, :n] = c
    for i in range(m):
        if basis[i] < n_slack and abs(T[-1, basis[i]]) > _PIVOT_EPS:
            T[-1] -= T[-1, basis[i]] * T[i]
    # Artificial columns are frozen out of phase 2 by pricing them high.
    if n_art:
        T[-1, n_slack : n_slack + n_art] = 1.0

    status = _run(T, n_slack)
    if status == "unbounded":
        return LpResult("unbounded", None, None, iterations)

    x = np.zeros(n)
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = T[i, -1]
    np.clip(x, 0.0, None, out=x)
    return LpResult("optimal", x, float(c @ x), iterations)
