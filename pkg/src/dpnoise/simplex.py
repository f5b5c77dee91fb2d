"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Solves ``minimize c @ x`` subject to ``A[i] @ x (<= or >=) b[i]`` and ``x >= 0``.
Pivoting is fully deterministic. After the final pivot the primal point and the
row duals are recomputed from the original data with a direct solve on the
optimal basis, which removes the error accumulated in the tableau.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-11
COST_TOL = 1e-11
FEAS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SimplexResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: np.ndarray
    fun: float
    # d(fun)/d(b[i]); nonpositive for binding "<=" rows, nonnegative for ">=" rows
    duals: np.ndarray
    iterations: int


class _Tableau:
    def __init__(self, rows: np.ndarray, rhs: np.ndarray, basis: list[int]):
        m, n = rows.shape
        self.t = np.zeros((m + 1, n + 1))
        self.t[:m, :n] = rows
        self.t[:m, n] = rhs
        self.basis = list(basis)
        self.iterations = 0

    @property
    def m(self) -> int:
        return self.t.shape[0] - 1

    def set_objective(self, cost: np.ndarray) -> None:
        m = self.m
        obj = np.zeros(self.t.shape[1])
        obj[: cost.size] = cost
        cb = obj[self.basis]
        obj -= cb @ self.t[:m]
        self.t[m] = obj

    def pivot(self, r: int, j: int) -> None:
        t = self.t
        t[r] /= t[r, j]
        col = t[:, j].copy()
        col[r] = 0.0
        nz = np.flatnonzero(col)
        if nz.size:
            t[nz] -= np.outer(col[nz], t[r])
        self.basis[r] = j
        self.iterations += 1

    def run(self, allowed: np.ndarray) -> str:
        """Iterate with Bland's rule over columns where ``allowed`` is true."""
        m = self.m
        t = self.t
        while True:
            reduced = t[m, :-1]
            candidates = np.flatnonzero((reduced < -COST_TOL) & allowed)
            if candidates.size == 0:
                return "optimal"
            j = int(candidates[0])
            col = t[:m, j]
            rows = np.flatnonzero(col > PIVOT_TOL)
            if rows.size == 0:
                return "unbounded"
            ratios = t[rows, -1] / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
            r = int(min(ties, key=lambda i: self.basis[i]))
            self.pivot(r, j)


def solve_dense(c, A, b, senses) -> SimplexResult:
    c = np.asarray(c, dtype=np.float64)
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    b = np.asarray(b, dtype=np.float64).copy()
    senses = list(senses)
    m, n = A.shape
    if len(senses) != m or b.size != m or c.size != n:
        raise ValueError("inconsistent LP dimensions")

    slack_sign = np.array([1.0 if s == "<=" else -1.0 for s in senses])
    if any(s not in ("<=", ">=") for s in senses):
        raise ValueError("row senses must be '<=' or '>='")
    flip = np.where(b < 0, -1.0, 1.0)
    rows = np.hstack([A, np.diag(slack_sign)]) * flip[:, None]
    rhs = b * flip
    standard = rows.copy()

    needs_art = np.flatnonzero(slack_sign * flip < 0)
    n_art = needs_art.size
    full = np.zeros((m, n + m + n_art))
    full[:, : n + m] = rows
    basis = [n + i for i in range(m)]
    for a, i in enumerate(needs_art):
        full[i, n + m + a] = 1.0
        basis[i] = n + m + a
    tab = _Tableau(full, rhs, basis)
    n_cols = n + m + n_art

    if n_art:
        phase1 = np.zeros(n_cols)
        phase1[n + m :] = 1.0
        tab.set_objective(phase1)
        tab.run(np.ones(n_cols, dtype=bool))
        if -tab.t[tab.m, -1] > FEAS_TOL * max(1.0, np.abs(rhs).max()):
            return SimplexResult("infeasible", np.full(n, np.nan), np.nan, np.full(m, np.nan), tab.iterations)
        # drive remaining artificials out of the basis, dropping redundant rows
        keep = []
        for r in range(tab.m):
            if tab.basis[r] >= n + m:
                nz = np.flatnonzero(np.abs(tab.t[r, : n + m]) > PIVOT_TOL)
                if nz.size == 0:
                    continue
                tab.pivot(r, int(nz[0]))
            keep.append(r)
        if len(keep) < tab.m:
            tab.t = np.vstack([tab.t[keep], tab.t[-1:]])
            tab.basis = [tab.basis[r] for r in keep]
        tab.t = np.hstack([tab.t[:, : n + m], tab.t[:, -1:]])
    else:
        keep = list(range(m))

    cost = np.concatenate([c, np.zeros(m)])
    tab.set_objective(cost)
    status = tab.run(np.ones(n + m, dtype=bool))
    if status == "unbounded":
        return SimplexResult("unbounded", np.full(n, np.nan), -np.inf, np.full(m, np.nan), tab.iterations)

    # Refactor on the final basis from the untouched standard-form rows.
    basis = np.array(tab.basis)
    B = standard[keep][:, basis]
    xb = np.linalg.solve(B, rhs[keep])
    x_full = np.zeros(n + m)
    x_full[basis] = xb
    np.maximum(x_full, 0.0, out=x_full)
    y_std = np.linalg.solve(B.T, cost[basis])
    duals = np.zeros(m)
    duals[keep] = y_std * flip[keep]
    x = x_full[:n]
    return SimplexResult("optimal", x, float(c @ x), duals, tab.iterations)
