"""Truncated relaxed linear programs on the symmetric half-line.

Variables are ``p_0, ..., p_N`` where ``p_k`` (k >= 1) is the mass placed at
each of ``+k`` and ``-k``. Rows, for ``i = 0 .. N - sensitivity``::

    c0(i) p_0 + (e^eps - 1) sum_{1 <= k < i} p_k + e^eps sum_{max(i,1) <= k <= i+sens-1} p_k
        <= delta + (e^eps - 1) / 2

with ``c0(0) = (1 + e^eps)/2`` and ``c0(i) = (e^eps - 1)/2`` otherwise, plus the
mass row ``p_0/2 + sum_{k>=1} p_k >= 1/2``. At ``eps = 0`` this is the plain
window constraint family.

Dropping the variables beyond ``N`` and the rows beyond ``N - sensitivity``
never raises the optimum above the untruncated one: any dual solution of the
truncated problem extends by zeros to a dual solution of the full problem. The
truncated optimum is therefore always a valid lower bound, and it equals the
full optimum whenever the solution leaves the boundary empty.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .core import BoundReport, CostFn, Finite1D, PrivacyParams
from .errors import InvalidParams, LpInfeasible, LpUnbounded, TruncationTooLarge, TruncationTooSmall
from .simplex import solve_dense

log = logging.getLogger(__name__)

MAX_TRUNCATION = 100_000
DENSE_VAR_LIMIT = 800
BOUNDARY_TOL = 1e-10

OPTIMAL = "Optimal"
TRUNCATION_SUSPECT = "TruncationSuspect"
INFEASIBLE = "Infeasible"


def required_truncation(sensitivity: int, epsilon: float, delta: float) -> int:
    """Smallest admissible N: the loosest of the delta rule and the epsilon rule."""
    rules = []
    if delta > 0:
        rules.append(math.ceil((1.0 / (2.0 * delta) + 4.0) * sensitivity - 1e-9))
    if epsilon > 0:
        rules.append(math.ceil(12.0 * sensitivity / epsilon - 1e-9))
    if not rules:
        raise InvalidParams("(epsilon, delta) = (0,0) admits no finite-cost mechanism")
    return min(rules)


def default_truncation(sensitivity: int, epsilon: float, delta: float) -> int:
    rules = []
    if delta > 0:
        rules.append(math.ceil((1.0 / (2.0 * delta) + 6.0) * sensitivity - 1e-9))
    if epsilon > 0:
        rules.append(math.ceil(14.0 * sensitivity / epsilon - 1e-9))
    if not rules:
        raise InvalidParams("(epsilon, delta) = (0,0) admits no finite-cost mechanism")
    n = min(rules)
    if n > MAX_TRUNCATION:
        raise TruncationTooLarge(
            f"default truncation {n} exceeds the limit {MAX_TRUNCATION}; pass a smaller --truncation"
        )
    return n


@dataclass(frozen=True, eq=False)
class LpProblem:
    cost: CostFn
    sensitivity: int
    epsilon: float
    delta: float
    truncation: int
    objective: np.ndarray

    @property
    def num_vars(self) -> int:
        return self.truncation + 1

    @property
    def num_rows(self) -> int:
        """Number of privacy rows (the mass row is separate)."""
        return self.truncation - self.sensitivity + 1

    @property
    def growth(self) -> float:
        return math.exp(self.epsilon)

    @property
    def window_coef(self) -> float:
        return self.growth

    @property
    def tail_coef(self) -> float:
        return math.expm1(self.epsilon)

    @property
    def row_rhs(self) -> float:
        return self.delta + math.expm1(self.epsilon) / 2.0

    def p0_coef(self, row: int) -> float:
        return (1.0 + self.growth) / 2.0 if row == 0 else self.tail_coef / 2.0

    def window(self, row: int) -> tuple[int, int]:
        """Inclusive index range of p_k (k >= 1) carrying the window coefficient."""
        return max(row, 1), row + self.sensitivity - 1

    def mass_row(self) -> np.ndarray:
        m = np.ones(self.num_vars)
        m[0] = 0.5
        return m

    def dense_rows(self) -> np.ndarray:
        rows = np.zeros((self.num_rows, self.num_vars))
        for i in range(self.num_rows):
            rows[i, 0] = self.p0_coef(i)
            if i >= 2 and self.tail_coef:
                rows[i, 1:i] = self.tail_coef
            lo, hi = self.window(i)
            rows[i, lo : hi + 1] = self.window_coef
        return rows

    def row_activity(self, p: np.ndarray) -> np.ndarray:
        """Left-hand side of every privacy row at the half-line point ``p``."""
        prefix = np.concatenate([[0.0], np.cumsum(p[1:])])  # prefix[j] = sum_{1..j}
        i = np.arange(self.num_rows)
        hi = i + self.sensitivity - 1
        lo = np.maximum(i, 1)
        window = prefix[hi] - prefix[lo - 1]
        tail = prefix[np.maximum(i - 1, 0)]
        p0 = np.where(i == 0, (1.0 + self.growth) / 2.0, self.tail_coef / 2.0)
        return p0 * p[0] + self.tail_coef * tail + self.window_coef * window


def build_relaxed_lp(cost: CostFn, sensitivity: int, epsilon: float, delta: float, truncation: int) -> LpProblem:
    PrivacyParams(epsilon, delta, sensitivity).require_budget()
    truncation = int(truncation)
    if truncation > MAX_TRUNCATION:
        raise TruncationTooLarge(f"truncation {truncation} exceeds the limit {MAX_TRUNCATION}")
    required = required_truncation(sensitivity, epsilon, delta)
    if truncation < required:
        raise TruncationTooSmall(truncation, required)
    objective = 2.0 * cost.axis_values(np.arange(truncation + 1))
    objective[0] = 0.0
    objective.setflags(write=False)
    return LpProblem(cost, int(sensitivity), float(epsilon), float(delta), truncation, objective)


@dataclass(frozen=True, eq=False)
class LpSolution:
    optimal_value: float
    pmf: Finite1D
    status: str
    boundary_mass: float
    half_line: np.ndarray
    # Dual multipliers scaled so the dual objective is mu - (2 delta + e^eps - 1) sum(y).
    mu: float
    row_duals: np.ndarray
    solver: str

    def to_json(self, include_pmf: bool = False) -> dict:
        out = {
            "value": self.optimal_value,
            "status": self.status,
            "boundary_mass": self.boundary_mass,
            "truncation": self.half_line.size - 1,
            "solver": self.solver,
        }
        if include_pmf:
            out["pmf"] = {"type": "finite", "offset": self.pmf.offset, "probs": self.pmf.probs.tolist()}
        return out


def _solve_with_simplex(problem: LpProblem):
    A = np.vstack([problem.mass_row(), problem.dense_rows()])
    b = np.concatenate([[0.5], np.full(problem.num_rows, problem.row_rhs)])
    senses = [">="] + ["<="] * problem.num_rows
    res = solve_dense(problem.objective, A, b, senses)
    if res.status != "optimal":
        return res.status, None, None, None
    mu = res.duals[0] / 2.0
    y = -res.duals[1:] / 2.0
    return "optimal", res.x, mu, y


def _solve_with_highs(problem: LpProblem):
    """HiGHS on an equivalent sparse form using prefix-sum variables.

    With ``s_j = sum_{k=1..j} p_k`` every privacy row touches at most three
    variables, so the matrix stays linear in N. Rows keep their meaning, hence
    their duals are duals of the original problem.
    """
    N, sens = problem.truncation, problem.sensitivity
    nv = N + 1  # p_0..p_N, then s_1..s_N
    ns = N

    def s_col(j):
        return nv + j - 1

    growth, tail = problem.growth, problem.tail_coef
    rows, cols, vals = [], [], []
    # mass row, written as <= for linprog
    rows += [0, 0]
    cols += [0, s_col(N)]
    vals += [-0.5, -1.0]
    for i in range(problem.num_rows):
        r = i + 1
        rows.append(r)
        cols.append(0)
        vals.append(-0.0 + problem.p0_coef(i))
        hi = i + sens - 1
        if hi >= 1:
            rows.append(r)
            cols.append(s_col(hi))
            vals.append(growth)
        lo_minus = max(i, 1) - 1
        if lo_minus >= 1:
            # window start contributes -e^eps s_{i-1}, tail adds (e^eps - 1) s_{i-1}
            rows.append(r)
            cols.append(s_col(lo_minus))
            vals.append(tail - growth)
    A_ub = sparse.csr_matrix((vals, (rows, cols)), shape=(problem.num_rows + 1, nv + ns))
    b_ub = np.concatenate([[-0.5], np.full(problem.num_rows, problem.row_rhs)])

    er, ec, ev = [], [], []
    for j in range(1, N + 1):
        er += [j - 1, j - 1]
        ec += [s_col(j), j]
        ev += [1.0, -1.0]
        if j >= 2:
            er.append(j - 1)
            ec.append(s_col(j - 1))
            ev.append(-1.0)
    A_eq = sparse.csr_matrix((ev, (er, ec)), shape=(N, nv + ns))
    b_eq = np.zeros(N)
    c = np.concatenate([problem.objective, np.zeros(ns)])
    bounds = [(0, None)] * nv + [(None, None)] * ns
    res = linprog(
        c,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=bounds,
        method="highs-ds",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status == 2:
        return "infeasible", None, None, None
    if res.status == 3:
        return "unbounded", None, None, None
    if res.status != 0:
        raise RuntimeError(f"HiGHS failed: {res.message}")
    marg = res.ineqlin.marginals
    mu = -marg[0] / 2.0
    y = -marg[1:] / 2.0
    return "optimal", np.maximum(res.x[:nv], 0.0), mu, y


def solve_lp(problem: LpProblem, method: str = "auto") -> LpSolution:
    """Solve the truncated relaxed program.

    ``method`` is "simplex" (in-module dense simplex), "highs" or "auto", which
    uses the dense simplex up to ``DENSE_VAR_LIMIT`` variables.
    """
    if method == "auto":
        method = "simplex" if problem.num_vars <= DENSE_VAR_LIMIT else "highs"
    if method == "simplex":
        status, p, mu, y = _solve_with_simplex(problem)
    elif method == "highs":
        status, p, mu, y = _solve_with_highs(problem)
    else:
        raise InvalidParams(f"unknown LP method {method!r}")
    log.debug("lp N=%d method=%s status=%s", problem.truncation, method, status)
    if status == "unbounded":
        raise LpUnbounded("relaxed LP reported unbounded; objective is nonnegative so this is a construction bug")
    if status == "infeasible":
        raise LpInfeasible("relaxed LP is infeasible")

    value = math.fsum(problem.objective * p)
    tail_start = max(problem.truncation - problem.sensitivity, 1)
    boundary = 2.0 * math.fsum(p[tail_start:])
    two_sided = np.concatenate([p[:0:-1], p[:1], p[1:]])
    two_sided = two_sided / math.fsum(two_sided)
    pmf = Finite1D(-problem.truncation, two_sided)
    status_tag = OPTIMAL if boundary < BOUNDARY_TOL else TRUNCATION_SUSPECT
    p = np.array(p)
    p.setflags(write=False)
    y = np.array(y)
    y.setflags(write=False)
    return LpSolution(value, pmf, status_tag, boundary, p, float(mu), y, method)


def lp_lower_bound(cost: CostFn, params: PrivacyParams, truncation: int | None = None, method: str = "auto") -> BoundReport:
    params.require_budget()
    if truncation is None:
        truncation = default_truncation(params.sensitivity, params.epsilon, params.delta)
    problem = build_relaxed_lp(cost, params.sensitivity, params.epsilon, params.delta, truncation)
    sol = solve_lp(problem, method)
    notes = [f"truncation N={truncation}", f"solver={sol.solver}", f"boundary_mass={sol.boundary_mass:.3e}"]
    if sol.status != OPTIMAL:
        notes.append("solution touches the truncation boundary; value is a lower bound on the untruncated optimum")
    return BoundReport(sol.optimal_value, "lower", "lp", sol.status == OPTIMAL, tuple(notes))
