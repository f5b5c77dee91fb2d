"""Closed-form and certified bounds on the optimal expected noise cost."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .certificates import (
    build_cert_eps_delta_1d,
    build_cert_multi_eps_delta_l1,
    build_cert_multi_eps_delta_l2,
    build_cert_multi_l1_zero_delta,
    build_cert_multi_l2_zero_delta,
    certificate_from_lp_dual,
    verify_certificate,
)
from .core import (
    L1,
    L2,
    BoundReport,
    CostFn,
    PrivacyParams,
    expected_cost,
    inverse_two_delta,
    uniform_half_width,
)
from .errors import (
    DomainError,
    EpsilonZero,
    IntegralityViolated,
    InvalidCost,
    NegativeWeight,
    NoFeasibleCertificate,
)
from .lp import build_relaxed_lp, default_truncation, solve_lp
from .mechanisms import discrete_laplace

log = logging.getLogger(__name__)

MAX_SERIES_LENGTH = 200_000


def _fsum_costs(cost: CostFn, ks) -> float:
    return math.fsum(cost.axis(k) for k in ks)


# ---------------------------------------------------------------- (0, delta), one dimension


def zero_delta_condition(cost: CostFn, sensitivity: int, delta: float) -> bool:
    """Side condition under which the zero-delta series is a certified lower bound."""
    n = inverse_two_delta(delta)
    s = sensitivity
    lhs = cost.axis(1 + s * n)
    increments = math.fsum(cost.axis(1 + i * s) - cost.axis(i * s) for i in range(1, n + 1))
    return lhs >= 2.0 * (cost.axis(1) + increments)


def lb_zero_delta(cost: CostFn, sensitivity: int, delta: float) -> BoundReport:
    n = inverse_two_delta(delta)
    s = int(sensitivity)
    value = 2.0 * delta * _fsum_costs(cost, (1 + i * s for i in range(n)))
    ok = zero_delta_condition(cost, s, delta)
    notes = ["1/(2*delta) is an integer"]
    if not ok:
        notes.append(
            "side condition L(1 + s/(2 delta)) >= 2 (L(1) + sum of cost increments) fails; "
            "value is NOT a certified lower bound"
        )
    return BoundReport(value, "lower", "closed-form:zero-delta-1d", ok, tuple(notes))


def ub_uniform_1d(cost: CostFn, sensitivity: int, delta: float) -> BoundReport:
    h = uniform_half_width(sensitivity, delta)
    total = math.fsum([2.0 * cost.axis(i) for i in range(1, h)] + [cost.axis(h)])
    return BoundReport(total / (2 * h), "upper", "mechanism:uniform", True, (f"support [-{h}, {h - 1}]",))


# ---------------------------------------------------------------- (eps, delta), one dimension


@dataclass(frozen=True)
class EpsDeltaSeriesParams:
    """Geometric series ``a b^k`` whose partial sums reach one half after ``n_star`` terms."""

    a: float
    b: float
    n_star: float

    @classmethod
    def from_privacy(cls, epsilon: float, delta: float) -> "EpsDeltaSeriesParams":
        if epsilon < 0 or delta < 0 or (epsilon == 0 and delta == 0):
            raise DomainError("(epsilon, delta) = (0,0) admits no finite-cost mechanism")
        growth = math.exp(epsilon)
        a = (delta + math.expm1(epsilon) / 2.0) / growth
        b = math.exp(-epsilon)
        if delta == 0:
            n_star = math.inf
        elif epsilon == 0:
            n_star = 1.0 / (2.0 * delta)
        else:
            n_star = math.log1p(math.expm1(epsilon) / (2.0 * delta)) / epsilon
        return cls(a, b, n_star)

    def partial_sum(self, n: int) -> float:
        if self.b == 1.0:
            return self.a * n
        return self.a * -math.expm1(n * math.log(self.b)) / (1.0 - self.b)

    def series_value(self, cost: CostFn, sensitivity: int, n: int) -> float:
        return 2.0 * math.fsum(self.a * self.b**k * cost.axis(1 + k * sensitivity) for k in range(n))


def _lp_dual_bound(cost: CostFn, params: PrivacyParams, truncation: int | None, notes: list) -> BoundReport:
    if truncation is None:
        truncation = default_truncation(params.sensitivity, params.epsilon, params.delta)
    problem = build_relaxed_lp(cost, params.sensitivity, params.epsilon, params.delta, truncation)
    sol = solve_lp(problem)
    cert = certificate_from_lp_dual(sol.mu, sol.row_duals, cost, params)
    report = verify_certificate(cert, cost, params)
    notes.append(
        f"relaxed LP at N={truncation} ({sol.solver}, status {sol.status}) = {sol.optimal_value!r}; "
        f"its polished dual verifies with objective {report.objective!r}"
    )
    if not report.feasible:
        raise NoFeasibleCertificate(
            f"LP dual failed exact verification (worst violation {report.worst_violation!r})"
        )
    return BoundReport(report.objective, "lower", "lp-dual", True, tuple(notes))


def lb_eps_delta(
    cost: CostFn, sensitivity: int, epsilon: float, delta: float, truncation: int | None = None
) -> BoundReport:
    """Largest verified certificate objective; falls back to the LP dual."""
    params = PrivacyParams(epsilon, delta, sensitivity).require_budget()
    series = EpsDeltaSeriesParams.from_privacy(params.epsilon, params.delta)
    notes = [f"a={series.a!r} b={series.b!r} n*={series.n_star!r}"]
    best = None
    if math.isfinite(series.n_star):
        for n in sorted({math.floor(series.n_star), math.ceil(series.n_star)}):
            if n < 2 or n > MAX_SERIES_LENGTH:
                notes.append(f"n={n}: outside the supported series length")
                continue
            try:
                cert = build_cert_eps_delta_1d(cost, params.sensitivity, params.epsilon, params.delta, n)
            except NegativeWeight as exc:
                notes.append(f"n={n}: {exc}")
                continue
            report = verify_certificate(cert, cost, params)
            notes.append(
                f"n={n}: series certificate {'feasible' if report.feasible else 'infeasible'}, "
                f"objective {report.objective!r}, worst violation {report.worst_violation!r} "
                f"at {report.worst_constraint}"
            )
            if report.feasible and (best is None or report.objective > best[0]):
                best = (report.objective, n)
    if best is not None:
        return BoundReport(best[0], "lower", f"certificate:eps-delta-1d(n={best[1]})", True, tuple(notes))
    notes.append("no series certificate verified; using the relaxed LP dual")
    return _lp_dual_bound(cost, params, truncation, notes)


def ub_laplace(cost: CostFn, sensitivity: int, epsilon: float) -> BoundReport:
    if epsilon <= 0:
        raise EpsilonZero()
    dist = discrete_laplace(PrivacyParams(epsilon, 0.0, sensitivity))
    return BoundReport(expected_cost(dist, cost), "upper", "mechanism:laplace", True, (f"lambda={dist.lam!r}",))


# ---------------------------------------------------------------- multi-dimensional


def _require_l1_l2(cost: CostFn) -> None:
    if not isinstance(cost, (L1, L2)):
        raise InvalidCost(f"multi-dimensional bounds support the l1 and l2 costs, got {cost.name}")


def lb_multi_zero_delta(cost: CostFn, dims: int, sensitivity: int, delta: float) -> BoundReport:
    _require_l1_l2(cost)
    d, s = int(dims), int(sensitivity)
    PrivacyParams(0.0, delta, s, d).require_budget()
    if isinstance(cost, L1):
        value = d * s / (4.0 * delta) - (s - 1) * d / 2.0
        builder = build_cert_multi_l1_zero_delta
    else:
        inverse_two_delta(delta)
        value = (
            d * s * s / (12.0 * delta * delta)
            + (1.0 / s - 1.0) * d * s * s / (4.0 * delta)
            + (1 - s) * d / 2.0
            + d * s * s / 6.0
        )
        builder = build_cert_multi_l2_zero_delta
    try:
        cert = builder(d, s, delta)
    except IntegralityViolated as exc:
        return BoundReport(value, "lower", "closed-form:multi-zero-delta", False, (str(exc),))
    report = verify_certificate(cert, cost, PrivacyParams(0.0, delta, s, d))
    agree = abs(report.objective - value) <= 1e-9 * max(1.0, abs(value))
    ok = report.feasible and agree
    notes = [f"certificate objective {report.objective!r}, worst violation {report.worst_violation!r}"]
    if not agree:
        notes.append("certificate objective disagrees with the closed form")
    return BoundReport(value, "lower", "closed-form:multi-zero-delta", ok, tuple(notes))


def ub_uniform_multi(cost: CostFn, dims: int, sensitivity: int, delta: float) -> BoundReport:
    _require_l1_l2(cost)
    d, s = int(dims), int(sensitivity)
    h = uniform_half_width(s, delta)
    if isinstance(cost, L1):
        value = d * s / (4.0 * delta)
    else:
        value = d * s * s / (12.0 * delta * delta) + d / 6.0
    return BoundReport(value, "upper", "mechanism:uniform", True, (f"per-axis support [-{h}, {h - 1}]",))


def ub_laplace_multi(cost: CostFn, dims: int, sensitivity: int, epsilon: float) -> BoundReport:
    _require_l1_l2(cost)
    if epsilon <= 0:
        raise EpsilonZero()
    lam = math.exp(-epsilon / sensitivity)
    if isinstance(cost, L1):
        per_axis = 2.0 * lam / (1.0 - lam * lam)
    else:
        per_axis = 2.0 * lam / (1.0 - lam) ** 2
    return BoundReport(int(dims) * per_axis, "upper", "mechanism:laplace", True, (f"lambda={lam!r}",))


def lb_multi_eps_delta(cost: CostFn, dims: int, sensitivity: int, epsilon: float, delta: float) -> BoundReport:
    _require_l1_l2(cost)
    params = PrivacyParams(epsilon, delta, sensitivity, dims).require_budget()
    beta = params.beta
    if isinstance(cost, L1):
        cert = build_cert_multi_eps_delta_l1(params.dims, params.sensitivity, beta)
    else:
        cert = build_cert_multi_eps_delta_l2(params.dims, params.sensitivity, beta)
    report = verify_certificate(cert, cost, params)
    if not report.feasible:
        raise NoFeasibleCertificate(
            f"certificate at beta={beta!r} violates {report.worst_constraint} by {report.worst_violation!r}"
        )
    notes = [f"beta={beta!r}", f"mu={float(cert.mu)!r}"]
    value = report.objective
    if value < 0:
        notes.append("certificate objective is negative; reporting the trivial bound 0")
        value = 0.0
    return BoundReport(value, "lower", "certificate:multi-eps-delta", True, tuple(notes))


# ---------------------------------------------------------------- gap


@dataclass(frozen=True)
class GapReport:
    lower: BoundReport | None
    upper_uniform: BoundReport | None
    upper_laplace: BoundReport | None
    flags: tuple = ()

    @property
    def upper(self) -> BoundReport | None:
        cands = [b for b in (self.upper_uniform, self.upper_laplace) if b is not None]
        return min(cands, key=lambda b: b.value) if cands else None

    @property
    def ratio(self) -> float | None:
        if self.lower is None or self.upper is None or self.lower.value <= 0:
            return None
        return self.upper.value / self.lower.value

    def to_json(self) -> dict:
        def dump(b):
            return None if b is None else b.to_json()

        return {
            "lower": dump(self.lower),
            "upper_uniform": dump(self.upper_uniform),
            "upper_laplace": dump(self.upper_laplace),
            "upper": dump(self.upper),
            "ratio": self.ratio,
            "flags": list(self.flags),
        }


def _best_lower(candidates: list) -> BoundReport | None:
    certified = [b for b in candidates if b is not None and b.preconditions_ok]
    return max(certified, key=lambda b: b.value) if certified else None


def gap_report(cost: CostFn, params: PrivacyParams, truncation: int | None = None) -> GapReport:
    params.require_budget()
    eps, dlt, s, d = params.epsilon, params.delta, params.sensitivity, params.dims
    flags: list[str] = []
    lowers: list = []
    uniform = laplace = None

    def attempt(fn, *args):
        try:
            return fn(*args)
        except IntegralityViolated:
            if "integrality" not in flags:
                flags.append("integrality")
        except NoFeasibleCertificate:
            flags.append("no-certificate")
        return None

    if d == 1:
        if eps == 0:
            lowers.append(attempt(lb_zero_delta, cost, s, dlt))
        lowers.append(attempt(lb_eps_delta, cost, s, eps, dlt, truncation))
        if dlt > 0:
            uniform = attempt(ub_uniform_1d, cost, s, dlt)
        if eps > 0:
            laplace = ub_laplace(cost, s, eps)
    else:
        _require_l1_l2(cost)
        if eps == 0:
            lowers.append(attempt(lb_multi_zero_delta, cost, d, s, dlt))
        lowers.append(attempt(lb_multi_eps_delta, cost, d, s, eps, dlt))
        if dlt > 0:
            uniform = attempt(ub_uniform_multi, cost, d, s, dlt)
        if eps > 0:
            laplace = ub_laplace_multi(cost, d, s, eps)
    return GapReport(_best_lower(lowers), uniform, laplace, tuple(flags))
