"""Explicit dual-feasible points and an exact checker for them.

A certificate is a multiplier ``mu`` plus nonnegative weights ``y`` per axis.
If it satisfies every dual constraint, weak duality makes its objective a lower
bound on the optimal expected cost.

One-dimensional regimes use the half-line dual. Rows and columns match
``dpnoise.lp``, with the scaling chosen so that the objective reads
``mu - (2 delta + e^eps - 1) * sum(y)``:

* column 0:  ``mu/2 - (1+e^eps)/2 y_0 - (e^eps-1)/2 sum_{i>=1} y_i <= 0``
* column k:  ``mu - e^eps W(k) - (e^eps-1) T(k) <= L(k)`` for k >= 1, where
  ``W(k) = sum_{max(0,k-s+1) <= i <= k} y_i`` and ``T(k) = sum_{i > k} y_i``.

Multi-dimensional regimes use one weight vector per axis over all of Z with
objective ``mu - rate * sum_m sum_i y_i`` (rate = delta or beta). A joint column
``j`` reads ``mu <= sum_m g_m(j_m)`` with
``g(k) = L(k) + sum_{k-s+1 <= i <= k} y_i - (e^beta-1) sum_{i <= k-s} y_i``,
so feasibility holds iff ``mu <= sum_m min_k g_m(k)``.

All checks run in 50-digit decimal arithmetic. Weights are built in the same
precision and stored as ``Decimal`` so rounding cannot push a point across the
feasibility tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

from .core import CostFn, L1, L2, PrivacyParams, inverse_two_delta
from .errors import (
    InvalidParams,
    NegativeWeight,
    NoFeasibleCertificate,
    RegimeMismatch,
)

PRECISION = 50
FEASIBILITY_TOL = 1e-9
MAX_SUPPORT = 5_000_000
ZERO = Decimal(0)


class Regime(str, Enum):
    ZeroDelta1D = "zero-delta-1d"
    EpsDelta1D = "eps-delta-1d"
    MultiZeroDeltaL1 = "multi-zero-delta-l1"
    MultiZeroDeltaL2 = "multi-zero-delta-l2"
    MultiEpsDeltaL1 = "multi-eps-delta-l1"
    MultiEpsDeltaL2 = "multi-eps-delta-l2"

    @property
    def one_dimensional(self) -> bool:
        return self in (Regime.ZeroDelta1D, Regime.EpsDelta1D)


@dataclass(frozen=True)
class AxisWeights:
    """Weights ``values[j]`` at integer index ``offset + j``; zero elsewhere."""

    offset: int
    values: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(_dec(v) for v in self.values))

    @property
    def last(self) -> int:
        return self.offset + len(self.values) - 1

    def total(self) -> Decimal:
        with localcontext() as ctx:
            ctx.prec = PRECISION
            return sum(self.values, ZERO)

    def as_dict(self) -> dict[int, float]:
        return {self.offset + j: float(v) for j, v in enumerate(self.values) if v}

    def with_value(self, index: int, value) -> "AxisWeights":
        vals = list(self.values)
        vals[index - self.offset] = _dec(value)
        return AxisWeights(self.offset, tuple(vals))


@dataclass(frozen=True)
class DualCertificate:
    mu: Decimal
    axes: tuple
    regime: Regime
    beta: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "mu", _dec(self.mu))
        object.__setattr__(self, "axes", tuple(self.axes))
        object.__setattr__(self, "regime", Regime(self.regime))

    @property
    def dims(self) -> int:
        return len(self.axes)


@dataclass(frozen=True)
class CertificateReport:
    feasible: bool
    worst_violation: float
    objective: float
    binding_constraints: int
    worst_constraint: str
    notes: tuple = field(default_factory=tuple)

    def to_json(self) -> dict:
        return {
            "feasible": self.feasible,
            "worst_violation": self.worst_violation,
            "objective": self.objective,
            "binding_constraints": self.binding_constraints,
            "worst_constraint": self.worst_constraint,
            "notes": list(self.notes),
        }


def _dec(x) -> Decimal:
    if isinstance(x, Decimal):
        return x
    if isinstance(x, (int, np.integer)):
        return Decimal(int(x))
    return Decimal(float(x))


def _cost(cost: CostFn, k: int) -> Decimal:
    return _dec(cost.axis_exact(k))


def _exp(x: float) -> Decimal:
    return _dec(x).exp()


def _prefix(values: Sequence[Decimal]) -> list[Decimal]:
    """prefix[j] = sum(values[:j])."""
    out = [ZERO]
    acc = ZERO
    for v in values:
        acc += v
        out.append(acc)
    return out


# ---------------------------------------------------------------- builders


def build_cert_zero_delta_1d(cost: CostFn, sensitivity: int, delta: float) -> DualCertificate:
    n = inverse_two_delta(delta)
    sens = int(sensitivity)
    with localcontext() as ctx:
        ctx.prec = PRECISION
        mu = _cost(cost, 1 + sens * n)
        top = (n - 1) * sens + 1
        y = [ZERO] * (top + 1)
        for k in range(top, 1, -1):
            above = y[k + sens] if k + sens <= top else ZERO
            y[k] = _cost(cost, k + sens) - _cost(cost, k + sens - 1) + above
        y1 = sum((_cost(cost, 1 + i * sens) - _cost(cost, i * sens) for i in range(1, n + 1)), ZERO)
        y[1] = y1
        y[0] = mu - _cost(cost, 1) - y1
    return DualCertificate(mu, (AxisWeights(0, y),), Regime.ZeroDelta1D, 0.0)


def build_cert_eps_delta_1d(
    cost: CostFn, sensitivity: int, epsilon: float, delta: float, n: int
) -> DualCertificate:
    if int(n) != n or n < 2:
        raise InvalidParams(f"series length n must be an integer >= 2, got {n!r}")
    if epsilon < 0 or not (0 <= delta <= 1):
        raise InvalidParams("need epsilon >= 0 and delta in [0, 1]")
    n, sens = int(n), int(sensitivity)
    with localcontext() as ctx:
        ctx.prec = PRECISION
        b = _exp(-epsilon)
        mu = _cost(cost, 1 + (n - 1) * sens)
        top = 1 + (n - 2) * sens
        y = [ZERO] * (max(top, 1) + 1)
        for k in range(top, 1, -1):
            above = y[k + sens] if k + sens <= top else ZERO
            y[k] = b * (above + _cost(cost, k + sens) - _cost(cost, k + sens - 1))
        y1 = ZERO
        y0 = ZERO
        power = Decimal(1)
        for i in range(1, n):
            power *= b
            y1 += power * (_cost(cost, 1 + i * sens) - _cost(cost, i * sens))
            y0 += power * (_cost(cost, i * sens) - _cost(cost, 1 + (i - 1) * sens))
        if y0 < 0:
            raise NegativeWeight("y0", float(y0))
        if y1 < 0:
            raise NegativeWeight("y1", float(y1))
        y[0], y[1] = y0, y1
    return DualCertificate(mu, (AxisWeights(0, y),), Regime.EpsDelta1D, max(epsilon, delta))


def build_cert_multi_l1_zero_delta(dims: int, sensitivity: int, delta: float) -> DualCertificate:
    n = inverse_two_delta(delta)
    sens, d = int(sensitivity), int(dims)
    per_axis = sens * n  # mu / d
    # weights sit on multiples of the sensitivity, from -n*sens to n*sens
    offset = -n * sens
    y = [0] * (2 * n * sens + 1)
    y[-offset] = per_axis
    for j in range(1, n + 1):
        y[j * sens - offset] = max(per_axis - j * sens, 0)
        y[-j * sens - offset] = max(per_axis - (j - 1) * sens - 1, 0)
    axis = AxisWeights(offset, y)
    return DualCertificate(d * per_axis, (axis,) * d, Regime.MultiZeroDeltaL1, 0.0)


def build_cert_multi_l2_zero_delta(dims: int, sensitivity: int, delta: float) -> DualCertificate:
    n = inverse_two_delta(delta)
    sens, d = int(sensitivity), int(dims)
    per_axis = (sens * n) ** 2
    offset = -n * sens
    y = [0] * (2 * n * sens + 1)
    y[-offset] = per_axis
    for j in range(1, n + 1):
        y[j * sens - offset] = per_axis - (j * sens) ** 2
        y[-j * sens - offset] = per_axis - ((j - 1) * sens + 1) ** 2
    axis = AxisWeights(offset, y)
    return DualCertificate(d * per_axis, (axis,) * d, Regime.MultiZeroDeltaL2, 0.0)


def _eps_delta_axis(sensitivity: int, beta: float, k: int, increment) -> AxisWeights:
    """Run ``y_i = e^beta y_{i-s} - increment(i)`` from ``-k s + 1`` upward.

    Weights below zero index are never clipped; from index 1 on they are
    clipped at zero. The run stops once a full block of ``s`` zeros appears.
    """
    sens = sensitivity
    growth = _exp(beta)
    start = -k * sens + 1
    y: list[Decimal] = []

    def prev(i):
        j = i - sens - start
        return y[j] if j >= 0 else ZERO

    # Converging runs end within a few multiples of the k blocks below zero.
    cap = min(MAX_SUPPORT, 20 * (k + 1) * sens + 100)
    i = start
    zeros = 0
    while True:
        if len(y) > cap:
            raise NoFeasibleCertificate(
                f"weight recursion at beta={beta!r} does not return to zero within {cap} entries"
            )
        value = growth * prev(i) - increment(i)
        if i >= 1:
            value = max(value, ZERO)
            zeros = zeros + 1 if value == 0 else 0
        y.append(value)
        if i >= 1 and zeros >= sens:
            break
        i += 1
    while y and y[-1] == 0:
        y.pop()
    return AxisWeights(start, y)


def _round_steps(beta: float) -> int:
    if not (beta > 0 and math.isfinite(beta)):
        raise InvalidParams(f"beta must be positive, got {beta!r}")
    return max(1, round(math.log(1.5) / beta))


def build_cert_multi_eps_delta_l1(dims: int, sensitivity: int, beta: float) -> DualCertificate:
    k = _round_steps(beta)
    sens, d = int(sensitivity), int(dims)
    with localcontext() as ctx:
        ctx.prec = PRECISION
        axis = _eps_delta_axis(sens, beta, k, lambda i: Decimal(1 if i >= 1 else -1))
    return DualCertificate(d * sens * k, (axis,) * d, Regime.MultiEpsDeltaL1, float(beta))


def build_cert_multi_eps_delta_l2(dims: int, sensitivity: int, beta: float) -> DualCertificate:
    k = _round_steps(beta)
    sens, d = int(sensitivity), int(dims)
    with localcontext() as ctx:
        ctx.prec = PRECISION
        # increment equals the per-step change of the squared cost, i^2 - (i-1)^2
        axis = _eps_delta_axis(sens, beta, k, lambda i: Decimal(2 * i - 1))
    return DualCertificate(d * (sens * k) ** 2, (axis,) * d, Regime.MultiEpsDeltaL2, float(beta))


def l2_growth_root(alpha: float = 1.5) -> float:
    """Root above 1 of ``g * alpha * (log(alpha) - 1) + 1 + log(g) = 0``."""
    slope = alpha * (math.log(alpha) - 1.0)

    def f(g):
        return g * slope + 1.0 + math.log(g)

    hi = 2.0
    while f(hi) > 0:
        hi *= 2.0
    return brentq(f, 1.0 + 1e-12, hi, xtol=1e-13, rtol=1e-15)


# ---------------------------------------------------------------- verification


@dataclass
class _Tracker:
    worst: Decimal = Decimal("-Infinity")
    where: str = ""
    binding: int = 0

    def see(self, value: Decimal, label) -> None:
        if abs(value) <= Decimal(FEASIBILITY_TOL):
            self.binding += 1
        if value > self.worst:
            self.worst = value
            self.where = label() if callable(label) else label


def _check_regime(cert: DualCertificate, cost: CostFn, params: PrivacyParams) -> None:
    regime = cert.regime
    if regime.one_dimensional:
        if params.dims != 1 or cert.dims != 1:
            raise RegimeMismatch(f"{regime.value} certificates are one-dimensional")
        if regime is Regime.ZeroDelta1D and params.epsilon != 0:
            raise RegimeMismatch("a zero-delta-1d certificate only applies at epsilon = 0")
        if cert.axes[0].offset < 0:
            raise RegimeMismatch("one-dimensional weights are indexed from 0")
        return
    if cert.dims != params.dims:
        raise RegimeMismatch(f"certificate has {cert.dims} axes, params have dims={params.dims}")
    wants_l1 = regime in (Regime.MultiZeroDeltaL1, Regime.MultiEpsDeltaL1)
    if wants_l1 and not isinstance(cost, L1) or not wants_l1 and not isinstance(cost, L2):
        raise RegimeMismatch(f"{regime.value} certificates apply to the {'l1' if wants_l1 else 'l2'} cost")
    if regime in (Regime.MultiZeroDeltaL1, Regime.MultiZeroDeltaL2):
        if params.epsilon != 0:
            raise RegimeMismatch(f"{regime.value} certificates only apply at epsilon = 0")
    elif abs(cert.beta - params.beta) > 1e-12 * max(1.0, params.beta):
        raise RegimeMismatch(f"certificate built for beta={cert.beta!r}, params give beta={params.beta!r}")


def _verify_1d(cert: DualCertificate, cost: CostFn, params: PrivacyParams) -> CertificateReport:
    sens = params.sensitivity
    axis = cert.axes[0]
    mu = cert.mu
    growth = _exp(params.epsilon)
    tail = growth - 1
    y = [ZERO] * axis.offset + list(axis.values)
    last = len(y) - 1
    track = _Tracker()
    track.see(-mu, "mu >= 0")
    for i, v in enumerate(y):
        if v < 0:
            track.see(-v, lambda i=i: f"y[{i}] >= 0")
    prefix = _prefix(y)
    total = prefix[-1]
    track.see(mu / 2 - (1 + growth) / 2 * y[0] - tail / 2 * (total - y[0]), "column 0")
    # Past last + sens + 1 both sums vanish and the slack only grows with L.
    for k in range(1, last + sens + 2):
        hi = min(k, last) + 1
        lo = max(0, k - sens + 1)
        window = prefix[hi] - prefix[lo] if lo < hi else ZERO
        above = total - prefix[min(k + 1, last + 1)]
        lhs = mu - growth * window - tail * above
        track.see(lhs - _cost(cost, k), lambda k=k: f"column {k}")
    rate = 2 * _dec(params.delta) + tail
    objective = mu - rate * total
    notes = (f"columns checked: 0..{last + sens + 1}; beyond that the slack is monotone in the cost",)
    return _report(track, objective, notes)


def _axis_min(axis: AxisWeights, cost: CostFn, sens: int, tail: Decimal, reach: int):
    """Minimum of g over k together with its argmin and the search range."""
    lo_idx, hi_idx = axis.offset, axis.last
    y = list(axis.values)
    prefix = _prefix(y)
    total = prefix[-1]
    k_lo = min(lo_idx - 1, 0, -reach)
    k_hi = max(hi_idx + sens, 0, reach)

    def cum(upto):  # sum of y_i for i <= upto
        j = upto - lo_idx + 1
        if j <= 0:
            return ZERO
        return prefix[min(j, len(y))]

    best, arg, ties = None, None, 0
    for k in range(k_lo, k_hi + 1):
        window = cum(k) - cum(k - sens)
        below = cum(k - sens)
        g = _cost(cost, k) + window - tail * below
        if best is None or g < best:
            best, arg, ties = g, k, 1
        elif g - best <= Decimal(FEASIBILITY_TOL):
            ties += 1
    return best, arg, ties, (k_lo, k_hi), total


def _verify_multi(cert: DualCertificate, cost: CostFn, params: PrivacyParams) -> CertificateReport:
    sens = params.sensitivity
    if cert.regime in (Regime.MultiZeroDeltaL1, Regime.MultiZeroDeltaL2):
        rate = _dec(params.delta)
        tail = ZERO
    else:
        rate = _dec(cert.beta)
        tail = _exp(cert.beta) - 1
    degree = cost.degree or 1
    track = _Tracker()
    track.see(-cert.mu, "mu >= 0")
    mins, totals, notes, ties_per_axis = [], [], [], []
    for m, axis in enumerate(cert.axes):
        for j, v in enumerate(axis.values):
            if v < 0:
                track.see(-v, lambda m=m, j=j, o=axis.offset: f"y[{m}][{o + j}] >= 0")
        extent = max(abs(axis.offset), abs(axis.last))
        reach = extent + math.ceil(float(cert.mu) ** (1.0 / degree)) + sens + 2
        best, arg, ties, (k_lo, k_hi), total = _axis_min(axis, cost, sens, tail, reach)
        mins.append((best, arg))
        totals.append(total)
        ties_per_axis.append(ties)
        notes.append(
            f"axis {m}: min g over [{k_lo}, {k_hi}] at k={arg}; "
            f"outside the weight support g equals the cost plus a constant, so it is monotone"
        )
    slack = cert.mu - sum((b for b, _ in mins), ZERO)
    point = ",".join(str(a) for _, a in mins)
    track.see(slack, f"column ({point})")
    if abs(slack) <= Decimal(FEASIBILITY_TOL):
        # every combination of per-axis minimizers is a tight joint column
        track.binding += math.prod(ties_per_axis) - 1
    objective = cert.mu - rate * sum(totals, ZERO)
    return _report(track, objective, tuple(notes))


def _report(track: _Tracker, objective: Decimal, notes: tuple) -> CertificateReport:
    worst = float(track.worst)
    return CertificateReport(
        feasible=worst <= FEASIBILITY_TOL,
        worst_violation=worst,
        objective=float(objective),
        binding_constraints=track.binding,
        worst_constraint=track.where,
        notes=notes,
    )


def verify_certificate(cert: DualCertificate, cost: CostFn, params: PrivacyParams) -> CertificateReport:
    _check_regime(cert, cost, params)
    with localcontext() as ctx:
        ctx.prec = PRECISION
        if cert.regime.one_dimensional:
            return _verify_1d(cert, cost, params)
        return _verify_multi(cert, cost, params)


def joint_column_slack(cert: DualCertificate, cost: CostFn, params: PrivacyParams, point: Iterable[int]) -> float:
    """``mu - sum_m g_m(point_m)`` for one joint column; positive means violated."""
    _check_regime(cert, cost, params)
    sens = params.sensitivity
    with localcontext() as ctx:
        ctx.prec = PRECISION
        tail = ZERO if cert.regime in (Regime.MultiZeroDeltaL1, Regime.MultiZeroDeltaL2) else _exp(cert.beta) - 1
        total = cert.mu
        for axis, k in zip(cert.axes, point):
            weights = axis.as_dict()
            window = sum((_dec(weights.get(i, 0.0)) for i in range(k - sens + 1, k + 1)), ZERO)
            below = sum((_dec(w) for i, w in weights.items() if i <= k - sens), ZERO)
            total -= _cost(cost, k) + window - tail * below
        return float(total)


# ---------------------------------------------------------------- LP duals


def certificate_from_lp_dual(mu: float, row_duals: Sequence[float], cost: CostFn, params: PrivacyParams) -> DualCertificate:
    """Turn solver duals into a certificate that verifies exactly.

    Negative weights are clipped to zero, then ``mu`` is lowered by the
    largest remaining violation scaled by its coefficient. Both steps keep the
    point inside the dual feasible set at the cost of a tiny objective loss.
    """
    sens = params.sensitivity
    with localcontext() as ctx:
        ctx.prec = PRECISION
        y = [max(_dec(v), ZERO) for v in row_duals]
        while len(y) > 1 and y[-1] == 0:
            y.pop()
        mu = max(_dec(mu), ZERO)
        growth = _exp(params.epsilon)
        tail = growth - 1
        prefix = _prefix(y)
        total = prefix[-1]
        last = len(y) - 1
        excess = 2 * (mu / 2 - (1 + growth) / 2 * y[0] - tail / 2 * (total - y[0]))
        for k in range(1, last + sens + 2):
            hi = min(k, last) + 1
            lo = max(0, k - sens + 1)
            window = prefix[hi] - prefix[lo] if lo < hi else ZERO
            above = total - prefix[min(k + 1, last + 1)]
            excess = max(excess, mu - growth * window - tail * above - _cost(cost, k))
        if excess > 0:
            mu = max(mu - excess, ZERO)
    regime = Regime.ZeroDelta1D if params.epsilon == 0 else Regime.EpsDelta1D
    return DualCertificate(mu, (AxisWeights(0, y),), regime, params.beta)


def certificate_to_json(cert: DualCertificate, include_weights: bool = False) -> dict:
    out = {"regime": cert.regime.value, "mu": float(cert.mu), "beta": cert.beta, "dims": cert.dims}
    if include_weights:
        out["axes"] = [
            {"offset": ax.offset, "weights": [float(v) for v in ax.values]} for ax in cert.axes
        ]
    return out
