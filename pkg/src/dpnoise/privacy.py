"""Exact (epsilon, delta) verification for integer noise pmfs.

For a fixed shift ``v`` the worst output set collects every point where
``p(i) > e^eps p(i + v)``, so the supremum over sets equals the sum of the
positive parts of ``p(i) - e^eps p(i + v)``. The tightest delta is the largest
such sum over admissible shifts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb
from typing import Iterator

import numpy as np

from .core import (
    Finite1D,
    FiniteND,
    GeometricLaplace,
    NoiseDistribution,
    PrivacyParams,
    Product,
    validate_distribution,
)
from .errors import DimensionMismatch, InvalidParams, SupportTooLarge

MAX_CELLS = 1_000_000
MAX_SHIFTS = 1_000_000
GEOMETRIC_TAIL_TOL = 1e-14
SATISFY_TOL = 1e-12


@dataclass(frozen=True)
class PrivacyReport:
    tightest_delta: float
    worst_shift: tuple
    satisfies: bool | None = None

    def to_json(self) -> dict:
        out = {"tightest_delta": self.tightest_delta, "worst_shift": list(self.worst_shift)}
        if self.satisfies is not None:
            out["satisfies"] = self.satisfies
        return out


def _positive_part_sum(margins: np.ndarray) -> float:
    return math.fsum(margins[margins > 0])


def _clamp(value: float) -> float:
    return min(1.0, max(0.0, value))


def _shifts_1d(sensitivity: int) -> list[int]:
    return list(range(-sensitivity, 0)) + list(range(1, sensitivity + 1))


def _finite_margin_sum(probs: np.ndarray, shift: int, growth: float) -> float:
    """Positive-part sum of p(k) - growth * p(k + shift) over the support of p."""
    n = probs.size
    shifted = np.zeros(n)
    if shift >= 0:
        if shift < n:
            shifted[: n - shift] = probs[shift:]
    elif -shift < n:
        shifted[-shift:] = probs[: n + shift]
    return _positive_part_sum(probs - growth * shifted)


def _geometric_margin_sum(dist: GeometricLaplace, shift: int, growth: float) -> float:
    lam, c = dist.lam, dist.mass_at_zero
    radius = max(dist.tail_radius(GEOMETRIC_TAIL_TOL), abs(shift) + 1)
    ks = np.arange(-radius, radius + 1)
    margins = c * (lam ** np.abs(ks) - growth * lam ** np.abs(ks + shift))
    total = _positive_part_sum(margins)
    # Beyond the window on the side away from the shift every margin is
    # c lam^|k| (1 - growth lam^|shift|); on the other side it is negative.
    factor = 1.0 - growth * lam ** abs(shift)
    if factor > 0:
        total += c * lam ** (radius + 1) / (1.0 - lam) * factor
    return total


def tightest_delta_1d(dist: NoiseDistribution, epsilon: float, sensitivity: int) -> PrivacyReport:
    if isinstance(dist, Product) and dist.dims == 1:
        dist = dist.axes[0]
    if not isinstance(dist, (Finite1D, GeometricLaplace)):
        raise DimensionMismatch("tightest_delta_1d needs a 1-D distribution")
    validate_distribution(dist)
    _check_shift_args(epsilon, sensitivity)
    growth = math.exp(epsilon)
    best, best_shift = -1.0, 0
    for s in _shifts_1d(sensitivity):
        if isinstance(dist, Finite1D):
            value = _finite_margin_sum(dist.probs, s, growth)
        else:
            value = _geometric_margin_sum(dist, s, growth)
        if value > best:
            best, best_shift = value, s
    return PrivacyReport(_clamp(best), (best_shift,))


def _check_shift_args(epsilon: float, sensitivity: int) -> None:
    if not math.isfinite(epsilon) or epsilon < 0:
        raise InvalidParams(f"epsilon must be >= 0, got {epsilon!r}")
    if int(sensitivity) != sensitivity or sensitivity < 1:
        raise InvalidParams(f"sensitivity must be a positive integer, got {sensitivity!r}")


# ---------------------------------------------------------------- multi-dimensional


def count_shifts(dims: int, sensitivity: int) -> int:
    """Number of nonzero v in Z^dims with ||v||_1 <= sensitivity."""
    ball = sum(2**k * comb(dims, k) * comb(sensitivity, k) for k in range(min(dims, sensitivity) + 1))
    return ball - 1


def iter_shifts(dims: int, sensitivity: int) -> Iterator[tuple]:
    """Nonzero shifts with ||v||_1 <= sensitivity, in lexicographic order."""

    def rec(prefix: tuple, budget: int) -> Iterator[tuple]:
        if len(prefix) == dims:
            if any(prefix):
                yield prefix
            return
        for x in range(-budget, budget + 1):
            yield from rec(prefix + (x,), budget - abs(x))

    yield from rec((), sensitivity)


def _axis_table(axis, pad: int) -> np.ndarray:
    """Padded probabilities, with exact pmf values in the pad zone."""
    if isinstance(axis, Finite1D):
        return np.concatenate([np.zeros(pad), axis.probs, np.zeros(pad)])
    radius = axis.tail_radius(GEOMETRIC_TAIL_TOL)
    ks = np.arange(-radius - pad, radius + pad + 1)
    return axis.mass_at_zero * axis.lam ** np.abs(ks)


def _joint_table(dist: NoiseDistribution, pad: int) -> np.ndarray:
    """Joint pmf on a box, padded by ``pad`` cells on each side of every axis."""
    if isinstance(dist, FiniteND):
        return np.pad(dist.probs, pad)
    axes = dist.axes if isinstance(dist, Product) else (dist,)
    tables = [_axis_table(ax, pad) for ax in axes]
    joint = tables[0]
    for t in tables[1:]:
        joint = np.multiply.outer(joint, t)
    return joint


def tightest_delta_multi(dist: NoiseDistribution, epsilon: float, sensitivity: int) -> PrivacyReport:
    validate_distribution(dist)
    _check_shift_args(epsilon, sensitivity)
    dims = dist.dims
    pad = sensitivity

    if isinstance(dist, FiniteND):
        inner_shape = dist.probs.shape
    else:
        axes = dist.axes if isinstance(dist, Product) else (dist,)
        inner_shape = tuple(
            ax.probs.size if isinstance(ax, Finite1D) else 2 * ax.tail_radius(GEOMETRIC_TAIL_TOL) + 1
            for ax in axes
        )
    cells = math.prod(inner_shape)
    n_shifts = count_shifts(dims, sensitivity)
    padded_cells = math.prod(s + 2 * pad for s in inner_shape)
    if cells > MAX_CELLS or n_shifts > MAX_SHIFTS or padded_cells > 4 * MAX_CELLS:
        raise SupportTooLarge(cells, n_shifts, MAX_CELLS)

    joint = _joint_table(dist, pad)
    growth = math.exp(epsilon)
    inner = tuple(slice(pad, pad + s) for s in inner_shape)
    base = joint[inner]
    best, best_shift = -1.0, None
    for v in iter_shifts(dims, sensitivity):
        shifted = joint[tuple(slice(pad + x, pad + x + s) for x, s in zip(v, inner_shape))]
        value = _positive_part_sum(base - growth * shifted)
        if value > best:
            best, best_shift = value, v
    # Cells outside a finite table carry no mass; geometric tails below tolerance are omitted.
    return PrivacyReport(_clamp(best), best_shift)


def check_dp(dist: NoiseDistribution, params: PrivacyParams) -> PrivacyReport:
    if dist.dims != params.dims:
        raise DimensionMismatch(f"distribution has {dist.dims} dims, params expect {params.dims}")
    if dist.dims == 1 and not isinstance(dist, FiniteND):
        report = tightest_delta_1d(dist, params.epsilon, params.sensitivity)
    else:
        report = tightest_delta_multi(dist, params.epsilon, params.sensitivity)
    satisfied = report.tightest_delta <= params.delta + SATISFY_TOL
    return PrivacyReport(report.tightest_delta, report.worst_shift, satisfied)

