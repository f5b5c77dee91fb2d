"""Concrete noise mechanisms and seeded sampling."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    Finite1D,
    FiniteND,
    GeometricLaplace,
    NoiseDistribution,
    PrivacyParams,
    Product,
    uniform_half_width,
    validate_distribution,
)
from .errors import EpsilonZero, IntegralityViolated, InvalidParams

UINT64_MAX = 2**64 - 1


def uniform_mechanism_1d(params: PrivacyParams) -> Finite1D:
    """Uniform noise on [-h, h-1] with h = sensitivity / (2 delta)."""
    params.require_budget()
    if params.delta <= 0:
        raise IntegralityViolated("sensitivity/(2*delta)", math.inf, params.sensitivity / 2.0)
    h = uniform_half_width(params.sensitivity, params.delta)
    # 1/(2h) equals delta/sensitivity on the integer grid and keeps the sum exact
    return Finite1D(-h, np.full(2 * h, 1.0 / (2 * h)))


def uniform_mechanism_multi(params: PrivacyParams) -> NoiseDistribution:
    axis = uniform_mechanism_1d(params)
    return axis if params.dims == 1 else Product((axis,) * params.dims)


def discrete_laplace(params: PrivacyParams) -> NoiseDistribution:
    if params.epsilon <= 0:
        raise EpsilonZero()
    axis = GeometricLaplace(math.exp(-params.epsilon / params.sensitivity))
    validate_distribution(axis)
    return axis if params.dims == 1 else Product((axis,) * params.dims)


# ---------------------------------------------------------------- sampling


@dataclass(frozen=True, eq=False)
class SampleBatch:
    seed: int
    draws: np.ndarray  # shape (n, d), int64

    @property
    def n(self) -> int:
        return self.draws.shape[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        np.savetxt(buf, self.draws, fmt="%d", delimiter=",")
        return buf.getvalue()


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 stream; identical across platforms for a given seed."""
    return np.random.Generator(np.random.PCG64(seed))


def _sample_finite(dist: Finite1D, rng: np.random.Generator, n: int) -> np.ndarray:
    cdf = np.cumsum(dist.probs)
    cdf /= cdf[-1]
    u = rng.random(n)
    idx = np.searchsorted(cdf, u, side="right")
    np.minimum(idx, dist.probs.size - 1, out=idx)
    return idx.astype(np.int64) + dist.offset


def _sample_geometric(dist: GeometricLaplace, rng: np.random.Generator, n: int) -> np.ndarray:
    lam = dist.lam
    u = rng.random(n)
    # P(|N| = m) for m >= 1 is (1 - P0) (1 - lam) lam^(m-1): a geometric magnitude
    magnitude = rng.geometric(1.0 - lam, size=n)
    sign = np.where(rng.random(n) < 0.5, -1, 1)
    out = sign * magnitude
    out[u < dist.mass_at_zero] = 0
    return out.astype(np.int64)


def _sample_axis(dist, rng, n):
    if isinstance(dist, Finite1D):
        return _sample_finite(dist, rng, n)
    if isinstance(dist, GeometricLaplace):
        return _sample_geometric(dist, rng, n)
    raise InvalidParams(f"cannot sample axis of type {type(dist).__name__}")


def sample(dist: NoiseDistribution, seed: int, n: int) -> SampleBatch:
    if not (0 <= int(seed) <= UINT64_MAX):
        raise InvalidParams(f"seed must be a 64-bit unsigned integer, got {seed!r}")
    if int(n) < 1:
        raise InvalidParams(f"sample count must be positive, got {n!r}")
    validate_distribution(dist)
    rng = make_rng(int(seed))
    n = int(n)
    if isinstance(dist, Product):
        cols = [_sample_axis(ax, rng, n) for ax in dist.axes]
        draws = np.stack(cols, axis=1)
    elif isinstance(dist, FiniteND):
        flat = _sample_finite(Finite1D(0, dist.probs.ravel()), rng, n)
        draws = np.stack(np.unravel_index(flat, dist.probs.shape), axis=1).astype(np.int64)
        draws += np.asarray(dist.offset, dtype=np.int64)
    else:
        draws = _sample_axis(dist, rng, n)[:, None]
    draws.setflags(write=False)
    return SampleBatch(int(seed), draws)
