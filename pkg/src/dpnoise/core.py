"""Domain types, validation, cost evaluation and expected cost.

Distributions and costs are frozen dataclasses. Probability vectors are stored
as read-only float64 arrays so that validated values cannot be mutated later.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .errors import (
    DimensionMismatch,
    DivergentCost,
    IntegralityViolated,
    InvalidCost,
    InvalidParams,
    LambdaOutOfRange,
    NegativeProbability,
    NotNormalized,
    TableOutOfRange,
    ZeroPrivacyBudget,
)

NORMALIZATION_TOL = 1e-12
INTEGRALITY_RTOL = 1e-9
SERIES_TAIL_TOL = 1e-12
MAX_SERIES_TERMS = 10_000_000


# ---------------------------------------------------------------- parameters


@dataclass(frozen=True)
class PrivacyParams:
    epsilon: float = 0.0
    delta: float = 0.0
    sensitivity: int = 1
    dims: int = 1

    def __post_init__(self) -> None:
        eps, dlt = float(self.epsilon), float(self.delta)
        if not math.isfinite(eps) or eps < 0:
            raise InvalidParams(f"epsilon must be a finite value >= 0, got {self.epsilon!r}")
        if not (0.0 <= dlt <= 1.0):
            raise InvalidParams(f"delta must lie in [0, 1], got {self.delta!r}")
        if int(self.sensitivity) != self.sensitivity or self.sensitivity < 1:
            raise InvalidParams(f"sensitivity must be a positive integer, got {self.sensitivity!r}")
        if int(self.dims) != self.dims or self.dims < 1:
            raise InvalidParams(f"dims must be a positive integer, got {self.dims!r}")
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "delta", dlt)
        object.__setattr__(self, "sensitivity", int(self.sensitivity))
        object.__setattr__(self, "dims", int(self.dims))

    @property
    def beta(self) -> float:
        return max(self.epsilon, self.delta)

    def require_budget(self) -> "PrivacyParams":
        """Raise unless some privacy budget is available."""
        if self.epsilon == 0.0 and self.delta == 0.0:
            raise ZeroPrivacyBudget()
        return self


def positive_integer_ratio(value: float, quantity: str, delta_for: Callable[[int], float]) -> int:
    """Return ``value`` as an int if it is a positive integer up to rounding noise.

    ``delta_for(h)`` maps an admissible integer to the delta that produces it;
    it is used to report the nearest admissible delta on failure.
    """
    if math.isfinite(value):
        nearest = max(1, round(value))
        if abs(value - nearest) <= INTEGRALITY_RTOL * max(1.0, abs(value)) and value > 0:
            return int(nearest)
        raise IntegralityViolated(quantity, value, delta_for(nearest))
    raise IntegralityViolated(quantity, value, delta_for(1))


def uniform_half_width(sensitivity: int, delta: float) -> int:
    """Integer h = sensitivity / (2 delta), the half-width of the uniform support."""
    if delta <= 0:
        raise IntegralityViolated("sensitivity/(2*delta)", math.inf, sensitivity / 2.0)
    return positive_integer_ratio(
        sensitivity / (2.0 * delta), "sensitivity/(2*delta)", lambda h: sensitivity / (2.0 * h)
    )


def inverse_two_delta(delta: float) -> int:
    """Integer 1/(2 delta)."""
    if delta <= 0:
        raise IntegralityViolated("1/(2*delta)", math.inf, 0.5)
    return positive_integer_ratio(1.0 / (2.0 * delta), "1/(2*delta)", lambda h: 1.0 / (2.0 * h))


# ---------------------------------------------------------------- distributions


def _frozen_array(values: Iterable[float], ndim: int | None = None) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise InvalidParams(f"expected a {ndim}-dimensional probability array, got {arr.ndim}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Finite1D:
    """Finite pmf on consecutive integers starting at ``offset``."""

    offset: int
    probs: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "offset", int(self.offset))
        object.__setattr__(self, "probs", _frozen_array(self.probs, ndim=1))
        if self.probs.size == 0:
            raise InvalidParams("a finite pmf needs at least one support point")

    dims = 1

    @property
    def last(self) -> int:
        return self.offset + self.probs.size - 1

    def support(self) -> np.ndarray:
        return np.arange(self.offset, self.last + 1, dtype=np.int64)

    def pmf(self, k: int) -> float:
        i = k - self.offset
        return float(self.probs[i]) if 0 <= i < self.probs.size else 0.0

    def reflected(self) -> "Finite1D":
        return Finite1D(-self.last, self.probs[::-1].copy())

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Finite1D)
            and self.offset == other.offset
            and np.array_equal(self.probs, other.probs)
        )


@dataclass(frozen=True)
class GeometricLaplace:
    """Two-sided geometric pmf ``(1-lam)/(1+lam) * lam**|k|``."""

    lam: float

    dims = 1

    @property
    def mass_at_zero(self) -> float:
        return (1.0 - self.lam) / (1.0 + self.lam)

    def pmf(self, k: int) -> float:
        return self.mass_at_zero * self.lam ** abs(k)

    def tail_radius(self, tol: float) -> int:
        """Smallest K with two-sided mass beyond |k| > K below ``tol``."""
        # mass(|k| > K) = 2 lam^(K+1) / (1 + lam)
        lam = self.lam
        radius = math.log(tol * (1.0 + lam) / 2.0) / math.log(lam) - 1.0
        return max(0, math.ceil(radius))

    def truncated(self, radius: int) -> Finite1D:
        ks = np.arange(-radius, radius + 1)
        return Finite1D(-radius, self.mass_at_zero * self.lam ** np.abs(ks))


@dataclass(frozen=True, eq=False)
class FiniteND:
    """Finite joint pmf on a box of ``Z^d`` whose lowest corner is ``offset``."""

    offset: tuple
    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = _frozen_array(self.probs)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "offset", tuple(int(o) for o in self.offset))
        if probs.ndim != len(self.offset) or probs.ndim == 0:
            raise InvalidParams("offset length must equal the number of table dimensions")

    @property
    def dims(self) -> int:
        return self.probs.ndim

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, FiniteND)
            and self.offset == other.offset
            and np.array_equal(self.probs, other.probs)
        )


Axis = Union[Finite1D, GeometricLaplace]


@dataclass(frozen=True)
class Product:
    """Independent coordinates, one 1-D pmf per axis."""

    axes: tuple

    def __post_init__(self) -> None:
        axes = tuple(self.axes)
        if not axes:
            raise InvalidParams("a product distribution needs at least one axis")
        for ax in axes:
            if not isinstance(ax, (Finite1D, GeometricLaplace)):
                raise InvalidParams(f"product axes must be 1-D distributions, got {type(ax).__name__}")
        object.__setattr__(self, "axes", axes)

    @property
    def dims(self) -> int:
        return len(self.axes)


NoiseDistribution = Union[Finite1D, GeometricLaplace, Product, FiniteND]


def point_mass(dims: int = 1) -> NoiseDistribution:
    axis = Finite1D(0, [1.0])
    return axis if dims == 1 else Product((axis,) * dims)


def validate_distribution(dist: NoiseDistribution) -> NoiseDistribution:
    if isinstance(dist, GeometricLaplace):
        if not (0.0 < dist.lam < 1.0):
            raise LambdaOutOfRange(dist.lam)
        return dist
    if isinstance(dist, Product):
        for ax in dist.axes:
            validate_distribution(ax)
        return dist
    if isinstance(dist, (Finite1D, FiniteND)):
        flat = dist.probs.ravel()
        if not np.all(np.isfinite(flat)):
            raise NotNormalized(float("nan"))
        negative = np.flatnonzero(flat < 0)
        if negative.size:
            i = int(negative[0])
            index = dist.offset + i if isinstance(dist, Finite1D) else i
            raise NegativeProbability(index, float(flat[i]))
        total = math.fsum(flat)
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise NotNormalized(total)
        return dist
    raise InvalidParams(f"unknown distribution type {type(dist).__name__}")


# ---------------------------------------------------------------- costs


class CostFn:
    """Symmetric, nondecreasing per-coordinate loss with value 0 at the origin.

    Multi-dimensional evaluation is the sum of the per-axis values.
    """

    name = "cost"
    # Polynomial growth degree, or None when the cost is bounded.
    degree: int | None = None

    def axis(self, k: int) -> float:
        return float(self.axis_values(np.array([k]))[0])

    def axis_values(self, ks: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def axis_exact(self, k: int):
        """Value at ``k`` as an int or exact float, suitable for Decimal/Fraction."""
        return self.axis(k)

    def reach(self, value: float) -> int:
        """Smallest m >= 0 with axis(m) >= value."""
        raise NotImplementedError

    def __call__(self, point: Sequence[int] | int) -> float:
        return cost_value(self, point)

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class L1(CostFn):
    name = "l1"
    degree = 1

    def axis_values(self, ks):
        return np.abs(np.asarray(ks)).astype(np.float64)

    def axis_exact(self, k):
        return abs(int(k))

    def reach(self, value):
        return max(0, math.ceil(value))

    def to_json(self):
        return {"type": "l1"}


@dataclass(frozen=True)
class L2(CostFn):
    name = "l2"
    degree = 2

    def axis_values(self, ks):
        k = np.asarray(ks).astype(np.float64)
        return k * k

    def axis_exact(self, k):
        return int(k) ** 2

    def reach(self, value):
        if value <= 0:
            return 0
        m = math.isqrt(math.ceil(value))
        while m * m < value:
            m += 1
        return m

    def to_json(self):
        return {"type": "l2"}


@dataclass(frozen=True)
class Power(CostFn):
    m: int = 1

    def __post_init__(self) -> None:
        if int(self.m) != self.m or self.m < 1:
            raise InvalidCost(f"power cost exponent must be a positive integer, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))

    @property
    def name(self) -> str:
        return f"power:{self.m}"

    @property
    def degree(self) -> int:
        return self.m

    def axis_values(self, ks):
        return np.abs(np.asarray(ks)).astype(np.float64) ** self.m

    def axis_exact(self, k):
        return abs(int(k)) ** self.m

    def reach(self, value):
        if value <= 0:
            return 0
        m = max(0, math.floor(value ** (1.0 / self.m)) - 1)
        while m**self.m < value:
            m += 1
        return m

    def to_json(self):
        return {"type": "power", "m": self.m}


TAIL_RULES = ("error", "constant")


@dataclass(frozen=True, eq=False)
class Table(CostFn):
    """Cost looked up by ``|k|``.

    ``tail="error"`` raises beyond the table; ``tail="constant"`` repeats the
    last entry.
    """

    values: tuple
    tail: str = "error"

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise InvalidCost("cost table must not be empty")
        if vals[0] != 0.0:
            raise InvalidCost("cost table must have value 0 at |k| = 0")
        if any(not math.isfinite(v) for v in vals):
            raise InvalidCost("cost table entries must be finite")
        if any(b < a for a, b in zip(vals, vals[1:])):
            raise InvalidCost("cost table must be nondecreasing in |k|")
        if self.tail not in TAIL_RULES:
            raise InvalidCost(f"unknown tail rule {self.tail!r}; expected one of {TAIL_RULES}")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "_array", np.array(vals))

    name = "table"

    @property
    def degree(self):
        # A constant tail is bounded; an erroring tail never extends.
        return None

    def axis_values(self, ks):
        mags = np.abs(np.asarray(ks, dtype=np.int64))
        n = len(self.values)
        if mags.size and mags.max() >= n:
            if self.tail == "error":
                raise TableOutOfRange(int(mags.max()), n)
            mags = np.minimum(mags, n - 1)
        return self._array[mags]

    def axis_exact(self, k):
        return float(self.axis_values(np.array([k]))[0])

    def reach(self, value):
        idx = int(np.searchsorted(self._array, value, side="left"))
        if idx >= len(self.values):
            if self.tail == "error":
                raise TableOutOfRange(idx, len(self.values))
            raise DivergentCost(f"table cost never reaches {value!r}")
        return idx

    def to_json(self):
        out = {"type": "table", "values": list(self.values)}
        if self.tail != "error":
            out["tail"] = self.tail
        return out

    def __eq__(self, other):
        return isinstance(other, Table) and self.values == other.values and self.tail == other.tail

    def __hash__(self):
        return hash((self.values, self.tail))


def cost_value(cost: CostFn, point: Sequence[int] | int) -> float:
    coords = np.atleast_1d(np.asarray(point, dtype=np.int64))
    if coords.ndim != 1:
        raise DimensionMismatch("a cost point must be an integer vector")
    return math.fsum(cost.axis_values(coords))


# ---------------------------------------------------------------- expected cost


@dataclass(frozen=True)
class CostEstimate:
    value: float
    error_bound: float


def _geometric_series_cost(lam: float, cost: CostFn) -> CostEstimate:
    """Truncated two-sided series with an explicit bound on the omitted tail."""
    c = (1.0 - lam) / (1.0 + lam)
    dist = GeometricLaplace(lam)
    radius = dist.tail_radius(SERIES_TAIL_TOL)
    while True:
        if radius > MAX_SERIES_TERMS:
            raise DivergentCost(
                f"series for {cost.name} under lambda={lam!r} needs more than "
                f"{MAX_SERIES_TERMS} terms"
            )
        ks = np.arange(1, radius + 1)
        terms = 2.0 * c * lam**ks * cost.axis_values(ks)
        next_term = 2.0 * c * lam ** (radius + 1) * cost.axis(radius + 1)
        deg = cost.degree
        if deg is None:
            # bounded tail: every omitted term is at most next_term * lam^j
            bound = next_term / (1.0 - lam)
        else:
            ratio = lam * (1.0 + 1.0 / (radius + 1)) ** deg
            if ratio >= 1.0:
                radius *= 2
                continue
            bound = next_term / (1.0 - ratio)
        if bound <= SERIES_TAIL_TOL:
            return CostEstimate(math.fsum(terms), bound)
        radius = max(radius + 1, int(radius * 1.5))


def expected_cost_estimate(dist: NoiseDistribution, cost: CostFn) -> CostEstimate:
    if isinstance(dist, Finite1D):
        vals = cost.axis_values(dist.support())
        return CostEstimate(math.fsum(dist.probs * vals), 0.0)
    if isinstance(dist, GeometricLaplace):
        lam = dist.lam
        if isinstance(cost, L1) or (isinstance(cost, Power) and cost.m == 1):
            return CostEstimate(2.0 * lam / (1.0 - lam * lam), 0.0)
        if isinstance(cost, L2) or (isinstance(cost, Power) and cost.m == 2):
            return CostEstimate(2.0 * lam / (1.0 - lam) ** 2, 0.0)
        return _geometric_series_cost(lam, cost)
    if isinstance(dist, Product):
        # coordinate additivity: each axis marginal sums to one
        parts = [expected_cost_estimate(ax, cost) for ax in dist.axes]
        return CostEstimate(math.fsum(p.value for p in parts), math.fsum(p.error_bound for p in parts))
    if isinstance(dist, FiniteND):
        total = []
        for axis in range(dist.dims):
            other = tuple(i for i in range(dist.dims) if i != axis)
            marginal = dist.probs.sum(axis=other) if other else dist.probs
            ks = np.arange(dist.offset[axis], dist.offset[axis] + marginal.size)
            total.extend(marginal * cost.axis_values(ks))
        return CostEstimate(math.fsum(total), 0.0)
    raise InvalidParams(f"unknown distribution type {type(dist).__name__}")


def expected_cost(dist: NoiseDistribution, cost: CostFn) -> float:
    return expected_cost_estimate(dist, cost).value


# ---------------------------------------------------------------- reports


@dataclass(frozen=True)
class BoundReport:
    value: float
    kind: str
    method: str
    preconditions_ok: bool
    notes: tuple = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.kind not in ("lower", "upper"):
            raise ValueError(f"kind must be 'lower' or 'upper', got {self.kind!r}")
        object.__setattr__(self, "notes", tuple(self.notes))

    @property
    def certified(self) -> bool:
        return self.preconditions_ok

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "kind": self.kind,
            "method": self.method,
            "preconditions_ok": self.preconditions_ok,
            "notes": list(self.notes),
        }


# ---------------------------------------------------------------- JSON


def dist_to_json(dist: NoiseDistribution) -> dict:
    if isinstance(dist, Finite1D):
        return {"type": "finite", "offset": dist.offset, "probs": dist.probs.tolist()}
    if isinstance(dist, GeometricLaplace):
        return {"type": "geometric", "lambda": dist.lam}
    if isinstance(dist, Product):
        return {"type": "product", "axes": [dist_to_json(ax) for ax in dist.axes]}
    if isinstance(dist, FiniteND):
        return {"type": "finite_nd", "offset": list(dist.offset), "probs": dist.probs.tolist()}
    raise InvalidParams(f"unknown distribution type {type(dist).__name__}")


def dist_from_json(obj: dict) -> NoiseDistribution:
    try:
        kind = obj["type"]
        if kind == "finite":
            dist = Finite1D(int(obj["offset"]), obj["probs"])
        elif kind == "geometric":
            dist = GeometricLaplace(float(obj["lambda"]))
        elif kind == "product":
            dist = Product(tuple(dist_from_json(ax) for ax in obj["axes"]))
        elif kind == "finite_nd":
            dist = FiniteND(tuple(obj["offset"]), obj["probs"])
        else:
            raise InvalidParams(f"unknown distribution type {kind!r}")
    except (KeyError, TypeError) as exc:
        raise InvalidParams(f"malformed distribution JSON: {exc}") from exc
    return validate_distribution(dist)


def cost_from_json(obj: dict) -> CostFn:
    try:
        kind = obj["type"]
        if kind == "l1":
            return L1()
        if kind == "l2":
            return L2()
        if kind == "power":
            return Power(int(obj["m"]))
        if kind == "table":
            return Table(tuple(obj["values"]), obj.get("tail", "error"))
    except (KeyError, TypeError) as exc:
        raise InvalidCost(f"malformed cost JSON: {exc}") from exc
    raise InvalidCost(f"unknown cost type {kind!r}")


def cost_to_json(cost: CostFn) -> dict:
    return cost.to_json()
