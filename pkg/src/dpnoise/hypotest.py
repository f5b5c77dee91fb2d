"""False-alarm / missed-detection pairs compatible with an (epsilon, delta) guarantee.

Any test between two neighbouring inputs must satisfy both
``P_FA + e^eps P_MD >= 1 - delta`` and ``e^eps P_FA + P_MD >= 1 - delta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidParams

POINT_TOL = 1e-12


@dataclass(frozen=True)
class TradeoffRegion:
    epsilon: float
    delta: float
    vertices: tuple  # ((p_fa, p_md), ...) along the lower boundary, left to right

    def to_csv(self) -> str:
        lines = ["p_fa,p_md"]
        lines += [f"{_fmt(fa)},{_fmt(md)}" for fa, md in self.vertices]
        return "\n".join(lines) + "\n"


def _fmt(x: float) -> str:
    return format(x, ".12g")


def tradeoff_region(epsilon: float, delta: float) -> TradeoffRegion:
    if not (math.isfinite(epsilon) and epsilon >= 0):
        raise InvalidParams(f"epsilon must be >= 0, got {epsilon!r}")
    if not (0.0 <= delta <= 1.0):
        raise InvalidParams(f"delta must lie in [0, 1], got {delta!r}")
    top = 1.0 - delta
    corner = top / (1.0 + math.exp(epsilon))
    # the middle vertex is kept even when collinear (epsilon = 0)
    return TradeoffRegion(epsilon, delta, ((0.0, top), (corner, corner), (top, 0.0)))


def point_feasible(region: TradeoffRegion, p_fa: float, p_md: float) -> bool:
    if not (0.0 <= p_fa <= 1.0 and 0.0 <= p_md <= 1.0):
        raise InvalidParams("error probabilities must lie in [0, 1]")
    growth = math.exp(region.epsilon)
    need = 1.0 - region.delta - POINT_TOL
    return p_fa + growth * p_md >= need and growth * p_fa + p_md >= need


def region_contains(outer: TradeoffRegion, inner: TradeoffRegion) -> bool:
    """True if every vertex of ``inner`` is feasible in ``outer``.

    Both regions are convex and upward closed, so checking the boundary
    vertices of ``inner`` decides containment.
    """
    return all(point_feasible(outer, fa, md) for fa, md in inner.vertices)
