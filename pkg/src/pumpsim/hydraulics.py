"""Pump and system characteristic curves and their intersection.

Flow is in m³/h and head in m everywhere in this module. Pump curves are stored
in monomial form ``H = c0 n² + c1 n Q + c2 Q²`` with ``n = f / f_nominal``.
The datasheet convention ``H = a0 - a1 Q - a2 Q²`` maps to
``(c0, c1, c2) = (a0, -a1, -a2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class NoIntersection(ValueError):
    """The scaled pump cannot lift against the static head (zero flow)."""


class BelowFrequencyFloor(ValueError):
    """Sample frequency too low for affinity normalization."""


@dataclass(frozen=True)
class PumpCurve:
    c0: float
    c1: float
    c2: float
    f_nominal: float = 50.0

    def __post_init__(self):
        if not self.c0 > 0:
            raise ValueError(f"pump curve c0 must be positive, got {self.c0}")
        if not self.c2 < 0:
            raise ValueError(f"pump curve c2 must be negative, got {self.c2}")
        if self.c1 > 0:
            # head must fall monotonically from shut-off
            raise ValueError(f"pump curve c1 must be <= 0, got {self.c1}")
        if not self.f_nominal > 0:
            raise ValueError("f_nominal must be positive")

    @classmethod
    def from_datasheet(cls, a0: float, a1: float, a2: float, f_nominal: float = 50.0) -> "PumpCurve":
        """Build from ``H = a0 - a1 Q - a2 Q²`` coefficients."""
        return cls(a0, -a1, -a2, f_nominal)

    def zero_head_flow(self, n: float = 1.0) -> float:
        """Positive root of the curve scaled to speed ratio ``n``."""
        b = self.c1 * n
        disc = b * b - 4.0 * self.c2 * self.c0 * n * n
        return (-b - math.sqrt(disc)) / (2.0 * self.c2)


@dataclass(frozen=True)
class SystemCurve:
    h_static: float
    k: float

    def __post_init__(self):
        if self.h_static < 0:
            raise ValueError(f"static head must be >= 0, got {self.h_static}")
        if not self.k > 0:
            raise ValueError(f"friction coefficient must be positive, got {self.k}")


@dataclass(frozen=True)
class OperatingPoint:
    q: float
    h: float


def pump_head(curve: PumpCurve, q: float, n: float = 1.0) -> float:
    return curve.c0 * n * n + curve.c1 * n * q + curve.c2 * q * q


def system_head(curve: SystemCurve, q: float) -> float:
    return curve.h_static + curve.k * q * q


def solve_operating_point(
    pump: PumpCurve,
    system: SystemCurve,
    n: float = 1.0,
    tol: float = 1e-8,
    max_iter: int = 200,
    rel_q_tol: float = 1e-13,
) -> OperatingPoint:
    """Intersect the affinity-scaled pump curve with the system curve by bisection.

    The bracket is ``[0, Q_zero(n)]``. Iteration stops once the head mismatch is
    within ``tol`` and the bracket has shrunk to ``rel_q_tol`` relative width, or
    after ``max_iter`` halvings.

    Raises
    ------
    NoIntersection
        If the shut-off head at speed ``n`` does not exceed the static head.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if pump.c0 * n * n <= system.h_static:
        raise NoIntersection(
            f"shut-off head {pump.c0 * n * n:.6g} m at n={n:.4g} "
            f"does not exceed static head {system.h_static:.6g} m"
        )

    def mismatch(q: float) -> float:
        return pump_head(pump, q, n) - system_head(system, q)

    lo, hi = 0.0, pump.zero_head_flow(n)
    # mismatch(lo) > 0 and mismatch(hi) = -system_head(hi) < 0
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        g = mismatch(mid)
        if g == 0.0:
            break
        if g > 0:
            lo = mid
        else:
            hi = mid
        if abs(g) <= tol and hi - lo <= rel_q_tol * hi:
            mid = 0.5 * (lo + hi)
            break
    return OperatingPoint(mid, system_head(system, mid))


def affinity_normalize(
    q: float, h: float, f: float, f_nominal: float, f_floor: float | None = None
) -> tuple[float, float]:
    """Map a sample taken at drive frequency ``f`` to nominal speed."""
    floor = 0.2 * f_nominal if f_floor is None else f_floor
    if not f > floor:
        raise BelowFrequencyFloor(f"frequency {f} Hz is not above the floor {floor} Hz")
    ratio = f_nominal / f
    return q * ratio, h * ratio * ratio


def curve_slopes(pump: PumpCurve, system: SystemCurve, q_star: float) -> tuple[float, float]:
    """dH/dQ of the nominal-speed pump curve and of the system curve at ``q_star``."""
    return pump.c1 + 2.0 * pump.c2 * q_star, 2.0 * system.k * q_star
