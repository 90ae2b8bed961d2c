"""Parametric fault profiles and their effect on speed and system curve.

Faults ramp in linearly over ``[t_start, t_end]`` and then hold at full
severity. An optional ``t_clear`` models a repair: from that instant on the
fault has no effect and no longer labels the data.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence, Union

from .hydraulics import SystemCurve

NORMAL = "normal"
SYSTEM_FAULT = "system_fault"


def pump_fault_label(pump_id: int) -> str:
    return f"pump_fault:{pump_id}"


def ramp_fraction(t: float, t0: float, t1: float) -> float:
    if not t0 < t1:
        raise ValueError("ramp requires t0 < t1")
    if t < t0:
        return 0.0
    if t >= t1:
        return 1.0
    return (t - t0) / (t1 - t0)


def _check_window(t_start, t_end, t_clear):
    if not t_start < t_end:
        raise ValueError(f"fault window needs t_start < t_end, got [{t_start}, {t_end}]")
    if t_clear is not None and t_clear < t_end:
        raise ValueError("t_clear must not precede t_end")


@dataclass(frozen=True)
class Blockage:
    """Impeller blockage derating the effective speed of one pump."""

    pump_id: int
    severity: float
    t_start: float
    t_end: float
    t_clear: float | None = None

    def __post_init__(self):
        if not 0 < self.severity < 1:
            raise ValueError(f"blockage severity must lie in (0, 1), got {self.severity}")
        if self.pump_id < 1:
            raise ValueError("pump ids start at 1")
        _check_window(self.t_start, self.t_end, self.t_clear)

    def progress(self, t: float) -> float:
        if self.t_clear is not None and t >= self.t_clear:
            return 0.0
        return ramp_fraction(t, self.t_start, self.t_end)


@dataclass(frozen=True)
class Clogging:
    """Rising-main fouling: relative friction increase plus static-head offset."""

    dk_rel: float
    dh_static: float
    t_start: float
    t_end: float
    t_clear: float | None = None

    def __post_init__(self):
        if self.dk_rel < 0 or self.dh_static < 0:
            raise ValueError("clogging increments must be >= 0")
        _check_window(self.t_start, self.t_end, self.t_clear)

    def progress(self, t: float) -> float:
        if self.t_clear is not None and t >= self.t_clear:
            return 0.0
        return ramp_fraction(t, self.t_start, self.t_end)


FaultProfile = Union[Blockage, Clogging]


def blockage_factor(t: float, profile: Blockage) -> float:
    """Speed derating factor 1 - severity * ramp."""
    return 1.0 - profile.severity * profile.progress(t)


def effective_parameters(
    t: float, base_system: SystemCurve, profiles: Sequence[FaultProfile], n_pumps: int
) -> tuple[SystemCurve, list[float]]:
    """System curve and per-pump speed factors in force at time ``t``.

    Clogging profiles compose multiplicatively on ``k`` and additively on the
    static head; blockages on the same pump multiply their factors.
    """
    k = base_system.k
    h_static = base_system.h_static
    speed_factor = [1.0] * n_pumps
    for p in profiles:
        if isinstance(p, Clogging):
            r = p.progress(t)
            k *= 1.0 + p.dk_rel * r
            h_static += p.dh_static * r
        else:
            if p.pump_id <= n_pumps:
                speed_factor[p.pump_id - 1] *= blockage_factor(t, p)
    if k == base_system.k and h_static == base_system.h_static:
        return base_system, speed_factor
    return replace(base_system, k=k, h_static=h_static), speed_factor


def label_at(t: float, profiles: Sequence[FaultProfile]) -> str:
    """Ground-truth label: every fault with progress > 0, joined by ``;``."""
    parts = set()
    for p in profiles:
        if p.progress(t) > 0:
            parts.add(SYSTEM_FAULT if isinstance(p, Clogging) else pump_fault_label(p.pump_id))
    return ";".join(sorted(parts)) if parts else NORMAL
