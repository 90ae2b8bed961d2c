"""Hydraulic and three-phase electrical power, plus multiplicative sensor noise."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ElectricalSpec:
    voltage: float = 400.0  # phase-to-phase, V
    i_nominal: float = 30.0  # A
    cos_phi: float = 0.9
    inrush_cap: float = 5.0  # multiple of i_nominal
    rho: float = 1000.0  # kg/m³
    g: float = 9.81  # m/s²
    efficiency: float = 0.9

    def __post_init__(self):
        for name in ("voltage", "i_nominal", "inrush_cap", "rho", "g"):
            if not getattr(self, name) > 0:
                raise ValueError(f"electrical.{name} must be positive")
        if not 0 < self.cos_phi <= 1:
            raise ValueError("cos_phi must lie in (0, 1]")
        if not 0 < self.efficiency <= 1:
            raise ValueError("efficiency must lie in (0, 1]")

    def eta(self, q: float, f: float) -> float:
        """Pump efficiency map; constant for new pumps."""
        return self.efficiency


def hydraulic_power(q: float, h: float, spec: ElectricalSpec, f: float | None = None) -> tuple[float, float]:
    """Return ``(P_output, P_input)`` in W for flow ``q`` (m³/h) and head ``h`` (m)."""
    p_out = spec.rho * spec.g * (q / 3600.0) * h
    return p_out, p_out / spec.eta(q, f)


def electrical_input_power(n: float, spec: ElectricalSpec) -> float:
    """Three-phase input power with current proportional to speed, capped for inrush."""
    current = min(spec.i_nominal * n, spec.inrush_cap * spec.i_nominal)
    return math.sqrt(3.0) * spec.voltage * current * spec.cos_phi


def apply_relative_noise(x, sigma_rel: float, rng: np.random.Generator | None = None, clamp: bool = True):
    """``x * (1 + eps)`` with ``eps ~ N(0, sigma_rel²)``; no draws when ``sigma_rel == 0``."""
    if sigma_rel < 0:
        raise ValueError("sigma_rel must be >= 0")
    if sigma_rel == 0:
        return x
    eps = rng.normal(0.0, sigma_rel, np.shape(x))
    out = np.asarray(x) * (1.0 + eps)
    if clamp:
        out = np.maximum(out, 0.0)
    return float(out) if np.ndim(out) == 0 else out
