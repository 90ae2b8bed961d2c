"""Synthetic drift generators: a degrading pump and a clogging rising main.

Both sample the operating point once per step at a jittered, slowly falling
drive frequency and add Gaussian sensor noise to flow and head.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._rng import stream
from ..hydraulics import PumpCurve, SystemCurve, solve_operating_point

NOMINAL_PUMP = PumpCurve(15.0, -5e-4, -9e-4, 50.0)
NOMINAL_SYSTEM = SystemCurve(2.0, 6e-4)


@dataclass(frozen=True)
class DriftSamples:
    t: np.ndarray
    q: np.ndarray
    h: np.ndarray
    f: np.ndarray

    def normalized(self, f_nominal: float = 50.0) -> tuple[np.ndarray, np.ndarray]:
        ratio = f_nominal / self.f
        return self.q * ratio, self.h * ratio * ratio


@dataclass(frozen=True)
class NoiseLevels:
    sigma_q: float = 1.0  # m³/h
    sigma_h: float = 0.5  # m
    sigma_f: float = 1.0  # Hz
    f_slope: float = 0.1  # Hz per step

    @classmethod
    def noiseless(cls, f_slope: float = 0.0) -> "NoiseLevels":
        return cls(0.0, 0.0, 0.0, f_slope)


def degradation_coefficients(t: float, drift: bool = True) -> PumpCurve:
    """Pump curve at step ``t``: shut-off head falls 0.1 m per step, losses grow."""
    s = float(t) if drift else 0.0
    return PumpCurve(15.0 - 0.1 * s, -(5e-4 + 1e-6 * s), -(9e-4 + 5e-6 * s), 50.0)


def clogging_system(t: float, m: int = 50, dk_rel: float = 2.0, dh_static: float = 0.5) -> SystemCurve:
    """System curve ramped linearly from nominal to full clogging over ``m`` steps."""
    r = float(t) / (m - 1)
    return SystemCurve(NOMINAL_SYSTEM.h_static + dh_static * r, NOMINAL_SYSTEM.k * (1.0 + dk_rel * r))


def _sample(pumps, systems, seed: int, noise: NoiseLevels) -> DriftSamples:
    m = len(pumps)
    t = np.arange(m, dtype=float)
    f = 50.0 - noise.f_slope * t
    if noise.sigma_f > 0:
        f = f + stream(seed, "fixture.frequency").normal(0.0, noise.sigma_f, m)
    q = np.empty(m)
    h = np.empty(m)
    for i in range(m):
        op = solve_operating_point(pumps[i], systems[i], f[i] / 50.0)
        q[i], h[i] = op.q, op.h
    if noise.sigma_q > 0 or noise.sigma_h > 0:
        rng = stream(seed, "fixture.sensor")
        q = q + rng.normal(0.0, noise.sigma_q, m)
        h = h + rng.normal(0.0, noise.sigma_h, m)
    return DriftSamples(t, q, h, f)


def gen_degradation_fixture(
    seed: int, m: int = 50, drift: bool = True, noise: NoiseLevels = NoiseLevels()
) -> DriftSamples:
    """Operating points of a degrading pump on the fixed nominal system curve.

    ``drift=False`` keeps the pump at its nominal curve for null calibration.
    """
    pumps = [degradation_coefficients(t, drift) for t in range(m)]
    return _sample(pumps, [NOMINAL_SYSTEM] * m, seed, noise)


def gen_clogging_fixture(
    seed: int,
    m: int = 50,
    dk_rel: float = 2.0,
    dh_static: float = 0.5,
    noise: NoiseLevels = NoiseLevels(),
) -> DriftSamples:
    """Healthy nominal pump against a clogging system curve.

    The default ``dk_rel`` gives the same final flow loss as the pump fixture.
    """
    systems = [clogging_system(t, m, dk_rel, dh_static) for t in range(m)]
    return _sample([NOMINAL_PUMP] * m, systems, seed, noise)
