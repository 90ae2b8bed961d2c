"""Stochastic sump inflow: ECDF baseline, Poisson surges, diurnal sinusoid."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from ._rng import stream


class EmptySamples(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class EmpiricalCdf:
    """Step ECDF over a sorted sample of flows (m³/h)."""

    sorted_samples: np.ndarray

    @property
    def m(self) -> int:
        return len(self.sorted_samples)

    def __call__(self, q):
        return np.searchsorted(self.sorted_samples, q, side="right") / self.m

    def __eq__(self, other):
        return isinstance(other, EmpiricalCdf) and np.array_equal(
            self.sorted_samples, other.sorted_samples
        )

    __hash__ = None


def build_ecdf(samples: Sequence[float]) -> EmpiricalCdf:
    arr = np.asarray(samples, dtype=float).ravel()
    if arr.size == 0:
        raise EmptySamples("ECDF needs at least one sample")
    if not np.all(np.isfinite(arr)):
        raise ValueError("ECDF samples must be finite")
    if np.any(arr < 0):
        raise ValueError("ECDF samples must be non-negative flows")
    out = np.sort(arr)
    out.flags.writeable = False
    return EmpiricalCdf(out)


def sample_baseline(ecdf: EmpiricalCdf, u):
    """Generalized inverse: smallest order statistic ``q_(j)`` with ``j/m > u``."""
    idx = np.floor(np.asarray(u, dtype=float) * ecdf.m).astype(np.int64)
    idx = np.clip(idx, 0, ecdf.m - 1)
    out = ecdf.sorted_samples[idx]
    return float(out) if np.ndim(out) == 0 else out


# Quantile knots (probability, m³/h) for the bundled inflow sample. The 0.5,
# 0.95 and 0.99 knots are 0.016, 0.032 and 0.040 m³/s.
_REFERENCE_KNOTS = (
    (0.0, 2.0),
    (0.05, 16.0),
    (0.25, 38.0),
    (0.5, 57.6),
    (0.75, 78.0),
    (0.95, 115.2),
    (0.99, 144.0),
    (1.0, 190.0),
)


def reference_inflow_samples(m: int = 20000) -> np.ndarray:
    """Deterministic right-skewed inflow sample (m³/h) with the station's quantiles."""
    u = (np.arange(m) + 0.5) / m
    p, q = zip(*_REFERENCE_KNOTS)
    return np.interp(u, p, q)


@dataclass(frozen=True)
class PeakProcess:
    rate: float  # events per second
    magnitude: float  # m³/h added while an event is active
    duration: float  # s

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("peak rate must be >= 0")
        if self.magnitude < 0:
            raise ValueError("peak magnitude must be >= 0")
        if not self.duration > 0:
            raise ValueError("peak duration must be positive")


def generate_peak_train(
    process: PeakProcess, horizon: float, rng: np.random.Generator
) -> list[tuple[float, float]]:
    """Homogeneous Poisson arrivals on ``[0, horizon)``; returns (start, end) pairs."""
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if process.rate == 0:
        return []
    events = []
    scale = 1.0 / process.rate
    t = rng.exponential(scale)
    while t < horizon:
        events.append((t, t + process.duration))
        t += rng.exponential(scale)
    return events


def peak_contribution(
    events: Sequence[tuple[float, float]], magnitude: float, n: int, dt: float = 1.0
) -> np.ndarray:
    """Stacked surge flow on the grid ``k*dt``; an event covers ``[start, end)``."""
    diff = np.zeros(n + 1)
    for start, end in events:
        k0 = min(n, math.ceil(start / dt - 1e-9))
        k1 = min(n, math.ceil(end / dt - 1e-9))
        diff[k0] += magnitude
        diff[k1] -= magnitude
    return np.cumsum(diff[:n])


@dataclass(frozen=True)
class EcdfBase:
    ecdf: EmpiricalCdf


@dataclass(frozen=True)
class SinusoidBase:
    mean: float
    amplitude: float
    period: float = 86400.0
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.amplitude < 0 or self.amplitude > self.mean:
            raise ValueError("sinusoid amplitude must lie in [0, mean]")
        if not self.period > 0:
            raise ValueError("sinusoid period must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise sigma must be >= 0")


@dataclass(frozen=True)
class InflowSpec:
    base: Union[EcdfBase, SinusoidBase]
    horizon: float
    peaks: PeakProcess | None = None
    seed: int = 0

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("inflow horizon must be >= 1 s")


def generate_inflow(spec: InflowSpec, dt: float = 1.0) -> np.ndarray:
    """Per-step inflow (m³/h) on ``t = k*dt``, clamped at zero.

    Baseline, arrival and noise draws come from separate named streams of
    ``spec.seed``.
    """
    n = int(round(spec.horizon / dt))
    t = np.arange(n) * dt
    base = spec.base
    if isinstance(base, EcdfBase):
        u = stream(spec.seed, "inflow.baseline").random(n)
        q = sample_baseline(base.ecdf, u).astype(float)
    else:
        q = base.mean + base.amplitude * np.sin(2.0 * np.pi * t / base.period)
        if base.noise_sigma > 0:
            q = q + stream(spec.seed, "inflow.noise").normal(0.0, base.noise_sigma, n)
    if spec.peaks is not None and spec.peaks.rate > 0:
        events = generate_peak_train(spec.peaks, n * dt, stream(spec.seed, "inflow.arrivals"))
        q = q + peak_contribution(events, spec.peaks.magnitude, n, dt)
    return np.maximum(q, 0.0)
