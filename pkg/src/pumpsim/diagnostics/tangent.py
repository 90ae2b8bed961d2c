"""Tangent residuals and the pump-versus-system decision index.

A healthy operating point moves along both nominal curves at once. When only
the pump degrades the point slides along the system curve, so the residual
against the system tangent vanishes; clogging does the converse. The index
``I_W`` is the share of residual magnitude carried by the pump channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.ndimage import uniform_filter1d

from ..hydraulics import PumpCurve, SystemCurve, pump_head, system_head

NORMAL = "normal"
PUMP_FAULT = "pump_fault"
SYSTEM_FAULT = "system_fault"

DEFAULT_PUMP_LCI = 0.6
DEFAULT_SYSTEM_UCI = 0.4


class TooFewSamples(ValueError):
    pass


class InsufficientBaseline(ValueError):
    pass


def curve_residuals(q_star, h_star, pump: PumpCurve, system: SystemCurve) -> tuple[np.ndarray, np.ndarray]:
    """Head offsets of normalized samples from the nominal pump and system curves."""
    q = np.asarray(q_star, dtype=float)
    h = np.asarray(h_star, dtype=float)
    return h - pump_head(pump, q), h - system_head(system, q)


def tangent_residuals(
    t,
    q_star,
    h_star,
    pump: PumpCurve,
    system: SystemCurve,
    smoothing_window: int = 15,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-step ``(Ψ_p, Ψ_s)``.

    ``Ψ = dH*/dt - m(Q*) dQ*/dt`` with ``m`` the local slope of the nominal
    curve, computed as the time derivative of the curve residual. That form is
    identical by the chain rule and is exactly zero along a nominal curve.
    Residuals are smoothed by an edge-padded moving average, then
    differentiated with central differences (one-sided at the ends).
    """
    t = np.asarray(t, dtype=float)
    if smoothing_window < 1:
        raise ValueError("smoothing_window must be >= 1")
    if len(t) < smoothing_window + 2:
        raise TooFewSamples(f"need at least {smoothing_window + 2} samples, got {len(t)}")
    r_p, r_s = curve_residuals(q_star, h_star, pump, system)
    out = []
    for r in (r_p, r_s):
        if smoothing_window > 1:
            r = uniform_filter1d(r, smoothing_window, mode="nearest")
        out.append(np.gradient(r, t))
    return out[0], out[1]


def baseline_residuals(
    q_star, h_star, pump: PumpCurve, system: SystemCurve, offsets: tuple[float, float] = (0.0, 0.0)
) -> tuple[np.ndarray, np.ndarray]:
    """Displacement of each sample from the learned nominal operating region.

    For short constant-speed segments the within-segment velocity is pure
    sensor noise, so the online detector compares against the baseline
    instead. ``offsets`` are the mean curve residuals seen while learning.
    """
    r_p, r_s = curve_residuals(q_star, h_star, pump, system)
    return r_p - offsets[0], r_s - offsets[1]


def decision_index(pump_res, system_res) -> float:
    a = np.abs(np.asarray(pump_res, dtype=float))
    b = np.abs(np.asarray(system_res, dtype=float))
    if a.size == 0 or a.shape != b.shape:
        raise ValueError("residual series must be non-empty and of equal length")
    ma, mb = float(a.mean()), float(b.mean())
    if ma + mb == 0.0:
        return 0.5
    return ma / (ma + mb)


def pointwise_index(pump_res, system_res) -> np.ndarray:
    """``I(t)``; steps where both residuals vanish are set to 0.5."""
    a = np.abs(np.asarray(pump_res, dtype=float))
    b = np.abs(np.asarray(system_res, dtype=float))
    den = a + b
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, a / np.where(den > 0, den, 1.0), 0.5)


def default_block_length(n: int) -> int:
    return max(5, math.ceil(n ** (1.0 / 3.0)))


def bootstrap_index_ci(
    pump_res,
    system_res,
    block_len: int | None = None,
    B: int = 1000,
    alpha: float = 0.05,
    rng: np.random.Generator | None = None,
) -> tuple[float, float]:
    """Circular moving-block bootstrap percentile interval for ``I_W``.

    The interval is widened if needed so it always contains the point estimate.
    """
    a = np.abs(np.asarray(pump_res, dtype=float))
    b = np.abs(np.asarray(system_res, dtype=float))
    n = a.size
    if n == 0 or a.shape != b.shape:
        raise ValueError("residual series must be non-empty and of equal length")
    if B < 100:
        raise ValueError("B must be >= 100")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    L = default_block_length(n) if block_len is None else int(block_len)
    if L < 1:
        raise ValueError("block_len must be >= 1")
    L = min(L, n)
    rng = np.random.default_rng(0) if rng is None else rng
    n_blocks = -(-n // L)
    starts = rng.integers(0, n, size=(B, n_blocks))
    idx = ((starts[:, :, None] + np.arange(L)) % n).reshape(B, n_blocks * L)[:, :n]
    ma = a[idx].mean(axis=1)
    mb = b[idx].mean(axis=1)
    den = ma + mb
    reps = np.where(den > 0, ma / np.where(den > 0, den, 1.0), 0.5)
    lo, hi = np.quantile(reps, [alpha / 2.0, 1.0 - alpha / 2.0])
    iw = decision_index(a, b)
    return float(min(lo, iw)), float(max(hi, iw))


@dataclass(frozen=True)
class Thresholds:
    pump_lci: float = DEFAULT_PUMP_LCI
    system_uci: float = DEFAULT_SYSTEM_UCI


def learn_thresholds(normal_indices: Sequence[float], min_segments: int = 5) -> Thresholds:
    """Widen the default cut-offs to the 95% spread of ``I_W`` on normal segments."""
    v = np.asarray(normal_indices, dtype=float)
    if v.size < min_segments:
        raise InsufficientBaseline(f"need {min_segments} normal segments, got {v.size}")
    lo, hi = np.quantile(v, [0.025, 0.975])
    return Thresholds(max(DEFAULT_PUMP_LCI, float(hi)), min(DEFAULT_SYSTEM_UCI, float(lo)))


def classify_segment(ci: tuple[float, float], thresholds: Thresholds = Thresholds()) -> str:
    lower, upper = ci
    if lower > thresholds.pump_lci:
        return PUMP_FAULT
    if upper < thresholds.system_uci:
        return SYSTEM_FAULT
    return NORMAL


@dataclass(frozen=True)
class TangentVerdict:
    i_w: float
    ci: tuple[float, float]
    label: str
    pump_res: np.ndarray
    system_res: np.ndarray


def tangent_verdict(
    pump_res,
    system_res,
    thresholds: Thresholds = Thresholds(),
    block_len: int | None = None,
    B: int = 1000,
    alpha: float = 0.05,
    rng: np.random.Generator | None = None,
) -> TangentVerdict:
    iw = decision_index(pump_res, system_res)
    ci = bootstrap_index_ci(pump_res, system_res, block_len, B, alpha, rng)
    return TangentVerdict(iw, ci, classify_segment(ci, thresholds), np.asarray(pump_res), np.asarray(system_res))
