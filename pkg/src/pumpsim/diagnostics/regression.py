"""Least-squares curve fits and the nested-model F-test.

Fits are computed in a centred and scaled polynomial basis, which keeps the
normal equations well conditioned at realistic flows, and are mapped back to
plain monomial coefficients afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb

import numpy as np

from ..hydraulics import SystemCurve
from .fdist import f_survival


class RankDeficient(ValueError):
    """Design matrix is singular or too ill-conditioned to fit."""


class DegenerateResidual(ValueError):
    """The larger model fits exactly, so the F ratio is undefined."""


_COND_LIMIT = 1e12


@dataclass(frozen=True)
class RegressionFit:
    """Coefficients in the monomial basis of the model plus the residual sum of squares.

    Static quadratic: ``(θ0, θ1, θ2)`` for ``1, q, q²``. Drift quadratic:
    ``(θ0, θ1, θ2, α0, α1, α2)`` for ``1, q, q², t, t·q, t·q²``.
    """

    theta: np.ndarray
    ssr: float
    n_params: int
    m: int

    def __post_init__(self):
        if self.ssr < 0:
            raise ValueError("ssr must be >= 0")
        if self.m <= self.n_params:
            raise ValueError("need more samples than parameters")


QuadraticFit = RegressionFit


def _solve_normal(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    gram = X.T @ X
    if not np.all(np.isfinite(gram)):
        raise RankDeficient("non-finite design")
    cond = np.linalg.cond(gram)
    if not cond < _COND_LIMIT:
        raise RankDeficient(f"design matrix condition number {cond:.3g} exceeds {_COND_LIMIT:.0e}")
    return np.linalg.solve(gram, X.T @ y)


def _standardize(x: np.ndarray, name: str) -> tuple[np.ndarray, float, float]:
    mu = float(np.mean(x))
    s = float(np.std(x))
    if not s > 1e-12 * max(1.0, abs(mu)):
        raise RankDeficient(f"all {name} values are identical")
    return (x - mu) / s, mu, s


def _power_map(mu: float, s: float, degree: int) -> np.ndarray:
    """Matrix ``M`` with ``((x - mu)/s)^j = sum_i M[i, j] x^i``."""
    M = np.zeros((degree + 1, degree + 1))
    for j in range(degree + 1):
        for i in range(j + 1):
            M[i, j] = comb(j, i) * (-mu) ** (j - i) / s**j
    return M


def _as_array(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float).ravel()
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def fit_static_quadratic(q, h) -> RegressionFit:
    """OLS of ``h = θ0 + θ1 q + θ2 q²``."""
    q, h = _as_array(q, "q"), _as_array(h, "h")
    if len(q) != len(h):
        raise ValueError("q and h must have equal length")
    if len(q) < 4:
        raise ValueError("static fit needs at least 4 samples")
    z, mu, s = _standardize(q, "flow")
    X = np.column_stack([np.ones_like(z), z, z * z])
    b = _solve_normal(X, h)
    ssr = float(np.sum((h - X @ b) ** 2))
    theta = _power_map(mu, s, 2) @ b
    return RegressionFit(theta, ssr, 3, len(q))


def fit_drift_quadratic(t, q, h) -> RegressionFit:
    """OLS of ``h = (θ0 + α0 t) + (θ1 + α1 t) q + (θ2 + α2 t) q²``."""
    t, q, h = _as_array(t, "t"), _as_array(q, "q"), _as_array(h, "h")
    if not len(t) == len(q) == len(h):
        raise ValueError("t, q and h must have equal length")
    if len(q) < 7:
        raise ValueError("drift fit needs at least 7 samples")
    zq, mq, sq = _standardize(q, "flow")
    zt, mt, st = _standardize(t, "time")
    X = np.column_stack([np.ones_like(zq), zq, zq * zq, zt, zt * zq, zt * zq * zq])
    b = _solve_normal(X, h)
    ssr = float(np.sum((h - X @ b) ** 2))
    # column k = tp*3 + qp; coefficients factor as Mt @ B @ Mq^T
    B = b.reshape(2, 3)
    A = _power_map(mt, st, 1) @ B @ _power_map(mq, sq, 2).T
    return RegressionFit(A.ravel(), ssr, 6, len(q))


def fit_system_curve(q, h) -> SystemCurve:
    """OLS of ``h = h_static + k q²`` on raw operating points."""
    q, h = _as_array(q, "q"), _as_array(h, "h")
    if len(q) < 3:
        raise ValueError("system fit needs at least 3 samples")
    q2 = q * q
    z, mu, s = _standardize(q2, "squared flow")
    b = _solve_normal(np.column_stack([np.ones_like(z), z]), h)
    k = b[1] / s
    return SystemCurve(max(float(b[0] - k * mu), 0.0), float(k))


@dataclass(frozen=True)
class FittedPumpCurve:
    """Empirical nominal-speed curve; unlike :class:`PumpCurve` its signs are not
    constrained, since data cover only the operating range."""

    c0: float
    c1: float
    c2: float
    f_nominal: float = 50.0


def fit_pump_curve(q_star, h_star, f_nominal: float = 50.0) -> FittedPumpCurve:
    """Nominal-speed pump curve from affinity-normalized samples."""
    c0, c1, c2 = (float(v) for v in fit_static_quadratic(q_star, h_star).theta)
    return FittedPumpCurve(c0, c1, c2, f_nominal)


def fit_offset_trend(t, r) -> RegressionFit:
    """OLS of a residual series on ``1, t``."""
    t, r = _as_array(t, "t"), _as_array(r, "r")
    if len(t) != len(r):
        raise ValueError("t and r must have equal length")
    if len(t) < 3:
        raise ValueError("trend fit needs at least 3 samples")
    z, mu, s = _standardize(t, "time")
    X = np.column_stack([np.ones_like(z), z])
    b = _solve_normal(X, r)
    ssr = float(np.sum((r - X @ b) ** 2))
    return RegressionFit(_power_map(mu, s, 1) @ b, ssr, 2, len(t))


def zero_model(r) -> RegressionFit:
    """Parameter-free model ``r = 0``: the SSR is the raw sum of squares."""
    r = _as_array(r, "r")
    return RegressionFit(np.zeros(0), float(np.sum(r * r)), 0, len(r))


@dataclass(frozen=True)
class FTestResult:
    f_stat: float
    df: tuple[int, int]
    p_value: float
    aic_null: float
    aic_alt: float
    perfect_fit: bool = False
    ssr_null: float = math.nan
    ssr_alt: float = math.nan


def aic(ssr: float, m: int, p: int) -> float:
    """``m ln(SSR/m) + 2p``; ``-inf`` for an exact fit."""
    if ssr <= 0:
        return -math.inf
    return m * math.log(ssr / m) + 2 * p


def nested_f_test(null: RegressionFit, alt: RegressionFit, allow_perfect: bool = False) -> FTestResult:
    """F test of ``alt`` against the nested ``null`` model on the same samples.

    An exact fit of ``alt`` raises :class:`DegenerateResidual` unless
    ``allow_perfect`` is set, in which case the result carries ``p_value = 0``
    and ``perfect_fit = True``.
    """
    if null.m != alt.m:
        raise ValueError("fits were made on different sample counts")
    if not alt.n_params > null.n_params:
        raise ValueError("alternative model must have more parameters")
    m = alt.m
    d1, d2 = alt.n_params - null.n_params, m - alt.n_params
    a0, a1 = aic(null.ssr, m, null.n_params), aic(alt.ssr, m, alt.n_params)
    if alt.ssr <= 0:
        if not allow_perfect:
            raise DegenerateResidual("alternative model has zero residual")
        return FTestResult(math.inf, (d1, d2), 0.0, a0, a1, True, null.ssr, alt.ssr)
    # rounding can leave the nested SSR a hair below the larger model's
    gain = max(null.ssr - alt.ssr, 0.0)
    f = (gain / d1) / (alt.ssr / d2)
    return FTestResult(f, (d1, d2), f_survival(f, d1, d2), a0, a1, False, null.ssr, alt.ssr)
