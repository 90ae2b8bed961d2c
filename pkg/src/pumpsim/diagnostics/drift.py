"""Whole-record analysis of a drift fixture: regression F-test plus tangent index."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._rng import stream
from ..hydraulics import PumpCurve, SystemCurve
from .fixtures import NOMINAL_PUMP, NOMINAL_SYSTEM, DriftSamples
from .regression import FTestResult, RankDeficient, RegressionFit, fit_drift_quadratic, fit_static_quadratic, nested_f_test
from .tangent import Thresholds, bootstrap_index_ci, classify_segment, decision_index, tangent_residuals


@dataclass(frozen=True)
class DriftReport:
    """``ftest`` and the fits are ``None`` when the regression design is degenerate,
    e.g. noiseless fixed-speed data where flow is a function of time alone."""

    static: RegressionFit | None
    drift: RegressionFit | None
    ftest: FTestResult | None
    pump_res: np.ndarray
    system_res: np.ndarray
    i_w: float
    ci: tuple[float, float]
    label: str


def analyze_drift(
    samples: DriftSamples,
    seed: int = 0,
    pump: PumpCurve = NOMINAL_PUMP,
    system: SystemCurve = NOMINAL_SYSTEM,
    smoothing_window: int = 15,
    B: int = 1000,
    alpha: float = 0.05,
    thresholds: Thresholds = Thresholds(),
) -> DriftReport:
    q_star, h_star = samples.normalized(pump.f_nominal)
    try:
        static = fit_static_quadratic(q_star, h_star)
        drift = fit_drift_quadratic(samples.t, q_star, h_star)
        ftest = nested_f_test(static, drift, allow_perfect=True)
    except RankDeficient:
        static = drift = ftest = None
    pump_res, system_res = tangent_residuals(samples.t, q_star, h_star, pump, system, smoothing_window)
    iw = decision_index(pump_res, system_res)
    ci = bootstrap_index_ci(pump_res, system_res, None, B, alpha, stream(seed, "bootstrap"))
    return DriftReport(static, drift, ftest, pump_res, system_res, iw, ci, classify_segment(ci, thresholds))
