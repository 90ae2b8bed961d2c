"""Cycle-wise fault attribution for one pump over a recorded series.

Nominal curves and residual offsets are learned from the first hours of data.
Each operating cycle is then judged twice: by F-tests on its curve residuals
and by tangent-index segments with adaptive thresholds.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .._rng import stream
from ..hydraulics import SystemCurve
from ..telemetry import Cycle, TimeSeries, segment_cycles
from .metrics import ConfusionMatrix, classification_metrics
from .regression import (
    FittedPumpCurve,
    FTestResult,
    RankDeficient,
    fit_offset_trend,
    fit_pump_curve,
    fit_system_curve,
    nested_f_test,
    zero_model,
)
from .tangent import (
    NORMAL,
    PUMP_FAULT,
    SYSTEM_FAULT,
    InsufficientBaseline,
    Thresholds,
    baseline_residuals,
    bootstrap_index_ci,
    classify_segment,
    curve_residuals,
    decision_index,
    learn_thresholds,
)


@dataclass(frozen=True)
class AnalysisSettings:
    pump: int = 1
    learning_s: float = 21600.0
    refresh_s: float = 21600.0
    segment_len: int = 25
    f_band: float = 1.0
    f_nominal: float = 50.0
    f_floor: float = 10.0
    alpha_test: float = 0.01
    alpha_ci: float = 0.05
    bootstrap_B: int = 1000
    min_segments: int = 5

    def __post_init__(self):
        if self.pump < 1:
            raise ValueError("pump ids start at 1")
        if not self.learning_s > 0 or not self.refresh_s > 0:
            raise ValueError("learning and refresh intervals must be positive")
        if self.segment_len < 10:
            raise ValueError("segment_len must be >= 10")
        if not 0 < self.alpha_test < 1 or not 0 < self.alpha_ci < 1:
            raise ValueError("significance levels must lie in (0, 1)")
        if self.bootstrap_B < 100:
            raise ValueError("bootstrap_B must be >= 100")


# residual RMS below this (m of head) is numerically zero
RESIDUAL_FLOOR_M = 1e-9


class NoLearningData(ValueError):
    pass


@dataclass(frozen=True)
class Baseline:
    pump: FittedPumpCurve
    system: SystemCurve
    offsets: tuple[float, float]


def learn_baseline(ts: TimeSeries, settings: AnalysisSettings) -> Baseline:
    """Fit nominal curves from the analyzed pump's samples inside the learning window."""
    col = settings.pump - 1
    early = (ts.t < settings.learning_s) & (ts.state[:, col] == 1)
    f = ts.freq[:, col]
    q, h = ts.q[:, col], ts.head[:, col]
    spd = early & (f > settings.f_floor)
    if spd.sum() < 10:
        raise NoLearningData("too few running samples in the learning window")
    ratio = settings.f_nominal / f[spd]
    pump = fit_pump_curve(q[spd] * ratio, h[spd] * ratio**2, settings.f_nominal)
    flowing = early & (q > 0)
    system = fit_system_curve(q[flowing], h[flowing])
    near = early & (np.abs(f - settings.f_nominal) <= settings.f_band)
    r_p, r_s = curve_residuals(*_normalized(ts, col, near, settings.f_nominal), pump, system)
    return Baseline(pump, system, (float(r_p.mean()), float(r_s.mean())))


def _normalized(ts: TimeSeries, col: int, idx, f_nominal: float) -> tuple[np.ndarray, np.ndarray]:
    ratio = f_nominal / ts.freq[idx, col]
    return ts.q[idx, col] * ratio, ts.head[idx, col] * ratio**2


def truth_for_pump(label: str, pump: int) -> str:
    parts = set(label.split(";"))
    if f"pump_fault:{pump}" in parts:
        return PUMP_FAULT
    if "system_fault" in parts:
        return SYSTEM_FAULT
    return NORMAL


def _majority(labels: list[str]) -> str:
    counts = Counter(labels)
    # ties resolve toward normal, then pump, then system
    return max((NORMAL, PUMP_FAULT, SYSTEM_FAULT), key=lambda c: (counts[c], c == NORMAL, c == PUMP_FAULT))


@dataclass(frozen=True)
class FTestVerdict:
    label: str
    pump_test: FTestResult | None
    system_test: FTestResult | None

    @property
    def deciding(self) -> FTestResult | None:
        tests = [x for x in (self.pump_test, self.system_test) if x is not None]
        return max(tests, key=lambda x: x.f_stat) if tests else None


def _rms(r) -> float:
    return float(np.sqrt(np.mean(np.square(r))))


def _explained(res: FTestResult) -> float:
    return res.ssr_null - res.ssr_alt


def classify_by_ftest(t, r_p, r_s, alpha: float = 0.01) -> FTestVerdict:
    """Three-way label from two residual F-tests (zero residual vs offset and trend)."""
    if len(t) < 10:
        return FTestVerdict(NORMAL, None, None)
    try:
        tp = nested_f_test(zero_model(r_p), fit_offset_trend(t, r_p), allow_perfect=True)
        tsys = nested_f_test(zero_model(r_s), fit_offset_trend(t, r_s), allow_perfect=True)
    except RankDeficient:
        return FTestVerdict(NORMAL, None, None)
    rp = tp.p_value < alpha and _rms(r_p) > RESIDUAL_FLOOR_M
    rs = tsys.p_value < alpha and _rms(r_s) > RESIDUAL_FLOOR_M
    if rp and rs:
        # both channels moved: attribute to the larger explained displacement
        label = PUMP_FAULT if _explained(tp) >= _explained(tsys) else SYSTEM_FAULT
    elif rp:
        label = PUMP_FAULT
    elif rs:
        label = SYSTEM_FAULT
    else:
        label = NORMAL
    return FTestVerdict(label, tp, tsys)


@dataclass(frozen=True)
class SegmentVerdict:
    start_t: float
    end_t: float
    i_w: float
    ci: tuple[float, float]
    label: str
    learning: bool


@dataclass
class CycleResult:
    cycle: Cycle
    truth: str
    ftest: FTestVerdict
    segments: list[SegmentVerdict] = field(default_factory=list)
    tangent_label: str = NORMAL


@dataclass
class PumpAnalysis:
    settings: AnalysisSettings
    baseline: Baseline
    cycles: list[CycleResult]
    threshold_history: list[tuple[float, Thresholds]]
    labeled: bool

    def truth(self) -> list[str]:
        return [c.truth for c in self.cycles]

    def confusion(self, method: str) -> ConfusionMatrix:
        if method == "ftest":
            pred = [c.ftest.label for c in self.cycles]
        elif method == "tangent":
            pred = [c.tangent_label for c in self.cycles]
        else:
            raise ValueError(f"unknown method {method!r}")
        return classification_metrics(pred, self.truth())


def analyze_pump(ts: TimeSeries, settings: AnalysisSettings = AnalysisSettings(), seed: int = 0) -> PumpAnalysis:
    if settings.pump > ts.n_pumps:
        raise ValueError(f"pump {settings.pump} not in series with {ts.n_pumps} pumps")
    col = settings.pump - 1
    base = learn_baseline(ts, settings)
    cycles = segment_cycles(ts, settings.pump, settings.f_band, settings.f_nominal, settings.segment_len)
    labeled = any(str(x) for x in ts.label)
    results: list[CycleResult] = []

    seg_log: list[SegmentVerdict] = []
    thresholds = Thresholds()
    history: list[tuple[float, Thresholds]] = []
    learned = False
    next_refresh = settings.learning_s
    seg_counter = 0

    def refresh(now: float, learning_only: bool) -> None:
        nonlocal thresholds
        pool = [s.i_w for s in seg_log if (s.learning if learning_only else
                (s.label == NORMAL and s.end_t > now - settings.refresh_s))]
        try:
            thresholds = learn_thresholds(pool, settings.min_segments)
        except InsufficientBaseline:
            return
        history.append((now, thresholds))

    for cyc in cycles:
        idx = cyc.samples
        t = ts.t[idx]
        q_star, h_star = _normalized(ts, col, idx, settings.f_nominal)
        r_p, r_s = baseline_residuals(q_star, h_star, base.pump, base.system, base.offsets)
        truth = _majority([truth_for_pump(str(x), settings.pump) for x in ts.label[idx]]) if labeled else NORMAL
        res = CycleResult(cyc, truth, classify_by_ftest(t, r_p, r_s, settings.alpha_test))

        n_seg = len(idx) // settings.segment_len
        for k in range(n_seg):
            sl = slice(k * settings.segment_len, (k + 1) * settings.segment_len)
            t0, t1 = float(t[sl][0]), float(t[sl][-1]) + ts.dt
            while t0 >= next_refresh:
                refresh(next_refresh, learning_only=not learned)
                learned = True
                next_refresh += settings.refresh_s
            iw = decision_index(r_p[sl], r_s[sl])
            rng = stream(seed, f"bootstrap.{settings.pump}.{seg_counter}")
            seg_counter += 1
            ci = bootstrap_index_ci(r_p[sl], r_s[sl], None, settings.bootstrap_B, settings.alpha_ci, rng)
            in_learning = t1 <= settings.learning_s
            label = NORMAL if in_learning else classify_segment(ci, thresholds)
            sv = SegmentVerdict(t0, t1, iw, ci, label, in_learning)
            seg_log.append(sv)
            res.segments.append(sv)
        if res.segments:
            res.tangent_label = _majority([s.label for s in res.segments])
        results.append(res)
    return PumpAnalysis(settings, base, results, history, labeled)
