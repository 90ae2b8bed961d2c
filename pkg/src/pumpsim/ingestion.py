"""SCADA-style level and pump-state records: cleaning, inflow inference and
comparison of a simulated series against a reference one."""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .hydraulics import NoIntersection, PumpCurve, SystemCurve, solve_operating_point
from .telemetry import TelemetryFormatError, TimeSeries, daily_activity

GAP_THRESHOLD_S = 10.0
MIN_DT_S = 0.1
MAX_FLOW_M3H = 0.4 * 3600.0


class TooFewRows(ValueError):
    pass


class ConstantReference(ValueError):
    pass


class DisjointRanges(ValueError):
    pass


@dataclass(frozen=True)
class Gap:
    t_before: float
    t_after: float

    @property
    def length(self) -> float:
        return self.t_after - self.t_before


@dataclass(frozen=True)
class ScadaFrame:
    """Time-stamped rows: level (m), pump on/off states and, optionally, drive
    frequency (Hz) and electrical power (W) per pump.

    ``corrections`` lists the level offsets already applied, ``gaps`` the
    audit produced by :func:`preprocess_levels`.
    """

    t: np.ndarray
    level: np.ndarray
    state: np.ndarray
    freq: np.ndarray | None = None
    power: np.ndarray | None = None
    corrections: tuple[tuple[float, float, float], ...] = ()
    gaps: tuple[Gap, ...] = ()

    def __post_init__(self):
        n = len(self.t)
        if self.t.ndim != 1 or self.level.shape != (n,):
            raise ValueError("t and level must be 1-D arrays of equal length")
        if self.state.ndim != 2 or self.state.shape[0] != n:
            raise ValueError("state must be shaped (rows, pumps)")
        for name in ("freq", "power"):
            arr = getattr(self, name)
            if arr is not None and arr.shape != self.state.shape:
                raise ValueError(f"{name} must match the state shape")
        if not np.all(np.isin(self.state, (0, 1))):
            raise ValueError("pump states must be 0 or 1")

    def __len__(self) -> int:
        return len(self.t)

    @property
    def n_pumps(self) -> int:
        return self.state.shape[1]

    def take(self, idx) -> "ScadaFrame":
        sub = lambda a: None if a is None else a[idx]
        return ScadaFrame(self.t[idx], self.level[idx], self.state[idx], sub(self.freq),
                          sub(self.power), self.corrections, self.gaps)

    def __eq__(self, other):
        if not isinstance(other, ScadaFrame):
            return NotImplemented

        def same(a, b):
            return (a is None and b is None) or (a is not None and b is not None and np.array_equal(a, b))

        return (all(same(getattr(self, k), getattr(other, k)) for k in ("t", "level", "state", "freq", "power"))
                and self.corrections == other.corrections and self.gaps == other.gaps)

    __hash__ = None  # type: ignore[assignment]


def frame_from_timeseries(ts: TimeSeries) -> ScadaFrame:
    return ScadaFrame(ts.t.copy(), ts.level.copy(), ts.state.copy(), ts.freq.copy(), ts.p_elec.copy())


_STATE_COL = re.compile(r"^p(\d+)_state$")


def read_scada_csv(path) -> ScadaFrame:
    """Read ``t_s``, ``level_m`` and ``p<i>_state`` columns; ``p<i>_freq_hz`` and
    ``p<i>_p_elec_w`` are picked up when present. Other columns are ignored,
    so telemetry files produced by the simulator load directly."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TelemetryFormatError("empty file", 1) from None
        rows = list(reader)
    col = {name.strip(): i for i, name in enumerate(header)}
    for req in ("t_s", "level_m"):
        if req not in col:
            raise TelemetryFormatError(f"missing column {req!r}", 1)
    pumps = sorted(int(m.group(1)) for name in col if (m := _STATE_COL.match(name)))
    if not pumps or pumps != list(range(1, len(pumps) + 1)):
        raise TelemetryFormatError("pump state columns must be p1_state .. pN_state", 1)

    def numeric(name: str) -> np.ndarray:
        j = col[name]
        out = np.empty(len(rows))
        for i, row in enumerate(rows):
            try:
                out[i] = float(row[j])
            except (IndexError, ValueError):
                raise TelemetryFormatError(f"bad value in column {name!r}", i + 2) from None
            if not np.isfinite(out[i]):
                raise TelemetryFormatError(f"non-finite value in column {name!r}", i + 2)
        return out

    def per_pump(suffix: str) -> np.ndarray | None:
        names = [f"p{p}_{suffix}" for p in pumps]
        if not all(n in col for n in names):
            return None
        return np.column_stack([numeric(n) for n in names])

    state = per_pump("state")
    assert state is not None
    if not np.all(np.isin(state, (0.0, 1.0))):
        raise TelemetryFormatError("pump states must be 0 or 1", 1)
    return ScadaFrame(numeric("t_s"), numeric("level_m"), state.astype(np.int8),
                      per_pump("freq_hz"), per_pump("p_elec_w"))


def preprocess_levels(frame: ScadaFrame, correction_window: tuple[float, float], offset: float) -> ScadaFrame:
    """Sort and de-duplicate rows, add ``offset`` to levels with
    ``t_a <= t <= t_b`` and list gaps longer than 10 s.

    Rows sharing a timestamp keep the first occurrence. A correction already
    recorded on the frame is not applied twice, so the function is idempotent.
    Gaps are reported, never filled.
    """
    t_a, t_b = map(float, correction_window)
    if not t_a < t_b:
        raise ValueError("correction window needs t_a < t_b")
    order = np.argsort(frame.t, kind="stable")
    out = frame.take(order)
    if len(out):
        keep = np.ones(len(out), dtype=bool)
        keep[1:] = np.diff(out.t) != 0
        out = out.take(np.flatnonzero(keep))

    key = (t_a, t_b, float(offset))
    level = out.level
    corrections = out.corrections
    if key not in corrections:
        mask = (out.t >= t_a) & (out.t <= t_b)
        if mask.any():
            level = level.copy()
            level[mask] += offset
        corrections = corrections + (key,)
    jumps = np.flatnonzero(np.diff(out.t) > GAP_THRESHOLD_S)
    gaps = tuple(Gap(float(out.t[i]), float(out.t[i + 1])) for i in jumps)
    return ScadaFrame(out.t, level, out.state, out.freq, out.power, corrections, gaps)


@dataclass(frozen=True)
class InflowEstimate:
    t: np.ndarray
    q_in: np.ndarray  # m³/h
    dropped_dt: int = 0
    dropped_spike: int = 0
    dropped_negative: int = 0
    pump_flows: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))


def _pump_flows(frame: ScadaFrame, pump: PumpCurve, system: SystemCurve) -> np.ndarray:
    if frame.freq is None:
        speed = frame.state.astype(float)
    else:
        speed = frame.state * frame.freq / pump.f_nominal
    cache: dict[float, float] = {}
    flows = np.zeros(speed.shape)
    for idx in zip(*np.nonzero(speed > 0)):
        n = float(speed[idx])
        if n not in cache:
            try:
                cache[n] = solve_operating_point(pump, system, n).q
            except NoIntersection:
                cache[n] = 0.0
        flows[idx] = cache[n]
    return flows


def infer_inflow(
    frame: ScadaFrame,
    area: float,
    pump: PumpCurve,
    system: SystemCurve,
    scheme: str = "midpoint",
) -> InflowEstimate:
    """Reconstruct the inflow from level changes plus the pumped outflow.

    ``scheme="midpoint"`` differences row ``i`` against row ``i + 1`` and pairs
    it with the flows logged at row ``i``: that difference is centred on the
    interval over which those flows act. ``scheme="central"`` uses
    ``(L[i+1] - L[i-1]) / (t[i+1] - t[i-1])``. Both fall back to a one-sided
    difference at the ends.

    Rows are discarded when their time step is below 0.1 s, their absolute
    flow exceeds 0.4 m³/s, or the estimate is negative.
    """
    if scheme not in ("midpoint", "central"):
        raise ValueError(f"unknown scheme {scheme!r}")
    if len(frame) < 3:
        raise TooFewRows("inflow inference needs at least 3 rows")
    if area <= 0:
        raise ValueError("area must be positive")
    t, level = frame.t, frame.level
    n = len(t)
    if scheme == "midpoint":
        hi = np.minimum(np.arange(n) + 1, n - 1)
        lo = np.arange(n)
        lo[-1] = n - 2
    else:
        hi = np.minimum(np.arange(n) + 1, n - 1)
        lo = np.maximum(np.arange(n) - 1, 0)
    dt = t[hi] - t[lo]
    dl = level[hi] - level[lo]
    ok_dt = np.abs(dt) >= MIN_DT_S
    rate = np.zeros(n)
    rate[ok_dt] = dl[ok_dt] / dt[ok_dt]
    flows = _pump_flows(frame, pump, system)
    q_in = area * rate * 3600.0 + flows.sum(axis=1)

    spike = ok_dt & (np.abs(q_in) > MAX_FLOW_M3H)
    negative = ok_dt & ~spike & (q_in < 0)
    keep = ok_dt & ~spike & ~negative
    return InflowEstimate(
        t[keep], q_in[keep], int((~ok_dt).sum()), int(spike.sum()), int(negative.sum()), flows[keep]
    )


def nmae(sim, ref) -> float:
    """Mean absolute error divided by the range of the reference."""
    sim = np.asarray(sim, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if sim.shape != ref.shape:
        raise ValueError("series must have equal length")
    if len(ref) == 0:
        raise ValueError("empty series")
    span = float(ref.max() - ref.min())
    if span == 0:
        raise ConstantReference("reference series is constant")
    return float(np.mean(np.abs(sim - ref)) / span)


@dataclass(frozen=True)
class DailyDelta:
    day: int
    pump: int
    metric: str  # "starts" or "runtime_h"
    reference: float
    simulated: float

    @property
    def delta(self) -> float:
        return self.simulated - self.reference

    @property
    def flagged(self) -> bool:
        if self.metric == "starts":
            return abs(self.delta) >= START_FLAG
        return abs(self.delta) > RUNTIME_FLAG_H


START_FLAG = 3
RUNTIME_FLAG_H = 0.5


@dataclass(frozen=True)
class ValidationReport:
    level_nmae: float
    t_range: tuple[float, float]
    deltas: tuple[DailyDelta, ...]

    @property
    def flagged(self) -> list[DailyDelta]:
        return [d for d in self.deltas if d.flagged]

    def rows(self) -> list[list[str]]:
        out = [["level_nmae", "", "", "", "", repr(self.level_nmae), "0"]]
        for d in self.deltas:
            out.append([d.metric, str(d.day), str(d.pump), repr(d.reference), repr(d.simulated),
                        repr(d.delta), "1" if d.flagged else "0"])
        return out

    HEADER = ("metric", "day", "pump", "reference", "simulated", "delta", "flag")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.HEADER)
            w.writerows(self.rows())


def _step(t: np.ndarray) -> float:
    return float(np.median(np.diff(t))) if len(t) > 1 else 1.0


def validate_series(reference: ScadaFrame, simulated: ScadaFrame) -> ValidationReport:
    """Compare two records over their common time range.

    The simulated level is interpolated onto the reference timestamps. Daily
    start and runtime figures are computed on each series' own rows inside the
    overlap; start deltas of 3 or more and runtime deltas over 0.5 h are flagged.
    """
    if reference.n_pumps != simulated.n_pumps:
        raise ValueError("series have different pump counts")
    if len(reference) == 0 or len(simulated) == 0:
        raise DisjointRanges("one of the series is empty")
    lo = max(reference.t[0], simulated.t[0])
    hi = min(reference.t[-1], simulated.t[-1])
    if not lo < hi:
        raise DisjointRanges(f"time ranges do not overlap ([{reference.t[0]}, {reference.t[-1]}] "
                             f"vs [{simulated.t[0]}, {simulated.t[-1]}])")
    ref = reference.take(np.flatnonzero((reference.t >= lo) & (reference.t <= hi)))
    sim = simulated.take(np.flatnonzero((simulated.t >= lo) & (simulated.t <= hi)))
    sim_level = np.interp(ref.t, sim.t, sim.level)
    try:
        err = nmae(sim_level, ref.level)
    except ConstantReference:
        err = 0.0 if np.array_equal(sim_level, ref.level) else float("inf")

    ref_starts, ref_rt = daily_activity(ref.t, ref.state, _step(ref.t))
    sim_starts, sim_rt = daily_activity(sim.t, sim.state, _step(sim.t))
    days = min(len(ref_starts), len(sim_starts))
    deltas = []
    for d in range(days):
        for p in range(ref.n_pumps):
            deltas.append(DailyDelta(d, p + 1, "starts", float(ref_starts[d, p]), float(sim_starts[d, p])))
            deltas.append(DailyDelta(d, p + 1, "runtime_h", float(ref_rt[d, p]), float(sim_rt[d, p])))
    return ValidationReport(err, (float(lo), float(hi)), tuple(deltas))


def load_frame(path) -> ScadaFrame:
    return read_scada_csv(Path(path))
