"""Per-second station records, daily aggregation, cycle segmentation and CSV I/O."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

PUMP_FIELDS = ("state", "freq_hz", "q_m3h", "head_m", "p_hyd_w", "p_elec_w")
SECONDS_PER_DAY = 86400.0


def csv_header(n_pumps: int) -> list[str]:
    cols = ["t_s", "level_m", "q_in_m3h"]
    for i in range(1, n_pumps + 1):
        cols.extend(f"p{i}_{name}" for name in PUMP_FIELDS)
    cols.append("label")
    return cols


@dataclass(eq=False)
class TimeSeries:
    """Column store of a simulation run; per-pump arrays have shape ``(T, n_pumps)``."""

    t: np.ndarray
    level: np.ndarray
    q_in: np.ndarray
    state: np.ndarray
    freq: np.ndarray
    q: np.ndarray
    head: np.ndarray
    p_hyd: np.ndarray
    p_elec: np.ndarray
    label: np.ndarray

    def __post_init__(self):
        n = len(self.t)
        for name in ("level", "q_in", "label"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"column {name} has length {len(getattr(self, name))}, expected {n}")
        shape = self.state.shape
        if len(shape) != 2 or shape[0] != n:
            raise ValueError("per-pump columns must have shape (T, n_pumps)")
        for name in ("freq", "q", "head", "p_hyd", "p_elec"):
            if getattr(self, name).shape != shape:
                raise ValueError(f"column {name} has shape {getattr(self, name).shape}, expected {shape}")

    @classmethod
    def empty(cls, n_pumps: int) -> "TimeSeries":
        z = np.zeros(0)
        zp = np.zeros((0, n_pumps))
        return cls(z, z.copy(), z.copy(), zp.astype(np.int64), zp.copy(), zp.copy(), zp.copy(),
                   zp.copy(), zp.copy(), np.array([], dtype=object))

    @property
    def n_pumps(self) -> int:
        return self.state.shape[1]

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else 1.0

    def __len__(self) -> int:
        return len(self.t)

    def outflow(self) -> np.ndarray:
        return self.q.sum(axis=1)

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, name), getattr(other, name))
            for name in ("t", "level", "q_in", "state", "freq", "q", "head", "p_hyd", "p_elec", "label")
        )

    __hash__ = None


@dataclass(frozen=True)
class DailySummary:
    """Arrays indexed ``[day, pump]``; pumps are 0-based here."""

    starts: np.ndarray
    runtime_h: np.ndarray
    energy_kwh: np.ndarray

    @property
    def n_days(self) -> int:
        return self.starts.shape[0]


def _start_mask(state: np.ndarray) -> np.ndarray:
    prev = np.vstack([np.zeros((1, state.shape[1]), dtype=state.dtype), state[:-1]])
    return (state == 1) & (prev == 0)


def _day_index(t: np.ndarray) -> tuple[np.ndarray, int]:
    day = np.floor(np.asarray(t) / SECONDS_PER_DAY).astype(np.int64)
    day -= day[0]
    return day, int(day[-1]) + 1


def daily_activity(t, state, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-day start counts and runtime hours, each shaped ``(days, pumps)``."""
    state = np.asarray(state)
    if len(state) == 0:
        raise ValueError("cannot aggregate an empty series")
    day, n_days = _day_index(t)
    starts = np.zeros((n_days, state.shape[1]), dtype=np.int64)
    runtime = np.zeros((n_days, state.shape[1]))
    np.add.at(starts, day, _start_mask(state).astype(np.int64))
    np.add.at(runtime, day, (state == 1) * dt)
    return starts, runtime / 3600.0


def aggregate_daily(ts: TimeSeries) -> DailySummary:
    """Starts, runtime and electrical energy per civil day (``floor(t / 86400)``)."""
    if len(ts) == 0:
        raise ValueError("cannot aggregate an empty series")
    starts, runtime_h = daily_activity(ts.t, ts.state, ts.dt)
    day, n_days = _day_index(ts.t)
    energy = np.zeros((n_days, ts.n_pumps))
    np.add.at(energy, day, ts.p_elec * ts.dt)
    return DailySummary(starts, runtime_h, energy / 3.6e6)


def hourly_energy(ts: TimeSeries) -> np.ndarray:
    """Electrical energy in kWh per hour of simulation, shape ``(hours, n_pumps)``."""
    hour = np.floor((ts.t - ts.t[0]) / 3600.0).astype(np.int64)
    out = np.zeros((int(hour[-1]) + 1, ts.n_pumps))
    np.add.at(out, hour, ts.p_elec * ts.dt)
    return out / 3.6e6


def cumulative_energy(ts: TimeSeries) -> np.ndarray:
    """Running electrical energy in kWh per pump, shape ``(T, n_pumps)``."""
    return np.cumsum(ts.p_elec * ts.dt, axis=0) / 3.6e6


@dataclass(frozen=True)
class Cycle:
    """One contiguous on-period of a pump and its near-nominal sample indices."""

    pump_id: int
    start_t: float
    end_t: float
    samples: np.ndarray

    def __post_init__(self):
        if not self.end_t > self.start_t:
            raise ValueError("cycle must have end_t > start_t")


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Half-open index ranges where ``mask`` is true."""
    padded = np.concatenate([[False], mask, [False]]).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return list(zip(edges[::2].tolist(), edges[1::2].tolist()))


def segment_cycles(
    ts: TimeSeries,
    pump_id: int,
    f_band: float = 1.0,
    f_nominal: float = 50.0,
    min_samples: int = 25,
) -> list[Cycle]:
    """Split a pump's on-periods into cycles keeping samples with ``|f - f_nominal| <= f_band``."""
    if not f_band > 0:
        raise ValueError("f_band must be positive")
    if not 1 <= pump_id <= ts.n_pumps:
        raise ValueError(f"pump id {pump_id} outside 1..{ts.n_pumps}")
    col = pump_id - 1
    near = np.abs(ts.freq[:, col] - f_nominal) <= f_band
    cycles = []
    for lo, hi in _runs(ts.state[:, col] == 1):
        idx = lo + np.flatnonzero(near[lo:hi])
        if len(idx) < min_samples:
            continue
        cycles.append(Cycle(pump_id, float(ts.t[lo]), float(ts.t[hi - 1]) + ts.dt, idx))
    return cycles


class TelemetryFormatError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class MalformedHeader(TelemetryFormatError):
    pass


class RaggedRow(TelemetryFormatError):
    pass


class NonFiniteValue(TelemetryFormatError):
    pass


def serialize_timeseries(ts: TimeSeries, path) -> None:
    """Write ``ts`` as CSV; floats use the shortest round-trip decimal form."""
    n = ts.n_pumps
    columns: list[Sequence] = [ts.t.tolist(), ts.level.tolist(), ts.q_in.tolist()]
    for i in range(n):
        columns.extend([
            ts.state[:, i].astype(np.int64).tolist(),
            ts.freq[:, i].tolist(),
            ts.q[:, i].tolist(),
            ts.head[:, i].tolist(),
            ts.p_hyd[:, i].tolist(),
            ts.p_elec[:, i].tolist(),
        ])
    labels = list(ts.label)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(csv_header(n))
        for r, row in enumerate(zip(*columns)):
            w.writerow([repr(v) for v in row] + [labels[r]])


def _parse_float(cell: str, line: int, col: str) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise NonFiniteValue(f"column {col}: {cell!r} is not a number", line) from None
    if not math.isfinite(v):
        raise NonFiniteValue(f"column {col}: non-finite value {cell!r}", line)
    return v


def parse_timeseries(path) -> TimeSeries:
    """Read a CSV written by :func:`serialize_timeseries`, validating every cell."""
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedHeader("file is empty", 1) from None
        fixed = len(PUMP_FIELDS)
        n_pumps = (len(header) - 4) // fixed
        if n_pumps < 1 or len(header) != 4 + fixed * n_pumps or header != csv_header(n_pumps):
            raise MalformedHeader(f"unexpected header {','.join(header)!r}", 1)
        width = len(header)
        rows = []
        for line, row in enumerate(reader, start=2):
            if len(row) != width:
                raise RaggedRow(f"expected {width} cells, found {len(row)}", line)
            vals = []
            for j in range(width - 1):
                if j >= 3 and (j - 3) % fixed == 0:
                    try:
                        s = int(row[j])
                    except ValueError:
                        raise NonFiniteValue(f"column {header[j]}: bad state {row[j]!r}", line) from None
                    if s not in (0, 1):
                        raise NonFiniteValue(f"column {header[j]}: state must be 0 or 1", line)
                    vals.append(s)
                else:
                    vals.append(_parse_float(row[j], line, header[j]))
            vals.append(row[-1])
            rows.append(vals)
    if not rows:
        return TimeSeries.empty(n_pumps)
    cols = list(zip(*rows))

    def pump_block(k: int, dtype=float) -> np.ndarray:
        return np.array([cols[3 + i * fixed + k] for i in range(n_pumps)], dtype=dtype).T

    return TimeSeries(
        t=np.array(cols[0], dtype=float),
        level=np.array(cols[1], dtype=float),
        q_in=np.array(cols[2], dtype=float),
        state=pump_block(0, np.int64),
        freq=pump_block(1),
        q=pump_block(2),
        head=pump_block(3),
        p_hyd=pump_block(4),
        p_elec=pump_block(5),
        label=np.array(cols[-1], dtype=object),
    )
