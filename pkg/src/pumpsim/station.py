"""Discrete-time wet-well simulation with lead/lag sequencing and soft-start drives."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from ._rng import stream
from .faults import FaultProfile, effective_parameters, label_at
from .hydraulics import NoIntersection, OperatingPoint, PumpCurve, SystemCurve, pump_head, solve_operating_point
from .power import ElectricalSpec, electrical_input_power, hydraulic_power
from .telemetry import TimeSeries


class NoIdlePump(RuntimeError):
    pass


@dataclass(frozen=True)
class NoiseSpec:
    """Relative standard deviation per sensed channel; frequency is reported exactly."""

    level: float = 0.01
    flow: float = 0.01
    head: float = 0.01
    power: float = 0.01

    def __post_init__(self):
        for name in ("level", "flow", "head", "power"):
            if getattr(self, name) < 0:
                raise ValueError(f"noise.{name} must be >= 0")

    @classmethod
    def noiseless(cls) -> "NoiseSpec":
        return cls(0.0, 0.0, 0.0, 0.0)

    @property
    def is_zero(self) -> bool:
        return self.level == self.flow == self.head == self.power == 0.0


@dataclass(frozen=True)
class StationConfig:
    area: float = 8.0
    n_pumps: int = 3
    start_levels: tuple[float, ...] = (1.6, 1.8)
    stop_levels: tuple[float, ...] = (0.5, 0.8)
    pump_curve: PumpCurve = PumpCurve(32.0, -0.005, -1.25e-4)
    system_curve: SystemCurve = SystemCurve(2.0, 3e-4)
    f_min: float = 0.0
    f_max: float = 50.0
    t_ramp: float = 10.0
    t_dwell: float = 0.0
    noise: NoiseSpec = NoiseSpec()
    electrical: ElectricalSpec = ElectricalSpec()
    dt: float = 1.0
    initial_level: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "start_levels", tuple(float(s) for s in self.start_levels))
        object.__setattr__(self, "stop_levels", tuple(float(e) for e in self.stop_levels))
        s, e = self.start_levels, self.stop_levels
        if not self.area > 0:
            raise ValueError("area must be positive")
        if self.n_pumps < 1:
            raise ValueError("n_pumps must be >= 1")
        if not s or len(s) != len(e):
            raise ValueError("start_levels and stop_levels must be non-empty and of equal length")
        if len(s) > self.n_pumps:
            raise ValueError("more start levels than pumps")
        if any(b <= a for a, b in zip(s, s[1:])):
            raise ValueError("start_levels must be strictly increasing")
        if any(ei >= si for si, ei in zip(s, e)):
            raise ValueError("each stop level must lie below its start level")
        if not self.f_min < self.f_max:
            raise ValueError("f_min must be below f_max")
        if self.f_min < 0:
            raise ValueError("f_min must be >= 0")
        if self.t_ramp < 0 or self.t_dwell < 0:
            raise ValueError("t_ramp and t_dwell must be >= 0")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.initial_level is not None and self.initial_level < 0:
            raise ValueError("initial_level must be >= 0")

    @property
    def n_max(self) -> int:
        """Most pumps the supervisor will run at once; the rest are standby."""
        return len(self.start_levels)

    @property
    def ramp_rate(self) -> float:
        return (self.f_max - self.f_min) / self.t_ramp if self.t_ramp > 0 else float("inf")

    @property
    def level0(self) -> float:
        if self.initial_level is not None:
            return self.initial_level
        return 0.5 * (self.start_levels[0] + self.stop_levels[0])


class PumpMode(enum.Enum):
    OFF = "off"
    RAMP_UP = "ramp_up"
    RUNNING = "running"
    RAMP_DOWN = "ramp_down"
    DWELL = "dwell"


@dataclass
class PumpState:
    id: int
    mode: PumpMode = PumpMode.OFF
    phase_elapsed: float = 0.0
    cumulative_runtime: float = 0.0
    start_count: int = 0
    start_seq: int = -1

    @property
    def duty(self) -> bool:
        """Counted as running by the supervisor (commanded on)."""
        return self.mode in (PumpMode.RAMP_UP, PumpMode.RUNNING)

    @property
    def energized(self) -> bool:
        return self.mode is not PumpMode.OFF

    def command_start(self, seq: int, t_ramp: float) -> None:
        if self.mode is not PumpMode.OFF:
            raise RuntimeError(f"pump {self.id} is not off")
        self.start_count += 1
        self.start_seq = seq
        self.mode = PumpMode.RAMP_UP if t_ramp > 0 else PumpMode.RUNNING
        self.phase_elapsed = 0.0

    def command_stop(self, t_ramp: float) -> None:
        if self.mode is PumpMode.RAMP_UP:
            # reverse from the current frequency so the trace stays continuous
            self.mode = PumpMode.RAMP_DOWN
            self.phase_elapsed = t_ramp - self.phase_elapsed
        elif self.mode is PumpMode.RUNNING:
            self.mode = PumpMode.RAMP_DOWN if t_ramp > 0 else PumpMode.OFF
            self.phase_elapsed = 0.0

    def advance(self, dt: float, t_ramp: float, t_dwell: float) -> None:
        if self.mode is PumpMode.OFF:
            return
        self.cumulative_runtime += dt
        self.phase_elapsed += dt
        if self.mode is PumpMode.RAMP_UP and self.phase_elapsed >= t_ramp:
            self.mode, self.phase_elapsed = PumpMode.RUNNING, 0.0
        elif self.mode is PumpMode.RAMP_DOWN and self.phase_elapsed >= t_ramp:
            self.mode = PumpMode.DWELL if t_dwell > 0 else PumpMode.OFF
            self.phase_elapsed = 0.0
        elif self.mode is PumpMode.DWELL and self.phase_elapsed >= t_dwell:
            self.mode, self.phase_elapsed = PumpMode.OFF, 0.0


@dataclass
class SumpState:
    level: float
    t: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.level) and self.level >= 0):
            raise ValueError("sump level must be finite and >= 0")


def supervisory_transition(level: float, n_running: int, config: StationConfig) -> int:
    """Target pump count: at most one start or one stop per call."""
    if n_running < config.n_max and level >= config.start_levels[n_running]:
        return n_running + 1
    if n_running > 0 and level <= config.stop_levels[n_running - 1]:
        return n_running - 1
    return n_running


def select_lead(rotation_cursor: int, idle_pumps, n_pumps: int) -> tuple[int, int]:
    """First idle pump at or after the cursor in cyclic order; returns ``(pump_id, new_cursor)``."""
    idle = set(idle_pumps)
    if not idle:
        raise NoIdlePump("no idle pump available")
    for k in range(n_pumps):
        pid = (rotation_cursor - 1 + k) % n_pumps + 1
        if pid in idle:
            return pid, pid % n_pumps + 1
    raise NoIdlePump(f"idle set {sorted(idle)} outside 1..{n_pumps}")


def ramp_frequency(state: PumpState, config: StationConfig) -> float:
    mode = state.mode
    if mode is PumpMode.OFF:
        return 0.0
    if mode is PumpMode.RUNNING:
        return config.f_max
    if mode is PumpMode.DWELL:
        return config.f_min
    span = config.f_max - config.f_min
    frac = min(state.phase_elapsed / config.t_ramp, 1.0) if config.t_ramp > 0 else 1.0
    if mode is PumpMode.RAMP_UP:
        return config.f_min + span * frac
    return config.f_max - span * frac


@lru_cache(maxsize=8192)
def _cached_point(pump: PumpCurve, system: SystemCurve, n: float) -> OperatingPoint | None:
    try:
        return solve_operating_point(pump, system, n)
    except NoIntersection:
        return None


@dataclass
class StationState:
    sump: SumpState
    pumps: list[PumpState]
    cursor: int = 1
    next_seq: int = 0

    @classmethod
    def initial(cls, config: StationConfig) -> "StationState":
        return cls(SumpState(config.level0), [PumpState(i + 1) for i in range(config.n_pumps)])

    @property
    def n_running(self) -> int:
        return sum(p.duty for p in self.pumps)


@dataclass(frozen=True)
class SensedRecord:
    level: float
    state: list[int]
    freq: list[float]
    q: list[float]
    head: list[float]
    p_hyd: list[float]
    p_elec: list[float]


@dataclass(frozen=True)
class StepNoise:
    """Pre-drawn relative errors for one step; ``None`` means noiseless."""

    level: float
    flow: Sequence[float]
    head: Sequence[float]
    p_hyd: Sequence[float]
    p_elec: Sequence[float]


def step(
    state: StationState,
    q_in: float,
    config: StationConfig,
    system: SystemCurve | None = None,
    speed_factor: Sequence[float] | None = None,
    noise: StepNoise | None = None,
) -> tuple[list[OperatingPoint], SensedRecord]:
    """Advance ``state`` by one ``dt`` in place.

    Order: supervisor on the sensed level, drive commands, hydraulics at the
    commanded frequency derated by ``speed_factor``, sensing, mass balance, timers.
    """
    if q_in < 0:
        raise ValueError("inflow must be >= 0")
    system = config.system_curve if system is None else system
    pump_curve = config.pump_curve
    pumps = state.pumps
    sensed_level = state.sump.level * (1.0 + noise.level) if noise is not None else state.sump.level

    n_run = state.n_running
    target = supervisory_transition(sensed_level, n_run, config)
    if target > n_run:
        idle = [p.id for p in pumps if p.mode is PumpMode.OFF]
        if idle:
            pid, state.cursor = select_lead(state.cursor, idle, config.n_pumps)
            pumps[pid - 1].command_start(state.next_seq, config.t_ramp)
            state.next_seq += 1
    elif target < n_run:
        lag = max((p for p in pumps if p.duty), key=lambda p: p.start_seq)
        lag.command_stop(config.t_ramp)

    ops: list[OperatingPoint] = []
    rec_state, rec_f, rec_q, rec_h, rec_ph, rec_pe = [], [], [], [], [], []
    q_out = 0.0
    f_nom = pump_curve.f_nominal
    for i, p in enumerate(pumps):
        f = ramp_frequency(p, config)
        if p.energized:
            n_cmd = f / f_nom
            n_eff = n_cmd * (1.0 if speed_factor is None else speed_factor[i])
            op = _cached_point(pump_curve, system, n_eff) if n_eff > 0 else None
            if op is None:
                op = OperatingPoint(0.0, pump_head(pump_curve, 0.0, n_eff))
            p_hyd = hydraulic_power(op.q, op.h, config.electrical, f)[0]
            p_elec = electrical_input_power(n_cmd, config.electrical)
        else:
            op = OperatingPoint(0.0, 0.0)
            p_hyd = p_elec = 0.0
        ops.append(op)
        q_out += op.q
        q_s, h_s = op.q, op.h
        if noise is not None:
            q_s = max(q_s * (1.0 + noise.flow[i]), 0.0)
            h_s = max(h_s * (1.0 + noise.head[i]), 0.0)
            p_hyd = max(p_hyd * (1.0 + noise.p_hyd[i]), 0.0)
            p_elec = max(p_elec * (1.0 + noise.p_elec[i]), 0.0)
        rec_state.append(1 if p.energized else 0)
        rec_f.append(f)
        rec_q.append(q_s)
        rec_h.append(h_s)
        rec_ph.append(p_hyd)
        rec_pe.append(p_elec)

    dt = config.dt
    level = state.sump.level + dt * (q_in - q_out) / 3600.0 / config.area
    state.sump = SumpState(max(level, 0.0), state.sump.t + dt)
    for p in pumps:
        p.advance(dt, config.t_ramp, config.t_dwell)
    return ops, SensedRecord(sensed_level, rec_state, rec_f, rec_q, rec_h, rec_ph, rec_pe)


def _draw_noise(noise: NoiseSpec, n_steps: int, n_pumps: int, seed: int) -> dict[str, np.ndarray] | None:
    if noise.is_zero:
        return None
    rng = stream(seed, "station.noise")
    shape = (n_steps, n_pumps)
    return {
        "level": rng.normal(0.0, noise.level, n_steps) if noise.level > 0 else np.zeros(n_steps),
        "flow": rng.normal(0.0, noise.flow, shape) if noise.flow > 0 else np.zeros(shape),
        "head": rng.normal(0.0, noise.head, shape) if noise.head > 0 else np.zeros(shape),
        "p_hyd": rng.normal(0.0, noise.power, shape) if noise.power > 0 else np.zeros(shape),
        "p_elec": rng.normal(0.0, noise.power, shape) if noise.power > 0 else np.zeros(shape),
    }


@dataclass
class SimulationResult:
    """Recorded series plus the true (unsensed) trajectories used by oracles."""

    timeseries: TimeSeries
    true_level: np.ndarray
    true_q: np.ndarray
    true_head: np.ndarray
    final_state: StationState = field(repr=False)


def simulate_scenario(
    config: StationConfig,
    inflow: np.ndarray,
    faults: Sequence[FaultProfile] = (),
    seed: int = 0,
) -> SimulationResult:
    """Run the station over ``len(inflow)`` steps; deterministic for a fixed ``seed``.

    ``true_level`` has one more entry than the series: the level after the last step.
    """
    inflow = np.asarray(inflow, dtype=float)
    if inflow.ndim != 1:
        raise ValueError("inflow must be one-dimensional")
    if np.any(inflow < 0) or not np.all(np.isfinite(inflow)):
        raise ValueError("inflow must be finite and >= 0")
    for f in faults:
        if getattr(f, "pump_id", 1) > config.n_pumps:
            raise ValueError(f"fault targets pump {f.pump_id} but the station has {config.n_pumps}")
    T, n = len(inflow), config.n_pumps
    dt = config.dt
    draws = _draw_noise(config.noise, T, n, seed)
    state = StationState.initial(config)

    t = np.arange(T) * dt
    level = np.empty(T)
    true_level = np.empty(T + 1)
    st = np.zeros((T, n), dtype=np.int64)
    freq, q, head, p_hyd, p_elec = (np.zeros((T, n)) for _ in range(5))
    true_q, true_h = np.zeros((T, n)), np.zeros((T, n))
    labels = np.empty(T, dtype=object)

    true_level[0] = state.sump.level
    system, speed_factor = config.system_curve, None
    for k in range(T):
        tk = t[k]
        if faults:
            system, speed_factor = effective_parameters(tk, config.system_curve, faults, n)
            labels[k] = label_at(tk, faults)
        else:
            labels[k] = "normal"
        nz = None
        if draws is not None:
            nz = StepNoise(draws["level"][k], draws["flow"][k], draws["head"][k],
                           draws["p_hyd"][k], draws["p_elec"][k])
        ops, rec = step(state, float(inflow[k]), config, system, speed_factor, nz)
        level[k] = rec.level
        st[k], freq[k], q[k], head[k] = rec.state, rec.freq, rec.q, rec.head
        p_hyd[k], p_elec[k] = rec.p_hyd, rec.p_elec
        for i, op in enumerate(ops):
            true_q[k, i], true_h[k, i] = op.q, op.h
        true_level[k + 1] = state.sump.level

    ts = TimeSeries(t, level, inflow.copy(), st, freq, q, head, p_hyd, p_elec, labels)
    return SimulationResult(ts, true_level, true_q, true_h, state)
