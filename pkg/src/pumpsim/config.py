"""Scenario files: flat ``section.key = value`` lines, e.g.::

    scenario.seed = 0
    station.area_m2 = 8.0
    fault.1.kind = blockage

The same keys may also be grouped under ``[section]`` headers. Every key is
addressed by its dotted path in error messages. Faults are numbered
``fault.1``, ``fault.2``, ... Unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
import io
import re
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .diagnostics.pipeline import AnalysisSettings
from .faults import Blockage, Clogging, FaultProfile
from .hydraulics import PumpCurve, SystemCurve
from .inflow import EcdfBase, InflowSpec, PeakProcess, SinusoidBase, build_ecdf, reference_inflow_samples
from .power import ElectricalSpec
from .station import NoiseSpec, StationConfig


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _read_samples(path: Path) -> np.ndarray:
    """First column of a CSV of flows in m³/h; a non-numeric first line is a header."""
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if lines:
        try:
            float(lines[0].split(",")[0])
        except ValueError:
            lines = lines[1:]
    return np.loadtxt(lines, delimiter=",", usecols=0, ndmin=1)


@dataclass(frozen=True)
class InflowConfig:
    kind: str = "ecdf"  # "ecdf" or "sinusoid"
    samples: str = "builtin"  # "builtin" or a CSV/text file of flows in m³/h
    mean: float = 60.0
    amplitude: float = 20.0
    period: float = 86400.0
    noise_sigma: float = 0.0
    peak_rate: float = 0.0
    peak_magnitude: float = 0.0
    peak_duration: float = 900.0

    def to_spec(self, horizon: float, seed: int, base_dir: Path | None = None) -> InflowSpec:
        if self.kind == "ecdf":
            if self.samples == "builtin":
                data = reference_inflow_samples()
            else:
                p = Path(self.samples)
                if not p.is_absolute() and base_dir is not None:
                    p = base_dir / p
                data = _read_samples(p)
            base = EcdfBase(build_ecdf(data))
        else:
            base = SinusoidBase(self.mean, self.amplitude, self.period, self.noise_sigma)
        peaks = None
        if self.peak_rate > 0:
            peaks = PeakProcess(self.peak_rate, self.peak_magnitude, self.peak_duration)
        return InflowSpec(base, horizon, peaks, seed)


@dataclass(frozen=True)
class DegradationConfig:
    m: int = 50
    fault: str = "pump"  # "pump", "clogging" or "none"
    dk_rel: float = 2.0
    dh_static: float = 0.5
    smoothing_window: int = 15


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str = "station"  # "station" or "degradation"
    seed: int = 0
    horizon: float = 172800.0
    noiseless: bool = False
    station: StationConfig = StationConfig()
    inflow: InflowConfig = InflowConfig()
    faults: tuple[FaultProfile, ...] = ()
    analysis: AnalysisSettings = AnalysisSettings()
    degradation: DegradationConfig = DegradationConfig()
    base_dir: Path | None = field(default=None, compare=False)

    def effective_station(self) -> StationConfig:
        if self.noiseless:
            return replace(self.station, noise=NoiseSpec.noiseless())
        return self.station

    def inflow_spec(self) -> InflowSpec:
        return self.inflow.to_spec(self.horizon, self.seed, self.base_dir)


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(x) for x in s.split(",") if x.strip())


def _opt_float(s: str) -> float | None:
    return None if s.strip().lower() in ("", "none") else float(s)


# section -> key -> (target attribute, converter)
_Schema = dict[str, tuple[str, Callable[[str], Any]]]

_SCENARIO: _Schema = {
    "kind": ("kind", str.strip),
    "seed": ("seed", int),
    "horizon_s": ("horizon", float),
    "noiseless": ("noiseless", _bool),
}
_STATION: _Schema = {
    "area_m2": ("area", float),
    "n_pumps": ("n_pumps", int),
    "start_levels_m": ("start_levels", _floats),
    "stop_levels_m": ("stop_levels", _floats),
    "f_min_hz": ("f_min", float),
    "f_max_hz": ("f_max", float),
    "t_ramp_s": ("t_ramp", float),
    "t_dwell_s": ("t_dwell", float),
    "dt_s": ("dt", float),
    "initial_level_m": ("initial_level", _opt_float),
}
_PUMP: _Schema = {"c0": ("c0", float), "c1": ("c1", float), "c2": ("c2", float), "f_nominal_hz": ("f_nominal", float)}
_SYSTEM: _Schema = {"h_static_m": ("h_static", float), "k": ("k", float)}
_NOISE: _Schema = {"level": ("level", float), "flow": ("flow", float), "head": ("head", float), "power": ("power", float)}
_ELECTRICAL: _Schema = {
    "voltage_v": ("voltage", float),
    "i_nominal_a": ("i_nominal", float),
    "cos_phi": ("cos_phi", float),
    "inrush_cap": ("inrush_cap", float),
    "rho_kg_m3": ("rho", float),
    "g_m_s2": ("g", float),
    "efficiency": ("efficiency", float),
}
_INFLOW: _Schema = {
    "kind": ("kind", str.strip),
    "samples": ("samples", str.strip),
    "mean_m3h": ("mean", float),
    "amplitude_m3h": ("amplitude", float),
    "period_s": ("period", float),
    "noise_sigma_m3h": ("noise_sigma", float),
    "peak_rate_per_s": ("peak_rate", float),
    "peak_magnitude_m3h": ("peak_magnitude", float),
    "peak_duration_s": ("peak_duration", float),
}
_ANALYSIS: _Schema = {
    "pump": ("pump", int),
    "learning_s": ("learning_s", float),
    "refresh_s": ("refresh_s", float),
    "segment_len": ("segment_len", int),
    "f_band_hz": ("f_band", float),
    "f_nominal_hz": ("f_nominal", float),
    "f_floor_hz": ("f_floor", float),
    "alpha_test": ("alpha_test", float),
    "alpha_ci": ("alpha_ci", float),
    "bootstrap_b": ("bootstrap_B", int),
    "min_segments": ("min_segments", int),
}
_DEGRADATION: _Schema = {
    "m": ("m", int),
    "fault": ("fault", str.strip),
    "dk_rel": ("dk_rel", float),
    "dh_static_m": ("dh_static", float),
    "smoothing_window": ("smoothing_window", int),
}
_FAULT: _Schema = {
    "kind": ("kind", str.strip),
    "pump": ("pump_id", int),
    "severity": ("severity", float),
    "dk_rel": ("dk_rel", float),
    "dh_static_m": ("dh_static", float),
    "t_start_s": ("t_start", float),
    "t_end_s": ("t_end", float),
    "t_clear_s": ("t_clear", _opt_float),
}
_FAULT_KEYS = {
    "blockage": ("pump", "severity", "t_start_s", "t_end_s", "t_clear_s"),
    "clogging": ("dk_rel", "dh_static_m", "t_start_s", "t_end_s", "t_clear_s"),
}


def _read_section(cp: configparser.ConfigParser, section: str, schema: _Schema) -> dict[str, Any]:
    out: dict[str, Any] = {}
    if not cp.has_section(section):
        return out
    for key, raw in cp.items(section):
        path = f"{section}.{key}"
        if key not in schema:
            raise ConfigError(path, "unknown key")
        attr, conv = schema[key]
        try:
            out[attr] = conv(raw)
        except ValueError as exc:
            raise ConfigError(path, f"cannot parse {raw!r} ({exc})") from None
    return out


def _error_path(section: str, schema: _Schema, msg: str) -> str:
    words = set(re.findall(r"[A-Za-z_][A-Za-z0-9_]*", msg))
    for key, (attr, _) in schema.items():
        if attr in words or key in words:
            return f"{section}.{key}"
    if "stop level" in msg or "start level" in msg:
        return f"{section}.start_levels_m/stop_levels_m"
    return section


def _build(section: str, factory, kwargs: dict[str, Any], schema: _Schema | None = None):
    try:
        return factory(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(_error_path(section, schema or {}, str(exc)), str(exc)) from None


def parse_config(text: str, base_dir: Path | None = None) -> ScenarioConfig:
    cp = _read_text(text)

    known = {"scenario", "station", "pump", "system", "noise", "electrical", "inflow", "analysis", "degradation"}
    for sec in cp.sections():
        if sec not in known and not sec.startswith("fault."):
            raise ConfigError(sec, "unknown section")

    top = _read_section(cp, "scenario", _SCENARIO)
    if top.get("kind", "station") not in ("station", "degradation"):
        raise ConfigError("scenario.kind", "must be 'station' or 'degradation'")
    if top.get("seed", 0) < 0:
        raise ConfigError("scenario.seed", "must be >= 0")
    if top.get("horizon", 1.0) < 1:
        raise ConfigError("scenario.horizon_s", "must be >= 1")

    pump = _build("pump", PumpCurve, {**_asdict(StationConfig().pump_curve), **_read_section(cp, "pump", _PUMP)}, _PUMP)
    system = _build("system", SystemCurve, {**_asdict(StationConfig().system_curve), **_read_section(cp, "system", _SYSTEM)}, _SYSTEM)
    noise = _build("noise", NoiseSpec, _read_section(cp, "noise", _NOISE), _NOISE)
    electrical = _build("electrical", ElectricalSpec, _read_section(cp, "electrical", _ELECTRICAL), _ELECTRICAL)
    st_kwargs = _read_section(cp, "station", _STATION)
    try:
        station = StationConfig(pump_curve=pump, system_curve=system, noise=noise, electrical=electrical, **st_kwargs)
    except ValueError as exc:
        raise ConfigError(_error_path("station", _STATION, str(exc)), str(exc)) from None

    inflow = _build("inflow", InflowConfig, _read_section(cp, "inflow", _INFLOW))
    if inflow.kind not in ("ecdf", "sinusoid"):
        raise ConfigError("inflow.kind", "must be 'ecdf' or 'sinusoid'")
    if inflow.kind == "sinusoid":
        _build("inflow", SinusoidBase, {"mean": inflow.mean, "amplitude": inflow.amplitude,
                                        "period": inflow.period, "noise_sigma": inflow.noise_sigma})
    if inflow.peak_rate > 0:
        _build("inflow", PeakProcess, {"rate": inflow.peak_rate, "magnitude": inflow.peak_magnitude,
                                       "duration": inflow.peak_duration})
    elif inflow.peak_rate < 0:
        raise ConfigError("inflow.peak_rate_per_s", "must be >= 0")

    faults = []
    fault_secs = sorted((s for s in cp.sections() if s.startswith("fault.")), key=_fault_order)
    for sec in fault_secs:
        kw = _read_section(cp, sec, _FAULT)
        kind = kw.pop("kind", None)
        if kind not in _FAULT_KEYS:
            raise ConfigError(f"{sec}.kind", "must be 'blockage' or 'clogging'")
        allowed = {_FAULT[k][0] for k in _FAULT_KEYS[kind]}
        extra = set(kw) - allowed
        if extra:
            raise ConfigError(f"{sec}.{sorted(extra)[0]}", f"not valid for a {kind} fault")
        faults.append(_build(sec, Blockage if kind == "blockage" else Clogging, kw, _FAULT))
        if kind == "blockage" and faults[-1].pump_id > station.n_pumps:
            raise ConfigError(f"{sec}.pump", f"station has only {station.n_pumps} pumps")

    analysis = _build("analysis", AnalysisSettings, _read_section(cp, "analysis", _ANALYSIS), _ANALYSIS)
    degradation = _build("degradation", DegradationConfig, _read_section(cp, "degradation", _DEGRADATION), _DEGRADATION)
    if degradation.fault not in ("pump", "clogging", "none"):
        raise ConfigError("degradation.fault", "must be 'pump', 'clogging' or 'none'")

    return ScenarioConfig(
        station=station, inflow=inflow, faults=tuple(faults), analysis=analysis,
        degradation=degradation, base_dir=base_dir, **top,
    )


def _new_parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str.lower  # type: ignore[assignment]
    return cp


def _read_text(text: str) -> configparser.ConfigParser:
    cp = _new_parser()
    sectioned = any(line.lstrip().startswith("[") for line in text.splitlines())
    try:
        cp.read_string(text if sectioned else "[__flat__]\n" + text)
    except configparser.Error as exc:
        raise ConfigError("<file>", str(exc).splitlines()[0]) from None
    if sectioned:
        return cp
    grouped = _new_parser()
    for dotted, raw in cp.items("__flat__"):
        if "." not in dotted:
            raise ConfigError(dotted, "keys must be written as section.key")
        sec, key = dotted.rsplit(".", 1)
        if not grouped.has_section(sec):
            grouped.add_section(sec)
        if grouped.has_option(sec, key):
            raise ConfigError(dotted, "duplicate key")
        grouped.set(sec, key, raw)
    return grouped


def _fault_order(section: str) -> tuple[int, str]:
    tail = section.split(".", 1)[1]
    return (int(tail), "") if tail.isdigit() else (1 << 30, tail)


def _asdict(obj) -> dict[str, Any]:
    return {f.name: getattr(obj, f.name) for f in fields(obj)}


def load_config(path) -> ScenarioConfig:
    p = Path(path)
    return parse_config(p.read_text(), base_dir=p.parent)


def bundled_scenario(name: str) -> ScenarioConfig:
    """Load one of the scenario files shipped with the package, e.g. ``"twoday"``."""
    fname = name if name.endswith(".cfg") else f"{name}.cfg"
    text = resources.files("pumpsim.scenarios").joinpath(fname).read_text()
    return parse_config(text)


def bundled_scenario_names() -> list[str]:
    return sorted(p.name[:-4] for p in resources.files("pumpsim.scenarios").iterdir() if p.name.endswith(".cfg"))


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    if v is None:
        return "none"
    return str(v)


def _emit(buf: io.StringIO, section: str, schema: _Schema, obj) -> None:
    for key, (attr, _) in schema.items():
        if hasattr(obj, attr):
            buf.write(f"{section}.{key} = {_fmt(getattr(obj, attr))}\n")
    buf.write("\n")


def dump_config(cfg: ScenarioConfig) -> str:
    """Render the effective configuration; :func:`parse_config` reads it back unchanged."""
    buf = io.StringIO()
    _emit(buf, "scenario", _SCENARIO, cfg)
    st = cfg.station
    _emit(buf, "station", _STATION, st)
    _emit(buf, "pump", _PUMP, st.pump_curve)
    _emit(buf, "system", _SYSTEM, st.system_curve)
    _emit(buf, "noise", _NOISE, st.noise)
    _emit(buf, "electrical", _ELECTRICAL, st.electrical)
    _emit(buf, "inflow", _INFLOW, cfg.inflow)
    for i, f in enumerate(cfg.faults, start=1):
        kind = "blockage" if isinstance(f, Blockage) else "clogging"
        buf.write(f"fault.{i}.kind = {kind}\n")
        for key in _FAULT_KEYS[kind]:
            buf.write(f"fault.{i}.{key} = {_fmt(getattr(f, _FAULT[key][0]))}\n")
        buf.write("\n")
    _emit(buf, "analysis", _ANALYSIS, cfg.analysis)
    _emit(buf, "degradation", _DEGRADATION, cfg.degradation)
    return buf.getvalue()
