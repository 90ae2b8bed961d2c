"""``pumpsim`` command line: simulate, diagnose, validate, gen-inflow, show-config."""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from .config import ConfigError, ScenarioConfig, bundled_scenario, bundled_scenario_names, dump_config, load_config
from .diagnostics.drift import analyze_drift
from .diagnostics.fixtures import NoiseLevels, gen_clogging_fixture, gen_degradation_fixture
from .diagnostics.metrics import CLASSES, ConfusionMatrix
from .diagnostics.pipeline import AnalysisSettings, NoLearningData, PumpAnalysis, analyze_pump
from .diagnostics.regression import RankDeficient
from .inflow import generate_inflow
from .ingestion import DisjointRanges, read_scada_csv, validate_series
from .station import simulate_scenario
from .telemetry import TelemetryFormatError, aggregate_daily, parse_timeseries, serialize_timeseries

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IO = 3

SEED_ENV = "PUMPSIM_SEED"

VERDICT_HEADER = ("segment_start_s", "segment_end_s", "method", "i_w", "ci_lo", "ci_hi", "f_stat", "p_value", "label")
METRICS_HEADER = ("method", "class", "precision", "recall", "f1", "support")


class UsageError(Exception):
    pass


def _num(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def resolve_seed(cli_seed: int | None, config_seed: int) -> int:
    """Command-line flag first, then the environment variable, then the config file."""
    if cli_seed is not None:
        seed = cli_seed
    elif os.environ.get(SEED_ENV, "").strip():
        raw = os.environ[SEED_ENV].strip()
        try:
            seed = int(raw)
        except ValueError:
            raise ConfigError(SEED_ENV, f"not an integer: {raw!r}") from None
    else:
        seed = config_seed
    if seed < 0:
        raise ConfigError("scenario.seed", "must be >= 0")
    return seed


def _load_scenario(args) -> ScenarioConfig:
    if getattr(args, "scenario", None):
        if args.scenario not in bundled_scenario_names():
            raise ConfigError("--scenario", f"unknown bundled scenario {args.scenario!r}")
        cfg = bundled_scenario(args.scenario)
    elif getattr(args, "config", None):
        cfg = load_config(args.config)
    else:
        raise UsageError("one of --config or --scenario is required")
    cfg = replace(cfg, seed=resolve_seed(args.seed, cfg.seed))
    if getattr(args, "noiseless", False):
        cfg = replace(cfg, noiseless=True)
    return cfg


def cmd_simulate(args) -> int:
    cfg = _load_scenario(args)
    out = Path(args.out)
    if cfg.kind == "degradation":
        return _simulate_degradation(cfg, out)
    station = cfg.effective_station()
    q_in = generate_inflow(cfg.inflow_spec(), station.dt)
    result = simulate_scenario(station, q_in, cfg.faults, cfg.seed)
    serialize_timeseries(result.timeseries, out)
    daily = aggregate_daily(result.timeseries)
    starts = daily.starts.sum(axis=0)
    runtime = daily.runtime_h.sum(axis=0)
    energy = daily.energy_kwh.sum(axis=0)
    print(f"wrote {out} ({len(result.timeseries)} rows, seed {cfg.seed})")
    print(f"station cycles: {int(starts.sum())}")
    print("pump  starts  runtime_h  energy_kwh")
    for p in range(station.n_pumps):
        print(f"{p + 1:>4}  {starts[p]:>6d}  {runtime[p]:>9.3f}  {energy[p]:>10.3f}")
    return EXIT_OK


def _simulate_degradation(cfg: ScenarioConfig, out: Path) -> int:
    deg = cfg.degradation
    noise = NoiseLevels.noiseless(f_slope=NoiseLevels().f_slope) if cfg.noiseless else NoiseLevels()
    if deg.fault == "clogging":
        samples = gen_clogging_fixture(cfg.seed, deg.m, deg.dk_rel, deg.dh_static, noise)
    else:
        samples = gen_degradation_fixture(cfg.seed, deg.m, deg.fault == "pump", noise)
    report = analyze_drift(samples, cfg.seed, smoothing_window=deg.smoothing_window,
                           B=cfg.analysis.bootstrap_B, alpha=cfg.analysis.alpha_ci)
    q_star, h_star = samples.normalized()
    with open(out, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(("step", "freq_hz", "q_m3h", "head_m", "q_norm_m3h", "head_norm_m", "psi_pump", "psi_system"))
        for i in range(len(samples.t)):
            w.writerow((int(samples.t[i]), _num(samples.f[i]), _num(samples.q[i]), _num(samples.h[i]),
                        _num(q_star[i]), _num(h_star[i]), _num(report.pump_res[i]), _num(report.system_res[i])))
    ft = report.ftest
    print(f"wrote {out} ({len(samples.t)} steps, fault={deg.fault}, seed {cfg.seed})")
    if ft is None:
        print("F test not available: regression design is rank deficient")
    else:
        print(f"F = {ft.f_stat:.4g} on {ft.df}, p = {ft.p_value:.4g}, "
              f"AIC static {ft.aic_null:.3f}, AIC drift {ft.aic_alt:.3f}")
    print(f"I_W = {report.i_w:.4f}, CI [{report.ci[0]:.4f}, {report.ci[1]:.4f}], label {report.label}")
    return EXIT_OK


def _write_verdicts(path: Path, analysis: PumpAnalysis | None, methods: Sequence[str]) -> int:
    rows = 0
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(VERDICT_HEADER)
        if analysis is None:
            return 0
        for res in analysis.cycles:
            if "ftest" in methods:
                d = res.ftest.deciding
                w.writerow((_num(res.cycle.start_t), _num(res.cycle.end_t), "ftest", "", "", "",
                            _num(d.f_stat) if d else "", _num(d.p_value) if d else "", res.ftest.label))
                rows += 1
            if "tangent" in methods:
                for s in res.segments:
                    w.writerow((_num(s.start_t), _num(s.end_t), "tangent", _num(s.i_w), _num(s.ci[0]),
                                _num(s.ci[1]), "", "", s.label))
                    rows += 1
    return rows


def _write_metrics(path: Path, analysis: PumpAnalysis, methods: Sequence[str]) -> dict[str, ConfusionMatrix]:
    out = {}
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(METRICS_HEADER)
        for m in methods:
            cm = analysis.confusion(m)
            out[m] = cm
            for cls in CLASSES:
                support = int(cm.counts[CLASSES.index(cls)].sum())
                w.writerow((m, cls, _num(cm.precision(cls)), _num(cm.recall(cls)), _num(cm.f1(cls)), support))
            mac = cm.macro()
            w.writerow((m, "macro", _num(mac["precision"]), _num(mac["recall"]), _num(mac["f1"]), cm.total))
    return out


def cmd_diagnose(args) -> int:
    ts = parse_timeseries(args.timeseries)
    cfg = load_config(args.config) if args.config else None
    settings = cfg.analysis if cfg else AnalysisSettings()
    if args.pump is not None:
        try:
            settings = replace(settings, pump=args.pump)
        except ValueError as exc:
            raise ConfigError("--pump", str(exc)) from None
    if settings.pump > ts.n_pumps:
        raise ConfigError("--pump", f"series has only {ts.n_pumps} pumps")
    seed = resolve_seed(args.seed, cfg.seed if cfg else 0)
    methods = ("ftest", "tangent") if args.method == "both" else (args.method,)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    try:
        analysis = analyze_pump(ts, settings, seed) if len(ts) else None
    except (NoLearningData, RankDeficient) as exc:
        print(f"warning: no usable near-nominal samples for pump {settings.pump} ({exc}); "
              "writing empty verdicts", file=sys.stderr)
        analysis = None
    n = _write_verdicts(out / "verdicts.csv", analysis, methods)
    print(f"wrote {out / 'verdicts.csv'} ({n} verdicts)")
    if analysis is None or not analysis.labeled:
        if analysis is not None:
            print("notice: input carries no fault labels; metrics skipped")
        return EXIT_OK
    cms = _write_metrics(out / "metrics.csv", analysis, methods)
    print(f"wrote {out / 'metrics.csv'} ({len(analysis.cycles)} cycles)")
    for m, cm in cms.items():
        mac = cm.macro()
        print(f"{m:>8}: macro precision {mac['precision']:.3f}  recall {mac['recall']:.3f}  f1 {mac['f1']:.3f}")
    return EXIT_OK


def cmd_validate(args) -> int:
    ref = read_scada_csv(args.reference)
    sim = read_scada_csv(args.simulated)
    report = validate_series(ref, sim)
    out = Path(args.out)
    report.write_csv(out)
    print(f"wrote {out}: level NMAE {report.level_nmae:.4%}, {len(report.flagged)} flagged daily deltas")
    return EXIT_OK


def cmd_gen_inflow(args) -> int:
    cfg = _load_scenario(args)
    dt = cfg.station.dt
    q = generate_inflow(cfg.inflow_spec(), dt)
    out = Path(args.out)
    with open(out, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(("t_s", "q_in_m3h"))
        for i, v in enumerate(q):
            w.writerow((_num(i * dt), _num(v)))
    print(f"wrote {out} ({len(q)} rows, seed {cfg.seed})")
    return EXIT_OK


def cmd_show_config(args) -> int:
    sys.stdout.write(dump_config(_load_scenario(args)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pumpsim", description="Wastewater pumping station simulator and fault diagnosis.")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_args(sp):
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--config", help="scenario file")
        g.add_argument("--scenario", help="bundled scenario name (" + ", ".join(bundled_scenario_names()) + ")")
        sp.add_argument("--seed", type=int, help=f"overrides ${SEED_ENV} and the config seed")

    sp = sub.add_parser("simulate", help="run a scenario and write timeseries.csv")
    scenario_args(sp)
    sp.add_argument("--out", default="timeseries.csv")
    sp.add_argument("--noiseless", action="store_true", help="disable sensor noise")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("diagnose", help="classify operating cycles of one pump")
    sp.add_argument("timeseries")
    sp.add_argument("--method", choices=("ftest", "tangent", "both"), default="both")
    sp.add_argument("--out", default=".", help="output directory")
    sp.add_argument("--pump", type=int, help="pump to analyse (default from config, else 1)")
    sp.add_argument("--config", help="scenario file whose analysis.* keys are used")
    sp.add_argument("--seed", type=int, help="bootstrap seed")
    sp.set_defaults(func=cmd_diagnose)

    sp = sub.add_parser("validate", help="compare a simulated series against a reference")
    sp.add_argument("reference")
    sp.add_argument("simulated")
    sp.add_argument("--out", default="validation.csv")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("gen-inflow", help="write the scenario inflow as t_s,q_in_m3h")
    scenario_args(sp)
    sp.add_argument("--out", default="inflow.csv")
    sp.set_defaults(func=cmd_gen_inflow)

    sp = sub.add_parser("show-config", help="print the effective scenario configuration")
    scenario_args(sp)
    sp.add_argument("--noiseless", action="store_true")
    sp.set_defaults(func=cmd_show_config)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (TelemetryFormatError, DisjointRanges) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
