from __future__ import annotations

import functools
from dataclasses import dataclass, replace

import pytest

from pumpsim.config import ScenarioConfig, bundled_scenario
from pumpsim.diagnostics.pipeline import PumpAnalysis, analyze_pump
from pumpsim.inflow import generate_inflow
from pumpsim.station import SimulationResult, simulate_scenario

_ACCEPTANCE = pytest.StashKey[dict]()


@dataclass(frozen=True)
class ScenarioRun:
    config: ScenarioConfig
    inflow: object
    result: SimulationResult

    @property
    def ts(self):
        return self.result.timeseries


@functools.lru_cache(maxsize=None)
def run_bundled(name: str, noiseless: bool = False, seed: int | None = None) -> ScenarioRun:
    cfg = bundled_scenario(name)
    if noiseless:
        cfg = replace(cfg, noiseless=True)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    station = cfg.effective_station()
    q = generate_inflow(cfg.inflow_spec(), station.dt)
    return ScenarioRun(cfg, q, simulate_scenario(station, q, cfg.faults, cfg.seed))


@functools.lru_cache(maxsize=None)
def analyze_bundled(name: str, noiseless: bool = False) -> PumpAnalysis:
    run = run_bundled(name, noiseless)
    return analyze_pump(run.ts, run.config.analysis, run.config.seed)


@pytest.fixture(scope="session")
def nominal_noiseless() -> ScenarioRun:
    return run_bundled("nominal", noiseless=True)


@pytest.fixture(scope="session")
def blockage_run() -> ScenarioRun:
    return run_bundled("blockage")


@pytest.fixture(scope="session")
def clogging_run() -> ScenarioRun:
    return run_bundled("clogging")


@pytest.fixture(scope="session")
def twoday_run() -> ScenarioRun:
    return run_bundled("twoday")


@pytest.fixture(scope="session")
def twoday_analysis() -> PumpAnalysis:
    return analyze_bundled("twoday")


@pytest.fixture
def acceptance_report(request):
    """Record ``(criterion, passed, detail)``; lines are repeated in the terminal summary."""
    log = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(number: int, passed: bool, detail: str) -> None:
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        log[number] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_ACCEPTANCE, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(log):
        terminalreporter.write_line(log[number])
