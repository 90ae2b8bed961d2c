import numpy as np
import pytest

from pumpsim.telemetry import (
    MalformedHeader,
    NonFiniteValue,
    RaggedRow,
    TimeSeries,
    aggregate_daily,
    csv_header,
    cumulative_energy,
    hourly_energy,
    parse_timeseries,
    segment_cycles,
    serialize_timeseries,
)


def make_series(state, freq=None, p_elec=None, dt=1.0, labels=None):
    state = np.asarray(state, dtype=np.int64).reshape(len(state), -1)
    T, n = state.shape
    freq = np.where(state == 1, 50.0, 0.0) if freq is None else np.asarray(freq, float).reshape(T, n)
    p_elec = np.zeros((T, n)) if p_elec is None else np.asarray(p_elec, float).reshape(T, n)
    z = np.zeros((T, n))
    lab = np.array(["normal"] * T if labels is None else labels, dtype=object)
    return TimeSeries(np.arange(T) * dt, np.full(T, 1.0), np.zeros(T), state, freq, z.copy(), z.copy(),
                      z.copy(), p_elec, lab)


class TestTimeSeries:
    def test_header(self):
        h = csv_header(2)
        assert h[:3] == ["t_s", "level_m", "q_in_m3h"] and h[-1] == "label"
        assert h[3:9] == ["p1_state", "p1_freq_hz", "p1_q_m3h", "p1_head_m", "p1_p_hyd_w", "p1_p_elec_w"]
        assert len(h) == 3 + 12 + 1

    def test_shape_validation(self):
        ts = make_series([0, 1, 1])
        with pytest.raises(ValueError):
            TimeSeries(ts.t, ts.level[:2], ts.q_in, ts.state, ts.freq, ts.q, ts.head, ts.p_hyd, ts.p_elec, ts.label)
        with pytest.raises(ValueError):
            TimeSeries(ts.t, ts.level, ts.q_in, ts.state, ts.freq[:, :0], ts.q, ts.head, ts.p_hyd, ts.p_elec,
                       ts.label)


class TestAggregation:
    def test_idle_pump(self):
        d = aggregate_daily(make_series(np.zeros(100)))
        assert d.starts[0, 0] == 0 and d.runtime_h[0, 0] == 0 and d.energy_kwh[0, 0] == 0

    def test_single_run(self):
        state = np.zeros(2000)
        state[100:700] = 1
        d = aggregate_daily(make_series(state, p_elec=state * 18706.0))
        assert d.starts[0, 0] == 1
        assert d.runtime_h[0, 0] == pytest.approx(1 / 6)
        assert d.energy_kwh[0, 0] == pytest.approx(3.118, abs=1e-3)

    def test_days_split_and_runtime_total(self):
        rng = np.random.default_rng(0)
        state = (rng.random((3 * 86400 // 60, 2)) < 0.3).astype(int)
        ts = make_series(state, dt=60.0)
        d = aggregate_daily(ts)
        assert d.n_days == 3
        assert d.runtime_h.sum(axis=0) == pytest.approx(state.sum(axis=0) * 60 / 3600)

    def test_energy_helpers(self):
        p = np.abs(np.random.default_rng(1).normal(1000, 100, 7200))
        ts = make_series(np.ones(7200), p_elec=p)
        cum = cumulative_energy(ts)
        assert np.all(np.diff(cum[:, 0]) >= 0)
        assert hourly_energy(ts).sum() == pytest.approx(cum[-1, 0])

    def test_empty(self):
        with pytest.raises(ValueError):
            aggregate_daily(TimeSeries.empty(2))


class TestCycles:
    def test_counts_runs(self):
        state = np.zeros(300)
        for a in (10, 110, 210):
            state[a:a + 50] = 1
        cycles = segment_cycles(make_series(state), 1)
        assert len(cycles) == 3
        assert all(a.end_t <= b.start_t for a, b in zip(cycles, cycles[1:]))

    def test_ramp_samples_excluded(self):
        state = np.zeros(100)
        state[10:60] = 1
        freq = state * 50.0
        freq[10:20] = 25.0
        (cyc,) = segment_cycles(make_series(state, freq=freq), 1)
        assert cyc.samples[0] == 20 and len(cyc.samples) == 40
        assert cyc.start_t == 10.0 and cyc.end_t == 60.0

    def test_short_runs_dropped(self):
        state = np.zeros(100)
        state[10:30] = 1
        assert segment_cycles(make_series(state), 1) == []

    def test_bad_pump(self):
        with pytest.raises(ValueError):
            segment_cycles(make_series(np.zeros(10)), 2)


class TestCsv:
    def test_empty_round_trip(self, tmp_path):
        path = tmp_path / "e.csv"
        serialize_timeseries(TimeSeries.empty(3), path)
        assert path.read_text().strip() == ",".join(csv_header(3))
        back = parse_timeseries(path)
        assert len(back) == 0 and back.n_pumps == 3

    def test_simulated_round_trip_is_bit_identical(self, blockage_run, tmp_path):
        path = tmp_path / "ts.csv"
        serialize_timeseries(blockage_run.ts, path)
        assert parse_timeseries(path) == blockage_run.ts

    def _write(self, tmp_path, rows, n=1):
        path = tmp_path / "x.csv"
        path.write_text("\n".join([",".join(csv_header(n))] + rows) + "\n")
        return path

    def test_nan_reports_line(self, tmp_path):
        good = "0.0,1.0,5.0,1,50.0,10.0,5.0,1.0,2.0,normal"
        bad = "1.0,nan,5.0,1,50.0,10.0,5.0,1.0,2.0,normal"
        with pytest.raises(NonFiniteValue) as exc:
            parse_timeseries(self._write(tmp_path, [good, bad]))
        assert exc.value.line == 3

    def test_ragged_row(self, tmp_path):
        with pytest.raises(RaggedRow):
            parse_timeseries(self._write(tmp_path, ["0.0,1.0,5.0,1,50.0"]))

    def test_bad_header(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("t,level\n")
        with pytest.raises(MalformedHeader):
            parse_timeseries(path)
