from dataclasses import replace

import numpy as np
import pytest

from pumpsim.diagnostics.pipeline import (
    AnalysisSettings,
    NoLearningData,
    _majority,
    analyze_pump,
    classify_by_ftest,
    learn_baseline,
    truth_for_pump,
)
from pumpsim.hydraulics import pump_head
from pumpsim.diagnostics.tangent import NORMAL, PUMP_FAULT, SYSTEM_FAULT

from conftest import analyze_bundled


class TestLabels:
    @pytest.mark.parametrize("label,expected", [
        ("", NORMAL),
        ("pump_fault:1", PUMP_FAULT),
        ("pump_fault:2", NORMAL),
        ("system_fault", SYSTEM_FAULT),
        ("pump_fault:1;system_fault", PUMP_FAULT),
        ("pump_fault:3;system_fault", SYSTEM_FAULT),
    ])
    def test_truth_for_pump(self, label, expected):
        assert truth_for_pump(label, 1) == expected

    def test_majority(self):
        assert _majority([PUMP_FAULT, PUMP_FAULT, NORMAL]) == PUMP_FAULT
        assert _majority([PUMP_FAULT, NORMAL]) == NORMAL
        assert _majority([PUMP_FAULT, SYSTEM_FAULT]) == PUMP_FAULT


class TestFTestClassifier:
    def setup_method(self):
        self.t = np.arange(60.0)
        self.noise = np.random.default_rng(3).normal(0, 0.05, (2, 60))

    def test_white_residuals_are_normal(self):
        v = classify_by_ftest(self.t, *self.noise)
        assert v.label == NORMAL
        assert v.pump_test.df == (2, 58)

    def test_pump_offset(self):
        v = classify_by_ftest(self.t, self.noise[0] - 0.5, self.noise[1])
        assert v.label == PUMP_FAULT and v.deciding is v.pump_test

    def test_system_trend(self):
        v = classify_by_ftest(self.t, self.noise[0], self.noise[1] + 0.01 * self.t)
        assert v.label == SYSTEM_FAULT

    def test_numerically_zero_channel_never_rejects(self):
        rounding = np.random.default_rng(1).normal(0, 1e-14, (2, 60)) + 1e-13 + 1e-14 * self.t
        v = classify_by_ftest(self.t, 0.2 + 0.001 * self.t + self.noise[0], rounding[1])
        assert v.system_test.p_value < 0.01
        assert v.label == PUMP_FAULT
        assert classify_by_ftest(self.t, *rounding).label == NORMAL

    def test_both_channels_attributed_by_displacement_size(self):
        v = classify_by_ftest(self.t, self.noise[0] + 0.3, self.noise[1] * 0.01 + 0.05)
        assert v.pump_test.p_value < 0.01 and v.system_test.p_value < 0.01
        assert v.system_test.f_stat > v.pump_test.f_stat
        assert v.label == PUMP_FAULT

    def test_short_cycle(self):
        assert classify_by_ftest(self.t[:5], self.noise[0, :5], self.noise[1, :5]).label == NORMAL


class TestSettings:
    @pytest.mark.parametrize("kw", [{"pump": 0}, {"segment_len": 5}, {"alpha_test": 1.0}, {"bootstrap_B": 10},
                                    {"learning_s": 0.0}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            AnalysisSettings(**kw)


class TestTwoDayAnalysis:
    def test_baseline_tracks_configured_curves(self, twoday_run, twoday_analysis):
        st = twoday_run.config.station
        base = twoday_analysis.baseline
        # the fit is only meaningful over the flows seen while learning
        ts = twoday_run.ts
        seen = ts.q[(ts.t < 21600) & (ts.state[:, 0] == 1) & (ts.freq[:, 0] == st.f_max), 0]
        q = np.linspace(seen.min(), seen.max(), 20)
        fitted = base.pump.c0 + base.pump.c1 * q + base.pump.c2 * q * q
        true = pump_head(st.pump_curve, q)
        np.testing.assert_allclose(fitted, true, rtol=0.02)
        assert base.system.k == pytest.approx(st.system_curve.k, rel=0.05)

    def test_noiseless_baseline_is_exact(self):
        base = analyze_bundled("twoday", noiseless=True).baseline
        assert (base.pump.c0, base.pump.c1, base.pump.c2) == pytest.approx((32.0, -0.005, -1.25e-4))

    def test_learning_segments_are_normal(self, twoday_analysis):
        segs = [s for c in twoday_analysis.cycles for s in c.segments]
        learning = [s for s in segs if s.learning]
        assert learning and all(s.label == NORMAL for s in learning)
        assert all(s.end_t <= twoday_analysis.settings.learning_s for s in learning)

    def test_threshold_refreshes(self, twoday_analysis):
        times = [t for t, _ in twoday_analysis.threshold_history]
        assert times[0] == twoday_analysis.settings.learning_s
        assert np.all(np.diff(times) > 0)
        for _, th in twoday_analysis.threshold_history:
            assert th.pump_lci >= 0.6 and th.system_uci <= 0.4

    def test_each_fault_class_recognised(self, twoday_analysis):
        for method in ("ftest", "tangent"):
            cm = twoday_analysis.confusion(method)
            assert cm.recall(PUMP_FAULT) >= 0.9 and cm.recall(SYSTEM_FAULT) >= 0.9

    def test_noiseless_run_has_no_cross_confusion(self):
        analysis = analyze_bundled("twoday", noiseless=True)
        for method in ("ftest", "tangent"):
            cm = analysis.confusion(method)
            assert cm.count(PUMP_FAULT, SYSTEM_FAULT) == 0 and cm.count(SYSTEM_FAULT, PUMP_FAULT) == 0

    def test_unknown_method(self, twoday_analysis):
        with pytest.raises(ValueError):
            twoday_analysis.confusion("oracle")

    def test_reproducible(self, twoday_run, twoday_analysis):
        again = analyze_pump(twoday_run.ts, twoday_run.config.analysis, twoday_run.config.seed)
        assert [c.tangent_label for c in again.cycles] == [c.tangent_label for c in twoday_analysis.cycles]
        assert [s.ci for c in again.cycles for s in c.segments][:20] == \
               [s.ci for c in twoday_analysis.cycles for s in c.segments][:20]


class TestLearningWindow:
    def test_idle_pump_in_learning_window(self, twoday_run):
        settings = replace(twoday_run.config.analysis, learning_s=5.0)
        with pytest.raises(NoLearningData):
            learn_baseline(twoday_run.ts, settings)

    def test_pump_out_of_range(self, twoday_run):
        with pytest.raises(ValueError):
            analyze_pump(twoday_run.ts, AnalysisSettings(pump=9))
