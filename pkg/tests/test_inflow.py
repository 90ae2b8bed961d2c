import numpy as np
import pytest

from pumpsim._rng import stream
from pumpsim.inflow import (
    EcdfBase,
    EmptySamples,
    InflowSpec,
    PeakProcess,
    SinusoidBase,
    build_ecdf,
    generate_inflow,
    generate_peak_train,
    peak_contribution,
    reference_inflow_samples,
    sample_baseline,
)


class TestEcdf:
    def test_value_at_order_statistic(self):
        assert build_ecdf([1, 2, 3])(2) == pytest.approx(2 / 3)

    def test_single_sample_step(self):
        F = build_ecdf([5])
        assert F(4.999) == 0 and F(5) == 1 and F(100) == 1

    def test_rejects_bad_samples(self):
        with pytest.raises(EmptySamples):
            build_ecdf([])
        with pytest.raises(ValueError):
            build_ecdf([1.0, np.nan])
        with pytest.raises(ValueError):
            build_ecdf([-1.0, 2.0])

    @pytest.mark.parametrize("u,expected", [(0.0, 1), (0.99, 3), (0.5, 2)])
    def test_generalized_inverse(self, u, expected):
        assert sample_baseline(build_ecdf([3, 1, 2]), u) == expected

    def test_reference_sample_quantiles(self):
        q_m3s = reference_inflow_samples() / 3600.0
        assert np.quantile(q_m3s, 0.5) == pytest.approx(0.016, abs=5e-4)
        assert np.quantile(q_m3s, 0.95) == pytest.approx(0.032, abs=5e-4)
        assert np.quantile(q_m3s, 0.99) == pytest.approx(0.040, abs=5e-4)


class TestPeaks:
    def test_zero_rate_is_empty(self):
        assert generate_peak_train(PeakProcess(0.0, 30, 900), 86400, stream(0, "x")) == []

    @pytest.mark.parametrize("seed", range(10))
    def test_daily_count_within_three_sigma(self, seed):
        n = len(generate_peak_train(PeakProcess(0.0005, 30, 900), 86400, stream(seed, "inflow.arrivals")))
        assert abs(n - 43.2) <= 3 * np.sqrt(43.2)

    def test_isolated_event_adds_magnitude_for_duration(self):
        q = peak_contribution([(100.0, 1000.0)], 30.0, 3000)
        assert np.count_nonzero(q) == 900
        assert set(np.unique(q)) == {0.0, 30.0}
        assert q[99] == 0 and q[100] == 30 and q[999] == 30 and q[1000] == 0

    def test_overlaps_stack(self):
        q = peak_contribution([(0.0, 10.0), (5.0, 15.0)], 30.0, 20)
        assert q[7] == 60 and q[12] == 30

    def test_invalid_process(self):
        with pytest.raises(ValueError):
            PeakProcess(-1, 30, 900)
        with pytest.raises(ValueError):
            PeakProcess(0.1, 30, 0)


class TestGenerateInflow:
    def test_sinusoid_values(self):
        q = generate_inflow(InflowSpec(SinusoidBase(60, 20, 86400, 0), 86400))
        assert q[0] == pytest.approx(60)
        assert q[21600] == pytest.approx(80)

    def test_ecdf_without_peaks_is_pure_baseline(self):
        ecdf = build_ecdf(reference_inflow_samples())
        q = generate_inflow(InflowSpec(EcdfBase(ecdf), 5000, None, 3))
        assert np.array_equal(q, sample_baseline(ecdf, stream(3, "inflow.baseline").random(5000)))

    def test_peaks_do_not_shift_baseline_draws(self):
        ecdf = build_ecdf(reference_inflow_samples())
        plain = generate_inflow(InflowSpec(EcdfBase(ecdf), 86400, None, 5))
        peaked = generate_inflow(InflowSpec(EcdfBase(ecdf), 86400, PeakProcess(0.0005, 30, 900), 5))
        diff = peaked - plain
        np.testing.assert_allclose(diff, 30.0 * np.round(diff / 30.0), atol=1e-9)
        assert diff.max() >= 30

    def test_surge_on_noisy_sinusoid(self):
        base = SinusoidBase(60, 20, 86400, 5)
        spec = InflowSpec(base, 86400, PeakProcess(0.0005, 50, 900), 11)
        q = generate_inflow(spec)
        events = generate_peak_train(spec.peaks, 86400, stream(11, "inflow.arrivals"))
        t = np.arange(86400)
        deterministic = 60 + 20 * np.sin(2 * np.pi * t / 86400)
        active = peak_contribution(events, 1.0, 86400)
        isolated = active == 1
        assert isolated.any()
        excess = q[isolated] - deterministic[isolated]
        # Gaussian noise leaves about 0.27 % of samples outside 3 sigma
        assert np.mean(np.abs(excess - 50) <= 3 * 5) > 0.99
        assert abs(excess.mean() - 50) < 3 * 5 / np.sqrt(isolated.sum())

    def test_deterministic_and_nonnegative(self):
        spec = InflowSpec(SinusoidBase(10, 10, 3600, 5), 7200, PeakProcess(0.001, 20, 60), 2)
        a, b = generate_inflow(spec), generate_inflow(spec)
        assert np.array_equal(a, b)
        assert np.all(a >= 0)
        assert not np.array_equal(a, generate_inflow(InflowSpec(spec.base, 7200, spec.peaks, 3)))

    def test_invalid_specs(self):
        with pytest.raises(ValueError):
            SinusoidBase(10, 20)
        with pytest.raises(ValueError):
            InflowSpec(SinusoidBase(10, 5), 0.5)
