
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pumpsim.hydraulics import (
    BelowFrequencyFloor,
    NoIntersection,
    PumpCurve,
    SystemCurve,
    affinity_normalize,
    curve_slopes,
    pump_head,
    solve_operating_point,
    system_head,
)

from oracles import closed_form_operating_flow, random_curve_triples

PUMP = PumpCurve(15.0, -5e-4, -9e-4)
SYSTEM = SystemCurve(2.0, 6e-4)


class TestCurves:
    @pytest.mark.parametrize("q,n,expected", [(0, 1, 15.0), (0, 0.5, 3.75), (100, 1, 15 - 0.05 - 9)])
    def test_pump_head(self, q, n, expected):
        assert pump_head(PUMP, q, n) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("k,q,expected", [(6e-4, 0, 2.0), (6e-4, 100, 8.0), (3e-4, 100, 5.0)])
    def test_system_head(self, k, q, expected):
        assert system_head(SystemCurve(2.0, k), q) == pytest.approx(expected, abs=1e-12)

    @given(st.floats(0.01, 2.0))
    def test_shut_off_head_scales_with_speed_squared(self, n):
        assert pump_head(PUMP, 0.0, n) == PUMP.c0 * n * n

    @pytest.mark.parametrize("args", [(0, -1e-4, -1e-4), (10, 1e-4, -1e-4), (10, 0, 0), (10, 0, 1e-4)])
    def test_invalid_pump_curve(self, args):
        with pytest.raises(ValueError):
            PumpCurve(*args)

    @pytest.mark.parametrize("args", [(-1, 1e-4), (1, 0), (1, -1e-4)])
    def test_invalid_system_curve(self, args):
        with pytest.raises(ValueError):
            SystemCurve(*args)

    def test_datasheet_sign_mapping(self):
        assert PumpCurve.from_datasheet(15, 5e-4, 9e-4) == PUMP

    def test_zero_head_flow_is_root(self):
        for n in (0.4, 1.0, 1.3):
            assert pump_head(PUMP, PUMP.zero_head_flow(n), n) == pytest.approx(0.0, abs=1e-9)


class TestOperatingPoint:
    def test_reference_pair(self):
        op = solve_operating_point(PUMP, SYSTEM)
        assert op.q == pytest.approx(closed_form_operating_flow(PUMP, SYSTEM), rel=1e-9)
        assert op.q == pytest.approx(92.93, abs=0.01)
        assert op.h == pytest.approx(7.18, abs=0.01)

    def test_point_lies_on_both_curves(self):
        op = solve_operating_point(PUMP, SYSTEM, 0.8)
        assert abs(pump_head(PUMP, op.q, 0.8) - op.h) < 1e-8
        assert op.h == system_head(SYSTEM, op.q)

    def test_static_head_near_shut_off(self):
        op = solve_operating_point(PUMP, SystemCurve(14.9999, 6e-4))
        assert 0 < op.q < 0.5

    def test_no_intersection(self):
        with pytest.raises(NoIntersection):
            solve_operating_point(PUMP, SystemCurve(15.0, 6e-4))
        with pytest.raises(NoIntersection):
            solve_operating_point(PUMP, SYSTEM, 0.3)

    def test_affinity_consistency(self):
        n = 0.5
        scaled = PumpCurve(PUMP.c0 * n * n, PUMP.c1 * n, PUMP.c2)
        assert solve_operating_point(PUMP, SystemCurve(1.0, 6e-4), n).q == pytest.approx(
            closed_form_operating_flow(scaled, SystemCurve(1.0, 6e-4), 1.0), rel=1e-9
        )

    def test_random_pairs_match_closed_form(self):
        for pump, system, n in random_curve_triples(np.random.default_rng(3), 200):
            q = solve_operating_point(pump, system, n).q
            assert q == pytest.approx(closed_form_operating_flow(pump, system, n), rel=1e-9)

    def test_larger_friction_moves_point_left(self):
        qs = [solve_operating_point(PUMP, SystemCurve(2.0, k)).q for k in (3e-4, 6e-4, 1.2e-3, 2.4e-3)]
        assert all(a > b for a, b in zip(qs, qs[1:]))

    def test_lower_speed_lowers_flow_and_head(self):
        ops = [solve_operating_point(PUMP, SYSTEM, n) for n in (1.0, 0.9, 0.8, 0.7)]
        assert all(a.q > b.q and a.h > b.h for a, b in zip(ops, ops[1:]))

    def test_rejects_bad_tolerance(self):
        with pytest.raises(ValueError):
            solve_operating_point(PUMP, SYSTEM, tol=0)

    @settings(max_examples=200, deadline=None)
    @given(
        c0=st.floats(5, 60), c1=st.floats(-0.02, 0), c2=st.floats(-3e-3, -1e-5),
        frac=st.floats(0, 0.95), k=st.floats(1e-5, 3e-3), n=st.floats(0.3, 1.2),
    )
    def test_property_matches_closed_form(self, c0, c1, c2, frac, k, n):
        pump = PumpCurve(c0, c1, c2)
        system = SystemCurve(frac * c0 * n * n, k)
        q = solve_operating_point(pump, system, n).q
        assert q == pytest.approx(closed_form_operating_flow(pump, system, n), rel=1e-9)


class TestAffinity:
    @pytest.mark.parametrize("q,h,f,expected", [(50, 4, 25, (100, 16)), (80, 6, 50, (80, 6)),
                                                (90, 5, 40, (112.5, 7.8125))])
    def test_examples(self, q, h, f, expected):
        assert affinity_normalize(q, h, f, 50.0) == pytest.approx(expected, rel=1e-12)

    @given(st.floats(0.1, 500), st.floats(0.1, 50), st.floats(10.01, 60))
    def test_round_trip(self, q, h, f):
        qs, hs = affinity_normalize(q, h, f, 50.0)
        r = f / 50.0
        assert qs * r == pytest.approx(q, rel=1e-12)
        assert hs * r * r == pytest.approx(h, rel=1e-12)

    def test_floor(self):
        with pytest.raises(BelowFrequencyFloor):
            affinity_normalize(10, 1, 10.0, 50.0)
        assert affinity_normalize(10, 1, 10.0, 50.0, f_floor=5.0) == pytest.approx((50, 25))


class TestSlopes:
    def test_examples(self):
        assert curve_slopes(PUMP, SYSTEM, 0.0) == pytest.approx((-5e-4, 0.0))
        assert curve_slopes(PUMP, SYSTEM, 100.0) == pytest.approx((-0.1805, 0.12))

    def test_system_steeper_than_pump_at_intersection(self):
        for pump, system, _ in random_curve_triples(np.random.default_rng(9), 300):
            q = solve_operating_point(pump, system).q if pump.c0 > system.h_static else None
            if q is None:
                continue
            m_p, m_s = curve_slopes(pump, system, q)
            assert m_s - m_p > 0
