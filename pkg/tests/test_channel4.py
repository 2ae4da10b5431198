import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavsignal.channel4 import (A4_TERMS, _NegGap, coefficient_matrix, compute_A4, compute_B4, compute_fourth_order,
                                compute_P4, fourth_order_by_cutoff, wick_four_point)
from cavsignal.field import CavityConfig, DetectorParams, mode_amplitude, wightman

# 64-node 4D Gauss-Legendre quadrature, frozen
SMALL = dict(cavity=CavityConfig(math.pi, 2), detA=DetectorParams(1, 1), detB=DetectorParams(2, 1), T=3.0)
GOLDEN = {"A4": 0.7443213884158055, "B4": 0.5785702724986215, "P4": -0.06944831655507239}


@pytest.mark.parametrize("fn", [compute_A4, compute_B4])
def test_zero_time(fn):
    assert fn(CavityConfig(10, 10), DetectorParams(4, 4), DetectorParams(6, 4), 0.0) == 0
    assert compute_P4(CavityConfig(10, 10), DetectorParams(6, 4), 0.0) == 0


def test_small_instance_golden():
    f = compute_fourth_order(**SMALL)
    for name, ref in GOLDEN.items():
        assert abs(getattr(f, name) - ref) <= 1e-6 * abs(ref)
        # the analytic value actually agrees to roundoff
        assert abs(getattr(f, name) - ref) <= 1e-12


def test_B4_is_A4_with_reversed_gap():
    cav, A, B = CavityConfig(10, 12), DetectorParams(4, 3), DetectorParams(6, 3)
    b4 = compute_B4(cav, A, B, 2.5)
    mat = coefficient_matrix(A4_TERMS, cav, {"A": _NegGap(A.x, A.n, 1.0), "B": B}, 2.5)
    from cavsignal.summation import csum

    assert b4 == csum(mat).real


def test_single_mode_equal_points_structure():
    cav = CavityConfig(10, 1)
    w = wick_four_point(cav, [3.0] * 4)
    times = (0.3, 0.3, 0.3, 0.3)
    w11 = wightman(cav, 3.0, 3.0).evaluate(0.3, 0.3)
    assert w.evaluate(cav.L, times) == pytest.approx(3 * w11**2, rel=1e-14)


def test_node_kills_contraction():
    # mode 2 has a node at the midpoint, so the (12) pair carries nothing for j = 2
    cav = CavityConfig(10, 2)
    w = wick_four_point(cav, [5.0, 5.0, 3.0, 3.0])
    coeff = w.patterns[0][0]
    assert np.all(np.abs(coeff[1, :]) <= 1e-30)
    assert np.all(np.abs(coeff[0, :]) > 1e-3)


def test_four_point_matches_direct_sum():
    cav = CavityConfig(10, 2)
    xs = [1.0, 3.5, 6.0, 8.2]
    ts = [0.4, 1.7, -0.6, 2.2]
    w = wick_four_point(cav, xs)

    def two(a, b):
        return sum(mode_amplitude(cav, j, xs[a]) * mode_amplitude(cav, j, xs[b])
                   * np.exp(-1j * j * math.pi / 10 * (ts[a] - ts[b])) for j in (1, 2))

    direct = two(0, 1) * two(2, 3) + two(0, 2) * two(1, 3) + two(0, 3) * two(1, 2)
    assert abs(w.evaluate(cav.L, ts) - direct) <= 1e-13


def test_by_cutoff_matches_direct():
    cav, A, B = CavityConfig(10, 30), DetectorParams(4, 4), DetectorParams(6, 4)
    series = fourth_order_by_cutoff("A4", cav, A, B, 2.0)
    for N in (5, 17, 30):
        assert series[N - 1].real == pytest.approx(compute_A4(cav.with_cutoff(N), A, B, 2.0), rel=1e-12, abs=1e-15)


@settings(max_examples=20, deadline=None)
@given(st.floats(2, 15), st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.integers(1, 5), st.integers(1, 25),
       st.floats(0.05, 25))
def test_realness(L, fa, fb, n, N, T):
    f = compute_fourth_order(CavityConfig(L, N), DetectorParams(fa * L, n), DetectorParams(fb * L, n), T)
    assert f.imag_residual <= 1e-9 * max(1.0, abs(f.A4), abs(f.B4), abs(f.P4))


def test_inside_lightcone_converges():
    cav, A, B = CavityConfig(10, 400), DetectorParams(4, 4), DetectorParams(6, 4)
    a = fourth_order_by_cutoff("A4", cav, A, B, 3.0).real
    assert abs(a[399] - a[199]) < abs(a[99] - a[49])


def test_spacelike_envelope_decays_fig3():
    # d = 5, n = 15, T = 4 < d
    cav, A, B = CavityConfig(10, 400), DetectorParams(2.5, 15), DetectorParams(7.5, 15)
    a = np.abs(fourth_order_by_cutoff("A4", cav, A, B, 4.0))
    env = np.maximum.accumulate(a[::-1])[::-1]
    assert env[399] < 0.1 * env[29]


def test_resonance_carries_largest_increments_fig3():
    cav, A, B = CavityConfig(10, 60), DetectorParams(2.5, 15), DetectorParams(7.5, 15)
    a = fourth_order_by_cutoff("A4", cav, A, B, 7.5).real
    steps = np.abs(np.diff(np.concatenate([[0.0], a])))
    assert abs(int(np.argmax(steps)) + 1 - 15) <= 2


def test_A4_nonnegative_fig2_grid():
    cav, A, B = CavityConfig(10, 100), DetectorParams(4, 4), DetectorParams(6, 4)
    for T in np.linspace(0.1, 20, 25):
        assert compute_A4(cav, A, B, T) >= 0


def test_P4_positive_somewhere_fig2():
    # documented disagreement with the claimed non-positivity; see the acceptance suite
    cav, B = CavityConfig(10, 100), DetectorParams(6, 4)
    assert compute_P4(cav, B, 4.18) > 0.1
