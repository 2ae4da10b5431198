import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavsignal.errors import ConfigurationError
from cavsignal.field import CavityConfig, DetectorParams, check_time, mode_amplitude, wightman


def test_mode_amplitude_examples():
    assert mode_amplitude(CavityConfig(math.pi, 1), 1, math.pi / 2) == pytest.approx(1 / math.sqrt(math.pi))
    assert mode_amplitude(CavityConfig(10, 4), 2, 5) == pytest.approx(0, abs=1e-16)
    # sin(2.4 pi) / sqrt(4 pi), evaluated by a separate script
    assert mode_amplitude(CavityConfig(10, 4), 4, 6) == pytest.approx(0.2682880899294713, rel=1e-14)


def test_mode_index_range():
    cav = CavityConfig(10, 3)
    with pytest.raises(ConfigurationError):
        mode_amplitude(cav, 4, 1.0)
    with pytest.raises(ConfigurationError):
        mode_amplitude(cav, 0, 1.0)


@pytest.mark.parametrize("kwargs", [dict(L=0, N_C=1), dict(L=1, N_C=0), dict(L=1, N_C=1.5)])
def test_cavity_validation(kwargs):
    with pytest.raises(ConfigurationError):
        CavityConfig(**kwargs)


def test_detector_validation():
    cav = CavityConfig(10, 5)
    with pytest.raises(ConfigurationError):
        DetectorParams(0.0, 1).validate(cav)
    with pytest.raises(ConfigurationError):
        DetectorParams(10.0, 1).validate(cav)
    with pytest.raises(ConfigurationError):
        DetectorParams(5.0, 0)
    with pytest.raises(ConfigurationError):
        DetectorParams(5.0, 1, coupling=-0.1)
    with pytest.raises(ConfigurationError):
        check_time(-1)
    assert DetectorParams(5.0, 4).gap(cav) == pytest.approx(4 * math.pi / 10)


def test_equal_points_nonnegative():
    w = wightman(CavityConfig(10, 50), 3.3, 3.3)
    assert np.all(w.coeffs >= 0)


def test_reflection_sign_pattern():
    cav = CavityConfig(10, 6)
    x = 2.7
    same = wightman(cav, x, x).coeffs
    mirrored = wightman(cav, x, cav.L - x).coeffs
    j = np.arange(1, 7)
    assert np.allclose(mirrored, (-1) ** (j + 1) * same, atol=1e-15)


def test_summed_expansion_matches_direct_sum():
    cav = CavityConfig(10, 10)
    w = wightman(cav, 4, 6)
    direct = 0j
    for j in range(1, 11):
        k = j * math.pi / 10
        direct += math.sin(k * 4) * math.sin(k * 6) / (k * 10) * np.exp(-1j * k * 1.0)
    assert abs(w.evaluate(1.0, 0.0) - direct) <= 1e-14


def test_frequency_bookkeeping():
    w = wightman(CavityConfig(10, 3), 1, 2)
    assert list(w.freq_first) == [-1, -2, -3]
    assert list(w.freq_second) == [1, 2, 3]


positions = st.floats(0.05, 9.95)
times = st.floats(-20, 20)


@settings(max_examples=80, deadline=None)
@given(positions, positions, times, times)
def test_swap_conjugates(x, xp, t, tp):
    cav = CavityConfig(10, 30)
    a = wightman(cav, x, xp).evaluate(t, tp)
    b = wightman(cav, xp, x).evaluate(tp, t)
    assert a == pytest.approx(np.conj(b), abs=1e-13)


@settings(max_examples=80, deadline=None)
@given(positions, positions, times, times)
def test_commutator_imaginary(x, xp, t, tp):
    w = wightman(CavityConfig(10, 30), x, xp)
    c = w.commutator(t, tp)
    assert c.real == 0
    expected = w.evaluate(t, tp) - wightman(CavityConfig(10, 30), xp, x).evaluate(tp, t)
    assert c == pytest.approx(expected, abs=1e-12)


def test_spacelike_commutator_envelope_decreases():
    # |x - x'| = 2 > |t - t'| = 1, both points away from the walls
    vals = []
    for n in range(1, 801):
        vals.append(abs(wightman(CavityConfig(10, n), 4, 6).commutator(1.0, 0.0)))
    vals = np.array(vals)
    env = np.maximum.accumulate(vals[::-1])[::-1]
    assert env[399] < 0.1 * env[9]
