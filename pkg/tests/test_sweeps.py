import math

import numpy as np
import pytest

from cavsignal.errors import ConfigurationError
from cavsignal.field import CavityConfig, DetectorParams
from cavsignal.sweeps import (ScanParams, SweepSeries, cutoff_scan, envelope, evaluate, fit_power_law,
                              lightcone_envelope, normalize_series, time_scan)

FIG = ScanParams(CavityConfig(10, 100), DetectorParams(4, 4), DetectorParams(6, 4), 2.0)


def series(values, axis=None):
    values = np.asarray(values, dtype=float)
    axis = np.arange(1, values.size + 1) if axis is None else axis
    return SweepSeries("N_C", axis, values)


def constant(cav, A, B, T):
    return 0.25


def test_constant_selector_gives_constant_series():
    s = cutoff_scan(constant, FIG, [1, 5, 9])
    assert np.all(s.values == 0.25)
    t = time_scan(constant, FIG, [0.5, 1.0])
    assert np.all(t.values == 0.25)
    assert s.meta["coefficient"] == "constant"


def test_envelope_example():
    env = envelope(series([0.5, 0.7, 0.2]))
    assert env.values.real.tolist() == [0.7, 0.7, 0.2]


def test_envelope_of_decreasing_series_is_unchanged_and_idempotent():
    s = series([3.0, 2.0, 1.5, 0.1])
    assert np.array_equal(envelope(s).values, s.values)
    rng = np.random.default_rng(3)
    r = series(rng.random(50))
    assert np.array_equal(envelope(envelope(r)).values, envelope(r).values)
    with pytest.raises(ConfigurationError):
        envelope(SweepSeries("N_C", [], []))


def test_normalization():
    s = series([0.5, 0.7, 0.2])
    assert np.array_equal(normalize_series(s, 1.0).values, s.values)
    scaled = series([1.0, 1.4, 0.4])
    assert np.allclose(normalize_series(scaled, 2.0).values, normalize_series(s, 1.0).values, rtol=1e-15)
    with pytest.raises(ConfigurationError):
        normalize_series(s, 0.0)
    with pytest.raises(ConfigurationError):
        normalize_series(s, math.nan)


def test_fit_recovers_exact_power_laws():
    n = np.arange(1, 101, dtype=float)
    fit = fit_power_law(series(n**-3.0, n))
    assert fit.slope == pytest.approx(-3.0, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    fit = fit_power_law(series(5 / n, n), window=(10, 90))
    assert fit.slope == pytest.approx(-1.0, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(5), abs=1e-12)
    assert fit.window == (10.0, 90.0)


def test_fit_input_checks():
    with pytest.raises(ConfigurationError):
        fit_power_law(series([1.0, 0.5]))
    with pytest.raises(ConfigurationError):
        fit_power_law(series([1.0, 0.0, 0.5]))
    with pytest.raises(ConfigurationError):
        fit_power_law(series([1.0, 0.5, 0.2, 0.1]), window=(3, 2))


def test_scan_input_checks():
    with pytest.raises(ConfigurationError):
        evaluate("Z9", FIG)
    with pytest.raises(ConfigurationError):
        cutoff_scan("P2", FIG, [3, 2, 5])
    with pytest.raises(ConfigurationError):
        cutoff_scan("P2", FIG, [0, 1])
    with pytest.raises(ConfigurationError):
        SweepSeries("T", [1.0, 1.0], [0, 0])


def test_zero_time_scan_gives_zeros():
    for sel in ("P2", "C2+D2*", "A4"):
        assert time_scan(sel, FIG, [0.0]).values.tolist() == [0j]


def test_cutoff_scan_matches_pointwise_evaluation():
    cut = [3, 10, 40]
    for sel in ("Q2", "C2+D2*", "A4", "P4"):
        s = cutoff_scan(sel, FIG, cut)
        for n, v in zip(cut, s.values):
            direct = evaluate(sel, ScanParams(FIG.cavity.with_cutoff(n), FIG.detA, FIG.detB, FIG.T))
            assert abs(v - direct) <= 1e-10 * max(abs(direct), 1e-12)


def test_fourth_order_grows_toward_lightcone():
    times = [0.5, 1.0, 1.5, 1.9]
    vals = np.abs(time_scan("A4", FIG, times).values)
    assert np.all(np.diff(vals) > 0)


# envelope of |C2 + D2*| at T = 1.6, d = 2 (outside the light cone), frozen
ACAUSAL_TAIL = {50: 9.84607566e-04, 100: 2.54587900e-04, 200: 6.48863808e-05}


def test_acausal_tail_shrinks_with_cutoff():
    p = ScanParams(FIG.cavity, FIG.detA, FIG.detB, 1.6)
    env = envelope(cutoff_scan("C2+D2*", p, np.arange(1, 401)))
    got = {n: env.values[n - 1].real for n in ACAUSAL_TAIL}
    for n, want in ACAUSAL_TAIL.items():
        assert got[n] == pytest.approx(want, rel=1e-7)
    assert got[50] > got[100] > got[200]


def test_spacelike_signal_converges():
    p = ScanParams(FIG.cavity, FIG.detA, FIG.detB, 1.6)
    env = envelope(cutoff_scan("C2+D2*", p, np.arange(1, 201))).values.real
    n = FIG.detB.n
    assert env[50 * n - 1] < 0.1 * env[2 * n - 1]


def test_threaded_time_scan_is_deterministic():
    times = np.linspace(0.1, 4, 9)
    a = time_scan("C2+D2*", FIG, times, threads=3)
    b = time_scan("C2+D2*", FIG, times, threads=1)
    assert np.array_equal(a.values, b.values)


def test_position_shift_keeps_decay_rate():
    _, env1, fit1 = lightcone_envelope("C2+D2*", 10, 4, 4.0, 6.0)
    _, env2, fit2 = lightcone_envelope("C2+D2*", 10, 4, 3.0, 5.0)
    assert not np.allclose(env1.values, env2.values)
    assert abs(fit1.slope - fit2.slope) <= 0.15 * abs(fit1.slope)
