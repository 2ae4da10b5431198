"""Cutoff and switching-time scans, envelopes and power-law fits.

Cutoff scans use the single-pass paths of the engines: second-order values
are running sums over modes and fourth-order values are nested square blocks
of one mode-pair matrix, so a scan to ``N_max`` costs one evaluation at
``N_max``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import channel2, channel4
from .errors import ConfigurationError
from .field import CavityConfig, DetectorParams, check_time
from .summation import compensated_cumsum

SECOND_ORDER = ("P2", "Q2", "R2", "S2", "C2", "D2")
FOURTH_ORDER = ("A4", "B4", "P4")
SELECTORS = SECOND_ORDER + ("C2+D2*",) + FOURTH_ORDER


@dataclass(frozen=True)
class ScanParams:
    """Fixed parameters of a scan; ``cavity.N_C`` is the cutoff for time scans."""

    cavity: CavityConfig
    detA: DetectorParams
    detB: DetectorParams
    T: float = 0.0

    def snapshot(self) -> dict:
        return {
            "L": self.cavity.L,
            "N_C": self.cavity.N_C,
            "x_A": self.detA.x,
            "n_A": self.detA.n,
            "x_B": self.detB.x,
            "n_B": self.detB.n,
            "T": self.T,
        }


@dataclass(frozen=True)
class SweepSeries:
    axis_label: str
    axis: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        if axis.ndim != 1 or values.shape != axis.shape:
            raise ConfigurationError("axis and values must be 1D arrays of equal length")
        if np.any(np.diff(axis) <= 0):
            raise ConfigurationError("axis must be strictly increasing")
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.axis.size

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)


@dataclass(frozen=True)
class PowerLawFit:
    slope: float
    intercept: float
    r_squared: float
    window: tuple[float, float]


def _check_selector(selector):
    if callable(selector):
        return
    if selector not in SELECTORS:
        raise ConfigurationError(f"unknown coefficient {selector!r}; choose from {', '.join(SELECTORS)}")


def evaluate(selector, params: ScanParams, T: float | None = None) -> complex:
    """One coefficient value at ``params`` (``T`` overrides ``params.T``)."""
    _check_selector(selector)
    T = params.T if T is None else T
    cav, A, B = params.cavity, params.detA, params.detB
    if callable(selector):
        return complex(selector(cav, A, B, T))
    if selector in ("P2", "Q2", "R2", "S2"):
        return complex(dict(zip(("P2", "Q2", "R2", "S2"), channel2.compute_noise(cav, B, T)))[selector])
    if selector in ("C2", "D2", "C2+D2*"):
        C, D = channel2.compute_signal(cav, A, B, T)[:2]
        return {"C2": C, "D2": D, "C2+D2*": C + np.conj(D)}[selector]
    if selector == "A4":
        return complex(channel4.compute_A4(cav, A, B, T))
    if selector == "B4":
        return complex(channel4.compute_B4(cav, A, B, T))
    return complex(channel4.compute_P4(cav, B, T))


def _all_cutoffs(selector, params: ScanParams, n_max: int) -> np.ndarray:
    """Values for every cutoff ``1..n_max``."""
    cav = params.cavity.with_cutoff(n_max)
    A, B, T = params.detA, params.detB, check_time(params.T)
    B.validate(cav)
    if selector in ("P2", "Q2", "R2", "S2"):
        return compensated_cumsum(channel2.noise_terms_per_mode(cav, B, T)[selector])
    if selector in ("C2", "D2", "C2+D2*"):
        C, D = channel2.signal_by_cutoff(cav, A, B, T)
        return {"C2": C, "D2": D, "C2+D2*": C + np.conj(D)}[selector]
    A.validate(cav)
    return channel4.fourth_order_by_cutoff(selector, cav, A, B, T)


def cutoff_scan(selector, params: ScanParams, cutoffs) -> SweepSeries:
    """Coefficient at each cutoff in ``cutoffs`` with everything else fixed."""
    _check_selector(selector)
    cutoffs = np.asarray(cutoffs)
    if cutoffs.ndim != 1 or cutoffs.size == 0:
        raise ConfigurationError("cutoffs must be a non-empty list")
    if np.any(cutoffs != np.floor(cutoffs)) or np.any(cutoffs < 1):
        raise ConfigurationError("cutoffs must be integers >= 1")
    if np.any(np.diff(cutoffs) <= 0):
        raise ConfigurationError("cutoffs must be strictly increasing")
    cutoffs = cutoffs.astype(int)
    if callable(selector):
        values = [evaluate(selector, ScanParams(params.cavity.with_cutoff(int(n)), params.detA, params.detB,
                                                params.T)) for n in cutoffs]
    else:
        values = _all_cutoffs(selector, params, int(cutoffs[-1]))[cutoffs - 1]
    meta = {**params.snapshot(), "coefficient": _name(selector), "scan": "cutoff"}
    return SweepSeries("N_C", cutoffs, values, meta)


def time_scan(selector, params: ScanParams, times, threads: int = 1) -> SweepSeries:
    """Coefficient against the switching time at the fixed cutoff ``params.cavity.N_C``."""
    _check_selector(selector)
    times = [check_time(t) for t in np.atleast_1d(np.asarray(times, dtype=float))]
    if not times:
        raise ConfigurationError("time grid is empty")

    def one(t):
        return evaluate(selector, params, T=t)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(one, times))  # map keeps input order
    else:
        values = [one(t) for t in times]
    meta = {**params.snapshot(), "coefficient": _name(selector), "scan": "time"}
    meta.pop("T")
    return SweepSeries("T", np.array(times), values, meta)


def _name(selector) -> str:
    return selector if isinstance(selector, str) else getattr(selector, "__name__", "custom")


def envelope(series: SweepSeries) -> SweepSeries:
    """``env(N) = max_{N' >= N} |value(N')|`` over the computed samples."""
    if len(series) == 0:
        raise ConfigurationError("cannot take the envelope of an empty series")
    env = np.maximum.accumulate(series.magnitude[::-1])[::-1]
    return SweepSeries(series.axis_label, series.axis, env, {**series.meta, "envelope": True})


def normalize_series(series: SweepSeries, reference: complex) -> SweepSeries:
    scale = abs(reference)
    if scale == 0 or not math.isfinite(scale):
        raise ConfigurationError("normalization reference must be finite and non-zero")
    return SweepSeries(series.axis_label, series.axis, series.values / scale,
                       {**series.meta, "reference": scale})


def fit_power_law(series: SweepSeries, window=None) -> PowerLawFit:
    """Least squares line through ``(log axis, log value)`` inside ``window``.

    Values must be real and positive there (an envelope or a magnitude).
    """
    lo, hi = (series.axis[0], series.axis[-1]) if window is None else window
    if lo > hi:
        raise ConfigurationError(f"empty fit window [{lo}, {hi}]")
    mask = (series.axis >= lo) & (series.axis <= hi)
    x, v = series.axis[mask], series.values[mask]
    if x.size < 3:
        raise ConfigurationError(f"power-law fit needs at least 3 samples in [{lo}, {hi}], got {x.size}")
    if np.any(v.imag != 0) or np.any(v.real <= 0) or np.any(x <= 0):
        raise ConfigurationError("power-law fit needs positive real values and a positive axis")
    res = stats.linregress(np.log(x), np.log(v.real))
    r2 = min(1.0, max(0.0, float(res.rvalue) ** 2))
    return PowerLawFit(float(res.slope), float(res.intercept), r2, (float(lo), float(hi)))


# figure pipelines

DEFAULT_REFERENCE_CUTOFF = 100


def lightcone_envelope(selector, L: float, n: int, x_A: float, x_B: float,
                       horizon: int | None = None, reference_cutoff: int = DEFAULT_REFERENCE_CUTOFF,
                       window=None):
    """Envelope of ``|selector|`` at ``T = |x_A - x_B|`` and its power-law tail.

    Cutoffs ``1..horizon`` (default ``100 n``) are computed, normalized by the
    value at ``T = 1.5 |x_A - x_B|`` and cutoff ``reference_cutoff``, and the
    envelope is fitted over ``window`` (default ``[2n, 50n]``). Returns
    ``(raw, normalized envelope, fit)``.
    """
    d = abs(x_A - x_B)
    horizon = 100 * n if horizon is None else horizon
    window = (2 * n, 50 * n) if window is None else window
    A, B = DetectorParams(x_A, n), DetectorParams(x_B, n)
    params = ScanParams(CavityConfig(L, horizon), A, B, d)
    raw = cutoff_scan(selector, params, np.arange(1, horizon + 1))
    ref_params = ScanParams(CavityConfig(L, reference_cutoff), A, B, 1.5 * d)
    reference = evaluate(selector, ref_params)
    env = normalize_series(envelope(raw), reference)
    return raw, env, fit_power_law(env, window)

