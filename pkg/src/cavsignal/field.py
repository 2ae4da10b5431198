"""Cavity geometry, detector parameters and the per-mode two-point function.

The field is a massless scalar in a 1D Dirichlet cavity of length ``L`` with
modes ``sin(k_j x)``, ``omega_j = k_j = j*pi/L`` (natural units). The vacuum
Wightman function between two fixed points factorizes per mode::

    <phi(x, t) phi(x', t')> = sum_j c_j exp(-i omega_j t) exp(+i omega_j t'),
    c_j = sin(k_j x) sin(k_j x') / (omega_j L).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class CavityConfig:
    L: float
    N_C: int

    def __post_init__(self):
        if not self.L > 0:
            raise ConfigurationError(f"cavity length must be positive, got {self.L}")
        if int(self.N_C) != self.N_C or self.N_C < 1:
            raise ConfigurationError(f"cutoff N_C must be a positive integer, got {self.N_C}")

    @property
    def omegas(self) -> np.ndarray:
        return np.arange(1, self.N_C + 1) * math.pi / self.L

    def with_cutoff(self, N_C: int) -> "CavityConfig":
        return CavityConfig(self.L, N_C)


@dataclass(frozen=True)
class DetectorParams:
    """Two-level detector at rest, resonant with cavity mode ``n``.

    ``coupling`` is the dimensionless strength lambda. Switching is sharp on
    ``[0, T]``; ``T`` is passed to the coefficient functions, not stored here,
    because both detectors always share the window.
    """

    x: float
    n: int
    coupling: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ConfigurationError(
                f"resonance mode number must be a positive integer, got {self.n}; "
                "off-lattice detector gaps are not supported"
            )
        if self.coupling < 0:
            raise ConfigurationError(f"coupling must be non-negative, got {self.coupling}")

    def gap(self, cavity: CavityConfig) -> float:
        return self.n * math.pi / cavity.L

    def validate(self, cavity: CavityConfig) -> None:
        if not 0 < self.x < cavity.L:
            raise ConfigurationError(
                f"detector position {self.x} must lie strictly inside (0, {cavity.L}); "
                "a detector on a wall does not couple to the field"
            )


def check_time(T: float) -> float:
    T = float(T)
    if not (T >= 0 and math.isfinite(T)):
        raise ConfigurationError(f"switching time must be finite and >= 0, got {T}")
    return T


def mode_amplitude(cavity: CavityConfig, j, x: float):
    """``sin(j pi x / L) / sqrt(omega_j L)`` for mode ``j`` (scalar or array)."""
    j_arr = np.asarray(j)
    if np.any(j_arr < 1) or np.any(j_arr > cavity.N_C) or np.any(j_arr != np.floor(j_arr)):
        raise ConfigurationError(f"mode index outside 1..{cavity.N_C}: {j}")
    if not 0 <= x <= cavity.L:
        raise ConfigurationError(f"position {x} outside [0, {cavity.L}]")
    k = j_arr * math.pi / cavity.L
    out = np.sin(k * x) / np.sqrt(k * cavity.L)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TwoPointExpansion:
    """Per-mode factorized ``<phi(x, t) phi(x', t')>``.

    ``coeffs[j-1]`` multiplies ``exp(-i omega_j t) exp(+i omega_j t')``; the
    lattice index of the first time variable is ``-j`` and of the second ``+j``.
    """

    cavity: CavityConfig
    x: float
    x_prime: float
    coeffs: np.ndarray

    @property
    def modes(self) -> np.ndarray:
        return np.arange(1, len(self.coeffs) + 1)

    @property
    def freq_first(self) -> np.ndarray:
        return -self.modes

    @property
    def freq_second(self) -> np.ndarray:
        return self.modes

    def evaluate(self, t, t_prime):
        """Sum the expansion at times ``(t, t')`` (broadcasting)."""
        t = np.asarray(t, dtype=float)[..., None]
        tp = np.asarray(t_prime, dtype=float)[..., None]
        w = self.cavity.omegas
        vals = np.sum(self.coeffs * np.exp(-1j * w * (t - tp)), axis=-1)
        return complex(vals) if vals.ndim == 0 else vals

    def commutator(self, t, t_prime):
        """``<[phi(x, t), phi(x', t')]>``; purely imaginary."""
        t = np.asarray(t, dtype=float)[..., None]
        tp = np.asarray(t_prime, dtype=float)[..., None]
        w = self.cavity.omegas
        vals = -2j * np.asarray(np.sum(self.coeffs * np.sin(w * (t - tp)), axis=-1))
        return complex(vals) if vals.ndim == 0 else vals


def wightman(cavity: CavityConfig, x: float, x_prime: float) -> TwoPointExpansion:
    j = np.arange(1, cavity.N_C + 1)
    coeffs = mode_amplitude(cavity, j, x) * mode_amplitude(cavity, j, x_prime)
    return TwoPointExpansion(cavity, float(x), float(x_prime), np.asarray(coeffs, dtype=float))
