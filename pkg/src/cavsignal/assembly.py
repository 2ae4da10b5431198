"""Bob's output state and the signalling observables.

Matrices are written in the basis ``(|e>, |g>)``: Alice's input is
``[[theta, gamma], [gamma*, beta]]`` and Bob's ``[[phi, delta], [delta*, kappa]]``.
At second order the output is, for arbitrary inputs::

    rho_B + lam_B^2 [[kappa P2 + phi Q2, delta R2 + delta* S2*], [..., -(...)]]
          + lam_A lam_B (gamma M + H.c.),
    M = [[delta D2 + delta* C2, (kappa - phi) C2], [(kappa - phi) D2, -(...)]]

Fourth-order terms are only known for Bob starting in ``|g>``; there they add
``lam_B^4 P4 + lam_A^2 lam_B^2 (theta A4 + beta B4)`` to the excited population.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .channel2 import SecondOrderCoeffs
from .channel4 import FourthOrderCoeffs
from .errors import ConfigurationError, UnsupportedConfiguration

log = logging.getLogger(__name__)

TRACE_TOL = 1e-14
PSD_WARN = -1e-6
PERTURBATIVE_RATIO = 0.1


@dataclass(frozen=True)
class DensityMatrix2:
    """Two-level density matrix; ``excited`` is the ``|e><e|`` weight."""

    excited: float
    coherence: complex
    ground_pop: float

    @classmethod
    def from_matrix(cls, m, *, check: bool = True) -> "DensityMatrix2":
        m = np.asarray(m, dtype=complex)
        if m.shape != (2, 2):
            raise ConfigurationError(f"expected a 2x2 matrix, got shape {m.shape}")
        if abs(m[0, 1] - np.conj(m[1, 0])) > 1e-12 or abs(m[0, 0].imag) > 1e-12 or abs(m[1, 1].imag) > 1e-12:
            raise ConfigurationError("density matrix must be Hermitian")
        out = cls(float(m[0, 0].real), complex(m[0, 1]), float(m[1, 1].real))
        if check:
            out.validate()
        return out

    @classmethod
    def ground(cls) -> "DensityMatrix2":
        return cls(0.0, 0j, 1.0)

    @classmethod
    def excited_state(cls) -> "DensityMatrix2":
        return cls(1.0, 0j, 0.0)

    @classmethod
    def plus(cls) -> "DensityMatrix2":
        return cls(0.5, 0.5 + 0j, 0.5)

    @classmethod
    def minus(cls) -> "DensityMatrix2":
        return cls(0.5, -0.5 + 0j, 0.5)

    def validate(self) -> None:
        if abs(self.trace - 1.0) > TRACE_TOL:
            raise ConfigurationError(f"trace must be 1, got {self.trace!r}")
        if self.excited < 0 or self.ground_pop < 0 or abs(self.coherence) ** 2 > self.excited * self.ground_pop + 1e-15:
            raise ConfigurationError("density matrix is not positive semidefinite")

    @property
    def trace(self) -> float:
        return self.excited + self.ground_pop

    @property
    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.excited, self.coherence], [np.conj(self.coherence), self.ground_pop]], dtype=complex
        )

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def is_ground(self) -> bool:
        return self.excited == 0 and self.coherence == 0 and self.ground_pop == 1


@dataclass(frozen=True)
class ChannelCoefficients:
    second: SecondOrderCoeffs
    lam_A: float
    lam_B: float
    fourth: FourthOrderCoeffs | None = None

    def __post_init__(self):
        if self.lam_A < 0 or self.lam_B < 0:
            raise ConfigurationError("couplings must be non-negative")

    @property
    def T(self) -> float:
        return float(self.second.provenance.get("T", 0.0))

    @property
    def C(self) -> complex:
        return self.lam_A * self.lam_B * self.second.C2

    @property
    def D(self) -> complex:
        return self.lam_A * self.lam_B * self.second.D2

    @property
    def P(self) -> float:
        p = self.lam_B**2 * self.second.P2
        if self.fourth is not None:
            p += self.lam_B**4 * self.fourth.P4
        return p


@dataclass(frozen=True)
class Probability:
    """Raw perturbative probability; ``in_range`` flags truncation artifacts."""

    value: float

    @property
    def in_range(self) -> bool:
        return 0.0 <= self.value <= 1.0

    def __float__(self) -> float:
        return self.value


def _as_dm(rho) -> DensityMatrix2:
    if isinstance(rho, DensityMatrix2):
        rho.validate()
        return rho
    return DensityMatrix2.from_matrix(rho)


def _check_regime(coeffs: ChannelCoefficients) -> None:
    if coeffs.fourth is None:
        return
    signal = coeffs.lam_A**2 * coeffs.lam_B**2 * max(abs(coeffs.fourth.A4), abs(coeffs.fourth.B4))
    noise = coeffs.lam_B**2 * abs(coeffs.second.P2)
    if signal > PERTURBATIVE_RATIO * noise and signal > 0:
        log.warning(
            "fourth-order signal %.3e exceeds %.0f%% of the second-order noise %.3e; "
            "couplings may be outside the perturbative regime",
            signal, 100 * PERTURBATIVE_RATIO, noise,
        )


def apply_channel(rhoA, rhoB, coeffs: ChannelCoefficients, *, use_fourth: bool | None = None) -> DensityMatrix2:
    """Bob's state after the interaction.

    Fourth-order terms are added when ``coeffs.fourth`` is present (or when
    ``use_fourth`` is true), which requires Bob to start in ``|g>``.
    """
    a, b = _as_dm(rhoA), _as_dm(rhoB)
    s = coeffs.second
    use_fourth = coeffs.fourth is not None if use_fourth is None else use_fourth
    if use_fourth:
        if coeffs.fourth is None:
            raise UnsupportedConfiguration("fourth-order terms requested but not computed")
        if not b.is_ground():
            raise UnsupportedConfiguration("fourth-order assembly is only defined for Bob starting in |g>")
    theta, gamma, beta = a.excited, a.coherence, a.ground_pop
    phi, delta, kappa = b.excited, b.coherence, b.ground_pop
    lb2 = coeffs.lam_B**2
    lab = coeffs.lam_A * coeffs.lam_B

    diag = lb2 * (kappa * s.P2 + phi * s.Q2)
    off = lb2 * (delta * s.R2 + np.conj(delta) * np.conj(s.S2))
    m_diag = delta * s.D2 + np.conj(delta) * s.C2
    m_off_upper = (kappa - phi) * s.C2  # <e| M |g>
    m_off_lower = (kappa - phi) * s.D2  # <g| M |e>
    # gamma M + (gamma M)^dag
    diag += lab * 2.0 * (gamma * m_diag).real
    off += lab * (gamma * m_off_upper + np.conj(gamma * m_off_lower))
    if use_fourth:
        f = coeffs.fourth
        diag += coeffs.lam_B**4 * f.P4 + coeffs.lam_A**2 * lb2 * (theta * f.A4 + beta * f.B4)
        _check_regime(coeffs)
    out = DensityMatrix2(phi + float(diag), complex(delta + off), kappa - float(diag))
    lowest = out.min_eigenvalue()
    if lowest < PSD_WARN:
        log.warning("output state has a negative eigenvalue %.3e (perturbative truncation)", lowest)
    return out


def fermi_probability(which: str, coeffs: ChannelCoefficients) -> Probability:
    """Bob's excitation probability for Alice in ``|e>`` (``P + A``) or ``|g>`` (``P + B``)."""
    if coeffs.fourth is None:
        raise UnsupportedConfiguration("Fermi probabilities need the fourth-order coefficients")
    signal = coeffs.lam_A**2 * coeffs.lam_B**2
    if which == "excited":
        value = coeffs.P + signal * coeffs.fourth.A4
    elif which == "ground":
        value = coeffs.P + signal * coeffs.fourth.B4
    else:
        raise ConfigurationError(f"which must be 'excited' or 'ground', got {which!r}")
    _check_regime(coeffs)
    p = Probability(float(value))
    if not p.in_range:
        log.warning("Fermi probability %.3e lies outside [0, 1]", p.value)
    return p


def plus_probability_at(rhoA, coeffs: ChannelCoefficients, t: float) -> float:
    """Probability of finding Bob (started in ``|g>``) in ``|+>`` at time ``t >= T``.

    ``1/2 + Re((gamma C + gamma* D*) e^{-i Omega_B t})``; the noise and the
    diagonal signalling terms drop out.
    """
    a = _as_dm(rhoA)
    if t < coeffs.T:
        raise ConfigurationError(f"measurement time {t} precedes the end of the interaction {coeffs.T}")
    det_b = coeffs.second.provenance.get("detB")
    L = coeffs.second.provenance.get("L")
    omega = det_b.n * math.pi / L
    g = a.coherence
    amp = g * coeffs.C + np.conj(g) * np.conj(coeffs.D)
    return 0.5 + float((amp * np.exp(-1j * omega * t)).real)


def optimal_pm_probability(sign: str, coeffs: ChannelCoefficients) -> float:
    """``p(B=+ | A=+-)`` at the best measurement time.

    Alice's ``|+->`` states have ``gamma = +-1/2``, so the optimum is
    ``1/2 +- |C + D*| / 2``.
    """
    if sign not in ("+", "-"):
        raise ConfigurationError(f"sign must be '+' or '-', got {sign!r}")
    half = 0.5 * abs(coeffs.C + np.conj(coeffs.D))
    return 0.5 + half if sign == "+" else 0.5 - half
