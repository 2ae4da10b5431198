"""Fourth-order Fermi-problem coefficients ``A4``, ``B4`` and ``P4``.

Each coefficient is a sum of four-point vacuum functions integrated over
ordered time domains. Wick's theorem turns every four-point function into three
products of two-point functions, each a double sum over modes ``(j, l)`` of
exponentials that factorize per time variable. The time integrals then split
into independent ordered groups (``t1 > t2`` with ``s1 > s2``, or ``s`` with
``t1 > t2 > t3``) and are done exactly by :func:`simplex_integral`.

The full ``(j, l)`` matrix is formed for the largest cutoff; values at every
smaller cutoff are its leading square sub-blocks, so a cutoff scan costs a
single evaluation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, CostGuardError
from .exp_poly import simplex_integral
from .field import CavityConfig, DetectorParams, check_time, mode_amplitude
from .summation import csum, shell_cumsum

log = logging.getLogger(__name__)

REALNESS_TOL = 1e-9
# the mode-pair matrix holds N_C**2 complex values per term
MAX_CUTOFF = 4000
WICK_PAIRINGS = (((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2)))


@dataclass(frozen=True)
class FourPointTerm:
    """One summand ``sign * int exp(i*phase) <phi phi phi phi> (+ H.c.)``.

    ``fields`` lists ``(detector, time variable)`` in operator order, left to
    right. ``phase`` maps a time variable to ``(detector, +-1)``: the lattice
    frequency ``+-n_detector`` multiplying that variable. ``groups`` are the
    ordered integration chains, outermost variable first.
    """

    fields: tuple
    phase: dict
    groups: tuple
    sign: int = 1
    hermitian_conjugate: bool = False


_PAIR_BLOCK = (("t1", "t2"), ("s1", "s2"))
_TRIPLE_BLOCK = (("s",), ("t1", "t2", "t3"))

A4_TERMS = (
    FourPointTerm(
        fields=(("A", "s2"), ("B", "s1"), ("A", "t1"), ("B", "t2")),
        phase={"t2": ("B", 1), "s1": ("B", -1), "t1": ("A", -1), "s2": ("A", 1)},
        groups=_PAIR_BLOCK,
        hermitian_conjugate=True,
    ),
    FourPointTerm(
        fields=(("B", "s2"), ("A", "s1"), ("A", "t1"), ("B", "t2")),
        phase={"t2": ("B", 1), "s2": ("B", -1), "t1": ("A", -1), "s1": ("A", 1)},
        groups=_PAIR_BLOCK,
    ),
    FourPointTerm(
        fields=(("A", "s2"), ("B", "s1"), ("B", "t1"), ("A", "t2")),
        phase={"t1": ("B", 1), "s1": ("B", -1), "t2": ("A", -1), "s2": ("A", 1)},
        groups=_PAIR_BLOCK,
    ),
    FourPointTerm(
        fields=(("B", "s"), ("A", "t1"), ("A", "t2"), ("B", "t3")),
        phase={"t3": ("B", 1), "s": ("B", -1), "t1": ("A", 1), "t2": ("A", -1)},
        groups=_TRIPLE_BLOCK,
        sign=-1,
        hermitian_conjugate=True,
    ),
    FourPointTerm(
        fields=(("B", "s"), ("A", "t1"), ("B", "t2"), ("A", "t3")),
        phase={"t2": ("B", 1), "s": ("B", -1), "t1": ("A", 1), "t3": ("A", -1)},
        groups=_TRIPLE_BLOCK,
        sign=-1,
        hermitian_conjugate=True,
    ),
    FourPointTerm(
        fields=(("B", "s"), ("B", "t1"), ("A", "t2"), ("A", "t3")),
        phase={"t1": ("B", 1), "s": ("B", -1), "t2": ("A", 1), "t3": ("A", -1)},
        groups=_TRIPLE_BLOCK,
        sign=-1,
        hermitian_conjugate=True,
    ),
)

P4_TERMS = (
    FourPointTerm(
        fields=(("B", "s"), ("B", "t1"), ("B", "t2"), ("B", "t3")),
        phase={"t1": ("B", 1), "t2": ("B", -1), "t3": ("B", 1), "s": ("B", -1)},
        groups=_TRIPLE_BLOCK,
        sign=-1,
        hermitian_conjugate=True,
    ),
)


@dataclass(frozen=True)
class FourthOrderCoeffs:
    A4: float
    B4: float
    P4: float
    imag_residual: float
    provenance: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class ContractionTriple:
    """The three Wick pairings of a four-point function on a mode grid.

    ``patterns[p]`` is ``(coeff, freqs)``: ``coeff[j-1, l-1]`` is the product of
    the two mode coefficients and ``freqs[v]`` the integer lattice frequency
    carried by the time slot ``v`` (0..3) for that pairing.
    """

    patterns: tuple

    def evaluate(self, L: float, times) -> complex:
        """Four-point value at fixed times ``(tau_1..tau_4)``."""
        total = 0j
        for coeff, freqs in self.patterns:
            phase = sum(freqs[v] * times[v] for v in range(4)) * np.pi / L
            total += csum(coeff * np.exp(1j * phase))
        return total


def wick_four_point(cavity: CavityConfig, positions, n_max: int | None = None) -> ContractionTriple:
    """Wick decomposition of ``<phi(x1,.) phi(x2,.) phi(x3,.) phi(x4,.)>``.

    ``W12 W34 + W13 W24 + W14 W23``; in each pair the left field carries
    ``-j`` and the right field ``+j``.
    """
    N = cavity.N_C if n_max is None else n_max
    j = np.arange(1, N + 1)
    amps = [mode_amplitude(cavity, j, x) for x in positions]
    J, Lm = np.meshgrid(j, j, indexing="ij")
    patterns = []
    for (a, b), (c, d) in WICK_PAIRINGS:
        coeff = np.outer(amps[a] * amps[b], amps[c] * amps[d])
        freqs = [np.zeros_like(J) for _ in range(4)]
        freqs[a] = freqs[a] - J
        freqs[b] = freqs[b] + J
        freqs[c] = freqs[c] - Lm
        freqs[d] = freqs[d] + Lm
        patterns.append((coeff, tuple(freqs)))
    return ContractionTriple(tuple(patterns))


def _term_matrix(term: FourPointTerm, cavity: CavityConfig, dets: dict, T: float) -> np.ndarray:
    """Mode-pair matrix of one :class:`FourPointTerm` (before summation)."""
    positions = [dets[d].x for d, _ in term.fields]
    slots = [v for _, v in term.fields]
    wick = wick_four_point(cavity, positions)
    N = cavity.N_C
    total = np.zeros((N, N), dtype=complex)
    for coeff, slot_freqs in wick.patterns:
        var_freq = {}
        for v, f in zip(slots, slot_freqs):
            var_freq[v] = var_freq.get(v, 0) + f
        for v, (d, s) in term.phase.items():
            var_freq[v] = var_freq[v] + s * dets[d].n
        value = coeff.astype(complex)
        for group in term.groups:
            k = np.stack([var_freq[v] for v in group], axis=-1)
            value = value * simplex_integral(k, T, cavity.L)
        total += value
    total *= term.sign
    if term.hermitian_conjugate:
        total = total + np.conj(total)
    return total


def _validate(cavity, T, *detectors):
    for d in detectors:
        d.validate(cavity)
    return check_time(T)


def coefficient_matrix(terms, cavity: CavityConfig, dets: dict, T: float) -> np.ndarray:
    if cavity.N_C > MAX_CUTOFF:
        raise CostGuardError(f"fourth-order coefficients are limited to N_C <= {MAX_CUTOFF}")
    mat = np.zeros((cavity.N_C, cavity.N_C), dtype=complex)
    for term in terms:
        mat += _term_matrix(term, cavity, dets, T)
    return mat


def _finish(mat: np.ndarray, name: str) -> tuple[float, float]:
    value = csum(mat)
    scale = max(1.0, abs(value.real))
    if abs(value.imag) > REALNESS_TOL * scale:
        raise ArithmeticError(f"{name} has imaginary residual {value.imag:.3e}")
    return value.real, abs(value.imag)


def _negated(det: DetectorParams) -> DetectorParams:
    # a negative gap is only meaningful inside the phase bookkeeping
    return _NegGap(det.x, det.n, det.coupling)


@dataclass(frozen=True)
class _NegGap:
    x: float
    n_abs: int
    coupling: float

    @property
    def n(self) -> int:
        return -self.n_abs

    def validate(self, cavity):
        DetectorParams(self.x, self.n_abs).validate(cavity)


def compute_A4(cavity: CavityConfig, detA: DetectorParams, detB: DetectorParams, T: float,
               *, return_residual: bool = False):
    T = _validate(cavity, T, detA, detB)
    value, resid = _finish(coefficient_matrix(A4_TERMS, cavity, {"A": detA, "B": detB}, T), "A4")
    return (value, resid) if return_residual else value


def compute_B4(cavity: CavityConfig, detA: DetectorParams, detB: DetectorParams, T: float,
               *, return_residual: bool = False):
    """``A4`` with Alice's gap reversed."""
    T = _validate(cavity, T, detA, detB)
    dets = {"A": _negated(detA), "B": detB}
    value, resid = _finish(coefficient_matrix(A4_TERMS, cavity, dets, T), "B4")
    return (value, resid) if return_residual else value


def compute_P4(cavity: CavityConfig, detB: DetectorParams, T: float, *, return_residual: bool = False):
    T = _validate(cavity, T, detB)
    value, resid = _finish(coefficient_matrix(P4_TERMS, cavity, {"B": detB}, T), "P4")
    if value > REALNESS_TOL * max(1.0, abs(value)):
        log.warning("P4 = %.3e is positive", value)
    return (value, resid) if return_residual else value


def compute_fourth_order(cavity: CavityConfig, detA: DetectorParams, detB: DetectorParams,
                         T: float) -> FourthOrderCoeffs:
    A4, ra = compute_A4(cavity, detA, detB, T, return_residual=True)
    B4, rb = compute_B4(cavity, detA, detB, T, return_residual=True)
    P4, rp = compute_P4(cavity, detB, T, return_residual=True)
    prov = {"L": cavity.L, "N_C": cavity.N_C, "T": float(T), "detA": detA, "detB": detB}
    return FourthOrderCoeffs(A4, B4, P4, max(ra, rb, rp), provenance=prov)


def fourth_order_by_cutoff(which: str, cavity: CavityConfig, detA: DetectorParams | None,
                           detB: DetectorParams, T: float) -> np.ndarray:
    """Values of ``A4``/``B4``/``P4`` for every cutoff ``1..cavity.N_C``.

    Complex array; the imaginary parts are the roundoff residuals.
    """
    T = check_time(T)
    if which == "A4":
        mat = coefficient_matrix(A4_TERMS, cavity, {"A": detA, "B": detB}, T)
    elif which == "B4":
        mat = coefficient_matrix(A4_TERMS, cavity, {"A": _negated(detA), "B": detB}, T)
    elif which == "P4":
        mat = coefficient_matrix(P4_TERMS, cavity, {"B": detB}, T)
    else:
        raise ConfigurationError(f"unknown fourth-order coefficient {which!r}")
    return shell_cumsum(mat)
