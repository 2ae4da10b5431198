"""Second-order channel coefficients for sharp switching on ``[0, T]``.

Noise terms ``P2, Q2, R2, S2`` depend on Bob's detector only; signalling terms
``C2, D2`` involve the field commutator between the two worldlines. The
remaining second-order constants follow from ``G2 = -C2``, ``H2 = -D2``,
``I2 = D2``, ``J2 = C2``; :func:`raw_second_order` recomputes all ten from the
operator-level assembly of the second Dyson order, independently of those
relations and of the closed forms below.

Every time integral reduces, mode by mode, to an iterated integral of pure
exponentials on the lattice ``k*pi/L`` and is evaluated exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .exp_poly import ExpPoly, iterated_integral, simplex_integral
from .field import CavityConfig, DetectorParams, check_time, mode_amplitude
from .summation import compensated_cumsum, csum

NOISE_KEYS = ("P2", "Q2", "R2", "S2")
SIGNAL_KEYS = ("C2", "D2", "G2", "H2", "I2", "J2")


@dataclass(frozen=True)
class SecondOrderCoeffs:
    P2: float
    Q2: float
    R2: complex
    S2: complex
    C2: complex
    D2: complex
    G2: complex
    H2: complex
    I2: complex
    J2: complex
    provenance: dict = field(default_factory=dict, compare=False)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in NOISE_KEYS + SIGNAL_KEYS}


def _i1(k, T, L):
    k = np.asarray(k)
    return simplex_integral(k[..., None], T, L)


def _i2(k1, k2, T, L):
    return simplex_integral(np.stack(np.broadcast_arrays(k1, k2), axis=-1), T, L)


def _validate(cavity, T, *detectors):
    for d in detectors:
        d.validate(cavity)
    return check_time(T)


def noise_terms_per_mode(cavity: CavityConfig, detB: DetectorParams, T: float) -> dict[str, np.ndarray]:
    """Per-mode contributions to ``P2, Q2, R2, S2`` (index ``j-1``)."""
    T = _validate(cavity, T, detB)
    L, n = cavity.L, detB.n
    j = np.arange(1, cavity.N_C + 1)
    weight = mode_amplitude(cavity, j, detB.x) ** 2
    p = weight * np.abs(_i1(n + j, T, L)) ** 2
    q = -weight * np.abs(_i1(j - n, T, L)) ** 2
    r = -weight * (_i2(n - j, j - n, T, L) + _i2(n + j, -n - j, T, L))
    s = weight * _i1(j - n, T, L) * _i1(-n - j, T, L)
    return {"P2": p, "Q2": q, "R2": r, "S2": s}


def signal_terms_per_mode(
    cavity: CavityConfig, detA: DetectorParams, detB: DetectorParams, T: float
) -> dict[str, np.ndarray]:
    """Per-mode contributions to ``C2`` and ``D2``.

    The commutator ``[phi(x_A, t2), phi(x_B, t1)]`` contributes
    ``c_j (e^{i w (t1 - t2)} - e^{-i w (t1 - t2)})`` per mode, so each mode needs
    two ordered double integrals.
    """
    T = _validate(cavity, T, detA, detB)
    L, nA, nB = cavity.L, detA.n, detB.n
    j = np.arange(1, cavity.N_C + 1)
    c = mode_amplitude(cavity, j, detA.x) * mode_amplitude(cavity, j, detB.x)
    C = c * (_i2(nB + j, -nA - j, T, L) - _i2(nB - j, -nA + j, T, L))
    D = c * (_i2(-nB - j, -nA + j, T, L) - _i2(-nB + j, -nA - j, T, L))
    return {"C2": C, "D2": D}


def compute_noise(cavity: CavityConfig, detB: DetectorParams, T: float) -> tuple[float, float, complex, complex]:
    per_mode = noise_terms_per_mode(cavity, detB, T)
    P2 = csum(per_mode["P2"]).real
    Q2 = csum(per_mode["Q2"]).real
    return P2, Q2, csum(per_mode["R2"]), csum(per_mode["S2"])


def compute_signal(cavity: CavityConfig, detA: DetectorParams, detB: DetectorParams, T: float):
    """``(C2, D2, G2, H2, I2, J2)`` with the last four from the closing relations."""
    per_mode = signal_terms_per_mode(cavity, detA, detB, T)
    C2 = csum(per_mode["C2"])
    D2 = csum(per_mode["D2"])
    return C2, D2, -C2, -D2, D2, C2


def compute_second_order(
    cavity: CavityConfig, detA: DetectorParams, detB: DetectorParams, T: float
) -> SecondOrderCoeffs:
    P2, Q2, R2, S2 = compute_noise(cavity, detB, T)
    C2, D2, G2, H2, I2, J2 = compute_signal(cavity, detA, detB, T)
    prov = {"L": cavity.L, "N_C": cavity.N_C, "T": float(T), "detA": detA, "detB": detB}
    return SecondOrderCoeffs(P2, Q2, R2, S2, C2, D2, G2, H2, I2, J2, provenance=prov)


def P2_of_T(cavity: CavityConfig, detB: DetectorParams, times) -> np.ndarray:
    """``P2`` on a grid of switching times (vectorised over ``T``)."""
    detB.validate(cavity)
    j = np.arange(1, cavity.N_C + 1)
    weight = mode_amplitude(cavity, j, detB.x) ** 2
    w = (detB.n + j) * np.pi / cavity.L
    times = np.asarray(times, dtype=float)
    # |int_0^T e^{iwt}|^2 = 4 sin^2(wT/2) / w^2
    mags = 4.0 * np.sin(np.outer(times, w) / 2.0) ** 2 / w**2
    return np.array([csum(row).real for row in mags * weight])


def signal_by_cutoff(cavity: CavityConfig, detA: DetectorParams, detB: DetectorParams, T: float):
    """``C2`` and ``D2`` for every cutoff ``1..cavity.N_C`` in one pass."""
    per_mode = signal_terms_per_mode(cavity, detA, detB, T)
    return compensated_cumsum(per_mode["C2"]), compensated_cumsum(per_mode["D2"])


# independent operator-level assembly

_SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |e><g|, basis (e, g)
_SIGMA_MINUS = _SIGMA_PLUS.T.copy()
_I2x2 = np.eye(2, dtype=complex)


def _monopole_pieces(label: str, n: int):
    """``mu(t)`` on the A (x) B space as ``[(matrix, lattice freq), ...]``."""
    if label == "A":
        ops = (np.kron(_SIGMA_PLUS, _I2x2), np.kron(_SIGMA_MINUS, _I2x2))
    else:
        ops = (np.kron(_I2x2, _SIGMA_PLUS), np.kron(_I2x2, _SIGMA_MINUS))
    return [(ops[0], n), (ops[1], -n)]


def _partial_trace_A(m4: np.ndarray) -> np.ndarray:
    return np.einsum("aiaj->ij", m4.reshape(2, 2, 2, 2))


def raw_second_order(
    cavity: CavityConfig,
    detA: DetectorParams,
    detB: DetectorParams,
    T: float,
    rhoA: np.ndarray,
    rhoB: np.ndarray,
) -> dict[tuple[str, str], np.ndarray]:
    """Second-order correction to Bob's state, split by detector pair.

    Builds ``Tr_F rho^(2)`` from ``-U2 rho0 - rho0 U2^dag + U1 rho0 U1^dag`` with
    the monopole operators kept as matrices and every time integral done by the
    symbolic :class:`ExpPoly` engine, then traces out Alice. The input matrices
    may be arbitrary (the map is linear), which is how single coefficients are
    isolated. Keys are ``("A","A")``, ``("A","B")``, ``("B","A")``, ``("B","B")``
    for the detectors acting at the two vertices; couplings are set to one.
    """
    T = _validate(cavity, T, detA, detB)
    L = cavity.L
    dets = {"A": detA, "B": detB}
    rho = np.kron(np.asarray(rhoA, dtype=complex), np.asarray(rhoB, dtype=complex))
    j = np.arange(1, cavity.N_C + 1)
    amp = {k: mode_amplitude(cavity, j, d.x) for k, d in dets.items()}
    cache: dict = {}

    def ordered(k1, k2):
        key = ("o", k1, k2)
        if key not in cache:
            cache[key] = iterated_integral([ExpPoly.exp(k1, L), ExpPoly.exp(k2, L)], T)
        return cache[key]

    def single(k):
        key = ("s", k)
        if key not in cache:
            cache[key] = iterated_integral([ExpPoly.exp(k, L)], T)
        return cache[key]

    out = {}
    for D1, D2 in itertools.product("AB", repeat=2):
        acc = np.zeros((4, 4), dtype=complex)
        c = amp[D1] * amp[D2]
        for (m1, f1), (m2, f2) in itertools.product(
            _monopole_pieces(D1, dets[D1].n), _monopole_pieces(D2, dets[D2].n)
        ):
            for jj, cj in zip(j, c):
                if cj == 0:
                    continue
                # -U2 rho0: mu_D1(t1) mu_D2(t2) W_{D1 D2}(t1, t2), t1 > t2
                acc -= cj * ordered(f1 - jj, f2 + jj) * (m1 @ m2 @ rho)
                # -rho0 U2^dag: mu_D1(t2) mu_D2(t1) W_{D1 D2}(t2, t1), t1 > t2
                acc -= cj * ordered(f2 + jj, f1 - jj) * (rho @ m1 @ m2)
                # +U1 rho0 U1^dag: mu_D1(t1) rho mu_D2(t2) W_{D2 D1}(t2, t1), full square
                acc += cj * single(f1 + jj) * single(f2 - jj) * (m1 @ rho @ m2)
        out[(D1, D2)] = _partial_trace_A(acc)
    return out


def _unit(i: int, k: int) -> np.ndarray:
    m = np.zeros((2, 2), dtype=complex)
    m[i, k] = 1.0
    return m


def raw_second_order_coefficients(
    cavity: CavityConfig, detA: DetectorParams, detB: DetectorParams, T: float
) -> dict[str, complex]:
    """All ten second-order constants read off the operator-level assembly.

    Uses unit (non-physical) input matrices in the basis ``(e, g)``: e.g. Alice
    ``|e><g|`` selects the coefficient of ``gamma`` and Bob ``|g><g|`` the
    coefficient of ``kappa``.
    """
    E_ee, E_eg, E_ge, E_gg = _unit(0, 0), _unit(0, 1), _unit(1, 0), _unit(1, 1)

    def noise(rhoB):
        # only the (B, B) vertices carry lambda_B^2; trace of rhoA = 1
        return raw_second_order(cavity, detA, detB, T, E_gg, rhoB)[("B", "B")]

    def signal(rhoB):
        parts = raw_second_order(cavity, detA, detB, T, E_eg, rhoB)
        return parts[("A", "B")] + parts[("B", "A")]

    out = {}
    n_gg, n_ee, n_eg = noise(E_gg), noise(E_ee), noise(E_eg)
    out["P2"] = n_gg[0, 0]
    out["Q2"] = n_ee[0, 0]
    out["R2"] = n_eg[0, 1]
    out["S2"] = n_eg[1, 0]
    s_gg, s_ee, s_eg, s_ge = signal(E_gg), signal(E_ee), signal(E_eg), signal(E_ge)
    out["C2"] = s_gg[0, 1]
    out["D2"] = s_gg[1, 0]
    out["G2"] = s_ee[0, 1]
    out["H2"] = s_ee[1, 0]
    out["I2"] = s_eg[0, 0]
    out["J2"] = s_ge[0, 0]
    return out
