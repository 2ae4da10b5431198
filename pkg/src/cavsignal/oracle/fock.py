"""Truncated-Fock verification engine for the full two-detector model.

The composite space is ``A (x) B (x) F`` with detector basis ``(e, g)`` and a
field restricted to ``M`` modes and at most ``cap`` quanta in total. Truncation
by total photon number commutes with the free Hamiltonian, so the truncated
interaction-picture Hamiltonian is exactly ``e^{i H0 t} V e^{-i H0 t}``.

Two routes are offered: a fourth-order commutator-free Magnus integrator of
``dU/dt = -i H_I(t) U`` (with step-halving self-check), and the closed form
``U_I(T) = e^{i H0 T} e^{-i (H0 + V) T}`` available because sharp switching
makes the Schroedinger-picture Hamiltonian constant on ``(0, T)``.
:func:`dyson_orders` builds the individual Dyson terms ``U^(k)`` by composite
Gauss-Legendre quadrature of the nested integrals.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.polynomial import legendre
from scipy.linalg import expm

from ..errors import CostGuardError, OracleFailure
from ..field import CavityConfig, DetectorParams, check_time, mode_amplitude

UNITARITY_TOL = 1e-8
RICHARDSON_TOL = 1e-9
STABILITY_GUARD = 10.0


@dataclass(frozen=True)
class FockBasis:
    modes: int
    cap: int = 2

    def __post_init__(self):
        if not 1 <= self.modes <= 4:
            raise CostGuardError(f"Fock oracle supports 1..4 modes, got {self.modes}")
        if not 0 <= self.cap <= 3:
            raise CostGuardError(f"photon cap must be in 0..3, got {self.cap}")

    @cached_property
    def states(self) -> tuple[tuple[int, ...], ...]:
        occ = [s for s in itertools.product(range(self.cap + 1), repeat=self.modes) if sum(s) <= self.cap]
        return tuple(sorted(occ))

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def composite_dim(self) -> int:
        return 4 * self.size

    def annihilator(self, j: int) -> np.ndarray:
        """``a_j`` (0-based mode index) on the truncated Fock space."""
        index = {s: i for i, s in enumerate(self.states)}
        a = np.zeros((self.size, self.size))
        for col, s in enumerate(self.states):
            if s[j] == 0:
                continue
            t = list(s)
            t[j] -= 1
            a[index[tuple(t)], col] = math.sqrt(s[j])
        return a

    def number_energy(self, omegas) -> np.ndarray:
        return np.array([sum(n * w for n, w in zip(s, omegas)) for s in self.states])


@dataclass(frozen=True)
class EvolutionResult:
    U: np.ndarray
    unitarity_defect: float
    step: float


_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_PE = np.array([[1, 0], [0, 0]], dtype=complex)
_I2 = np.eye(2)


class CavityModel:
    """Matrices of the truncated two-detector model."""

    def __init__(self, L: float, detA: DetectorParams, detB: DetectorParams, basis: FockBasis):
        self.L = float(L)
        self.detA, self.detB, self.basis = detA, detB, basis
        cav = CavityConfig(L, basis.modes)
        detA.validate(cav)
        detB.validate(cav)
        omegas = cav.omegas
        nf = basis.size
        IF = np.eye(nf)
        field_ops = {}
        for label, det in (("A", detA), ("B", detB)):
            phi = np.zeros((nf, nf))
            for j in range(basis.modes):
                a = basis.annihilator(j)
                phi += (a + a.T) * mode_amplitude(cav, j + 1, det.x)
            field_ops[label] = phi
        self.V = detA.coupling * np.kron(np.kron(_SX, _I2), field_ops["A"]) + detB.coupling * np.kron(
            np.kron(_I2, _SX), field_ops["B"]
        )
        eA = np.array([detA.gap(cav), 0.0])
        eB = np.array([detB.gap(cav), 0.0])
        ef = basis.number_energy(omegas)
        self.energies = (eA[:, None, None] + eB[None, :, None] + ef[None, None, :]).ravel()
        self.dim = self.energies.size

    def H_I(self, t: float) -> np.ndarray:
        ph = np.exp(1j * self.energies * t)
        return ph[:, None] * self.V * ph.conj()[None, :]

    def initial_state(self, rhoA, rhoB) -> np.ndarray:
        vac = np.zeros((self.basis.size, self.basis.size))
        vac[0, 0] = 1.0
        return np.kron(np.kron(np.asarray(rhoA, dtype=complex), np.asarray(rhoB, dtype=complex)), vac)

    def bob_state(self, rho: np.ndarray) -> np.ndarray:
        nf = self.basis.size
        r = rho.reshape(2, 2, nf, 2, 2, nf)
        return np.einsum("abfacf->bc", r)


def _magnus4(model: CavityModel, T: float, steps: int) -> np.ndarray:
    h = T / steps
    c1, c2 = 0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6
    U = np.eye(model.dim, dtype=complex)
    for s in range(steps):
        t0 = s * h
        H1 = model.H_I(t0 + c1 * h)
        H2 = model.H_I(t0 + c2 * h)
        omega = -0.5j * h * (H1 + H2) - (math.sqrt(3) / 12) * h * h * (H2 @ H1 - H1 @ H2)
        U = expm(omega) @ U
    return U


def exact_propagator(model: CavityModel, T: float) -> np.ndarray:
    """Interaction-picture ``U(T)`` from the constant Schroedinger Hamiltonian."""
    H = np.diag(model.energies) + model.V
    return np.exp(1j * model.energies * T)[:, None] * expm(-1j * H * T)


def _defect(U: np.ndarray) -> float:
    return float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))))


def propagate(model: CavityModel, T: float, method: str = "magnus4", steps: int | None = None,
              rho0: np.ndarray | None = None) -> EvolutionResult:
    T = check_time(T)
    if np.linalg.norm(model.V, 2) * T > STABILITY_GUARD:
        raise CostGuardError("coupling too strong for the oracle: ||H_I|| T exceeds 10")
    if T == 0:
        return EvolutionResult(np.eye(model.dim, dtype=complex), 0.0, 0.0)
    if method == "exact":
        U = exact_propagator(model, T)
        step = T
    elif method == "magnus4":
        wmax = float(np.max(model.energies) - np.min(model.energies))
        n = steps or max(16, int(math.ceil(4 * wmax * T)))
        probe = rho0 if rho0 is not None else np.eye(model.dim) / model.dim
        U = _magnus4(model, T, n)
        for _ in range(8):
            U2 = _magnus4(model, T, 2 * n)
            a = model.bob_state(U @ probe @ U.conj().T)
            b = model.bob_state(U2 @ probe @ U2.conj().T)
            n *= 2
            U = U2
            if np.max(np.abs(a - b)) < RICHARDSON_TOL:
                break
        else:
            raise OracleFailure("Magnus step halving did not converge")
        step = T / n
    else:
        raise ValueError(f"unknown method {method!r}")
    defect = _defect(U)
    if defect > UNITARITY_TOL:
        raise OracleFailure(f"unitarity defect {defect:.2e}")
    return EvolutionResult(U, defect, step)


def evolve_nonperturbative(rhoA, rhoB, L: float, detA: DetectorParams, detB: DetectorParams, T: float,
                           basis: FockBasis, method: str = "magnus4", steps: int | None = None) -> np.ndarray:
    """Bob's reduced state after the full (non-perturbative) evolution."""
    model = CavityModel(L, detA, detB, basis)
    rho0 = model.initial_state(rhoA, rhoB)
    res = propagate(model, T, method=method, steps=steps, rho0=rho0)
    return model.bob_state(res.U @ rho0 @ res.U.conj().T)


# Dyson orders by composite Gauss-Legendre quadrature

def _spectral_integration(p: int):
    """Nodes, weights and the matrix S with ``(S f)_i = int_{-1}^{x_i} f``."""
    x, w = legendre.leggauss(p)
    V = legendre.legvander(x, p - 1)
    coef = np.linalg.inv(V)  # column j: Legendre coefficients of Lagrange basis l_j
    S = np.empty((p, p))
    for jcol in range(p):
        anti = legendre.legint(coef[:, jcol], lbnd=-1)
        S[:, jcol] = legendre.legval(x, anti)
    return x, w, S


def dyson_orders(model: CavityModel, T: float, order: int, panels: int | None = None, nodes: int = 16):
    """``[U^(0)(T), ..., U^(order)(T)]`` of the Dyson series.

    ``U^(k)(t) = -i int_0^t H_I(s) U^(k-1)(s) ds`` evaluated on panel-wise
    Gauss-Legendre nodes with spectral (Lagrange) cumulative integration.
    """
    T = check_time(T)
    if order > 4:
        raise CostGuardError("Dyson orders above 4 are not supported")
    dim = model.dim
    if T == 0:
        return [np.eye(dim, dtype=complex)] + [np.zeros((dim, dim), dtype=complex)] * order
    wmax = float(np.max(model.energies) - np.min(model.energies))
    K = panels or max(4, int(math.ceil(wmax * T / 2)))
    x, w, S = _spectral_integration(nodes)
    h = T / K
    times = np.concatenate([(k + (x + 1) / 2) * h for k in range(K)])
    H = np.stack([model.H_I(t) for t in times])  # (K*p, d, d)
    prev = np.broadcast_to(np.eye(dim, dtype=complex), H.shape)
    result = [np.eye(dim, dtype=complex)]
    for _ in range(order):
        f = -1j * np.einsum("nij,njk->nik", H, prev)
        cur = np.empty_like(f)
        start = np.zeros((dim, dim), dtype=complex)
        for k in range(K):
            fk = f[k * nodes:(k + 1) * nodes]
            cur[k * nodes:(k + 1) * nodes] = start + (h / 2) * np.einsum("ij,jab->iab", S, fk)
            start = start + (h / 2) * np.einsum("j,jab->ab", w, fk)
        result.append(start)
        prev = cur
    return result


def dyson_density_orders(model: CavityModel, rho0: np.ndarray, T: float, order: int, **kw):
    """``rho_T^(n) = sum_k U^(n-k) rho0 U^(k)^dag`` for ``n = 0..order``."""
    Us = dyson_orders(model, T, order, **kw)
    return [sum(Us[n - k] @ rho0 @ Us[k].conj().T for k in range(n + 1)) for n in range(order + 1)]


def dyson_trace_check(L: float, detA: DetectorParams, detB: DetectorParams, T: float, basis: FockBasis,
                      order: int, rhoA=None, rhoB=None, **kw) -> float:
    """``|Tr rho_T^(order)|``; zero for an exact Dyson expansion."""
    model = CavityModel(L, detA, detB, basis)
    rhoA = np.diag([0.0, 1.0]) if rhoA is None else rhoA
    rhoB = np.diag([0.0, 1.0]) if rhoB is None else rhoB
    rho0 = model.initial_state(rhoA, rhoB)
    rho_n = dyson_density_orders(model, rho0, T, order, **kw)[order]
    return float(abs(np.trace(rho_n)))


def dyson_fermi_coefficients(L: float, detA: DetectorParams, detB: DetectorParams, T: float,
                             basis: FockBasis, **kw) -> dict[str, float]:
    """``P2, P4, A4, B4`` read off the exact fourth Dyson order (``N_C = modes``).

    With diagonal inputs the ``lambda_A^2 lambda_B^2`` part of Bob's excited
    population is isolated by switching Alice's coupling off and subtracting.
    """
    from dataclasses import replace

    ground, excited = np.diag([0.0, 1.0]), np.diag([1.0, 0.0])
    A1, B1 = replace(detA, coupling=1.0), replace(detB, coupling=1.0)
    A0 = replace(detA, coupling=0.0)

    def pop(det_a, rhoA, n):
        model = CavityModel(L, det_a, B1, basis)
        rho0 = model.initial_state(rhoA, ground)
        rho = dyson_density_orders(model, rho0, T, 4, **kw)[n]
        return float(np.real(model.bob_state(rho)[0, 0]))

    P2 = pop(A0, excited, 2)
    P4 = pop(A0, excited, 4)
    A4 = pop(A1, excited, 4) - P4
    B4 = pop(A1, ground, 4) - P4
    return {"P2": P2, "P4": P4, "A4": A4, "B4": B4}
