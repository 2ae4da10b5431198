"""Direct numerical evaluation of the coefficient integrals.

Every coefficient is integrated as written, as a time integral of products of
field two-point functions, using iterated Gauss-Legendre rules. Ordered
domains ``T > t1 > t2 > ...`` are mapped slice by slice onto the unit cube,
keeping spectral accuracy on the smooth integrands. The analytic engines are
never called; only the two-point function evaluation is shared.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial import legendre

from ..channel4 import A4_TERMS, P4_TERMS, FourPointTerm
from ..errors import ConfigurationError, CostGuardError
from ..field import CavityConfig, DetectorParams, check_time, wightman

MAX_MODES_2D = 10
MAX_MODES_4D = 3
MAX_NODES_4D = 64
SECOND_ORDER = ("P2", "Q2", "R2", "S2", "C2", "D2")
FOURTH_ORDER = ("A4", "B4", "P4")
_CHUNK = 1 << 20


def _gauss(n: int, a: float, b):
    """Nodes and weights of an ``n``-point rule on ``[a, b]`` (``b`` may be an array)."""
    x, w = legendre.leggauss(n)
    b = np.asarray(b, dtype=float)[..., None]
    half = (b - a) / 2
    return a + half * (x + 1), half * w


def ordered_grid(T: float, dim: int, nodes: int):
    """Points and weights for ``T > t1 > ... > t_dim > 0``; columns outermost first."""
    pts = np.zeros((1, 0))
    wts = np.ones(1)
    upper = np.full(1, T)
    for _ in range(dim):
        x, w = _gauss(nodes, 0.0, upper)  # (P, nodes)
        pts = np.concatenate([np.repeat(pts, nodes, axis=0), x.reshape(-1, 1)], axis=1)
        wts = (wts[:, None] * w).ravel()
        upper = x.ravel()
    return pts, wts


def _product_chunks(grid_a, grid_b):
    """Tensor product of two grids, yielded in blocks of about ``_CHUNK`` points."""
    (pa, wa), (pb, wb) = grid_a, grid_b
    rows = max(1, _CHUNK // len(wb))
    for start in range(0, len(wa), rows):
        qa, va = pa[start:start + rows], wa[start:start + rows]
        pts = np.concatenate([np.repeat(qa, len(pb), axis=0), np.tile(pb, (len(qa), 1))], axis=1)
        yield pts, np.repeat(va, len(wb)) * np.tile(wb, len(qa))


def _check(which, cavity, nodes):
    if which in SECOND_ORDER:
        if cavity.N_C > MAX_MODES_2D:
            raise CostGuardError(f"2D quadrature is limited to N_C <= {MAX_MODES_2D}")
    elif which in FOURTH_ORDER:
        if cavity.N_C > MAX_MODES_4D or nodes > MAX_NODES_4D:
            raise CostGuardError(
                f"4D quadrature is limited to N_C <= {MAX_MODES_4D} and {MAX_NODES_4D} nodes per dimension"
            )
    else:
        raise ConfigurationError(f"unknown coefficient {which!r}")


def _second_order(which, cavity, detA, detB, T, nodes):
    WB = wightman(cavity, detB.x, detB.x)
    oB = detB.gap(cavity)
    if which in ("P2", "Q2", "S2"):
        x, w = _gauss(nodes, 0.0, T)
        t, s = np.meshgrid(x, x, indexing="ij")
        weight = np.outer(w, w)
        Wst = WB.evaluate(s, t)
        phase = {"P2": oB * (t - s), "Q2": -oB * (t - s), "S2": -oB * (t + s)}[which]
        sign = -1.0 if which == "Q2" else 1.0
        return sign * np.sum(weight * np.exp(1j * phase) * Wst)
    pts, wts = ordered_grid(T, 2, nodes)
    t1, t2 = pts[:, 0], pts[:, 1]
    if which == "R2":
        f = np.exp(1j * oB * (t1 - t2)) * (WB.evaluate(t1, t2) + WB.evaluate(t2, t1))
        return -np.sum(wts * f)
    oA = detA.gap(cavity)
    WAB = wightman(cavity, detA.x, detB.x)
    WBA = wightman(cavity, detB.x, detA.x)
    if which == "C2":
        # [phi(x_A, t2), phi(x_B, t1)]
        f = np.exp(1j * (oB * t1 - oA * t2)) * (WAB.evaluate(t2, t1) - WBA.evaluate(t1, t2))
    else:
        # [phi(x_B, t1), phi(x_A, t2)]
        f = np.exp(-1j * (oB * t1 + oA * t2)) * (WBA.evaluate(t1, t2) - WAB.evaluate(t2, t1))
    return np.sum(wts * f)


def four_point(cavity: CavityConfig, fields, times) -> np.ndarray:
    """Vacuum ``<phi(x1,t1) phi(x2,t2) phi(x3,t3) phi(x4,t4)>`` by Wick pairing."""

    def w(a, b):
        return wightman(cavity, fields[a], fields[b]).evaluate(times[a], times[b])

    return w(0, 1) * w(2, 3) + w(0, 2) * w(1, 3) + w(0, 3) * w(1, 2)


def _term_value(term: FourPointTerm, cavity, dets, grids):
    names = [v for group in term.groups for v in group]
    col = {v: i for i, v in enumerate(names)}
    positions = [dets[d].x for d, _ in term.fields]
    total = 0j
    for p, w in _product_chunks(*grids):
        phase = sum(s * dets[d].n * np.pi / cavity.L * p[:, col[v]] for v, (d, s) in term.phase.items())
        times = [p[:, col[v]] for _, v in term.fields]
        total += np.sum(w * np.exp(1j * phase) * four_point(cavity, positions, times))
    total *= term.sign
    return 2 * total.real if term.hermitian_conjugate else total


class _Flipped:
    """Detector whose gap enters the phases with the opposite sign."""

    def __init__(self, det):
        self.x, self.n = det.x, -det.n


def _fourth_order(which, cavity, detA, detB, T, nodes):
    terms = P4_TERMS if which == "P4" else A4_TERMS
    dets = {"A": _Flipped(detA) if which == "B4" else detA, "B": detB}
    total = 0j
    for term in terms:
        grids = [ordered_grid(T, len(g), nodes) for g in term.groups]
        total += _term_value(term, cavity, dets, grids)
    return total


def quad_coefficient(which: str, cavity: CavityConfig, detA: DetectorParams | None, detB: DetectorParams,
                     T: float, nodes_per_dim: int = 32) -> complex:
    """Coefficient ``which`` by iterated Gauss-Legendre quadrature.

    ``detA`` is ignored for the single-detector coefficients. Raises
    :class:`CostGuardError` above the size limits.
    """
    _check(which, cavity, nodes_per_dim)
    T = check_time(T)
    detB.validate(cavity)
    if detA is not None:
        detA.validate(cavity)
    if T == 0:
        return 0j
    if which in SECOND_ORDER:
        return complex(_second_order(which, cavity, detA, detB, T, nodes_per_dim))
    return complex(_fourth_order(which, cavity, detA, detB, T, nodes_per_dim))
