"""Exact algebra of exponential polynomials on an integer frequency lattice.

An :class:`ExpPoly` is a finite sum ``sum c * t**m * exp(i * k * pi / L * t)``
with integer lattice index ``k``. Products and integrals from zero stay inside
the class, so every nested time integral over a sharp switching window has a
closed form, resonant (``k == 0``) terms included.

:func:`simplex_integral` is the vectorised counterpart used by the fourth-order
engine: it evaluates iterated integrals of pure exponentials over the ordered
simplex ``T > t1 > ... > tn > 0`` for whole arrays of lattice indices at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import ConfigurationError

MAX_POWER = 8
_UNDERFLOW = 1e-300


@dataclass(frozen=True, order=True)
class ExpTerm:
    """Single term ``coeff * t**power * exp(i*freq*pi/L*t)``."""

    freq: int
    power: int
    coeff: complex = 0j


class ExpPoly:
    """Canonical exponential polynomial over the lattice ``k * pi / L``.

    Terms are kept sorted by ``(freq, power)`` with no duplicates and no zero
    coefficients, so equality of two polynomials is equality of term lists.
    """

    __slots__ = ("L", "terms")

    def __init__(self, terms: Iterable[ExpTerm] | Mapping[tuple[int, int], complex], L: float):
        if L <= 0:
            raise ConfigurationError(f"cavity length must be positive, got {L}")
        self.L = float(L)
        if isinstance(terms, Mapping):
            items = terms.items()
        else:
            items = (((t.freq, t.power), t.coeff) for t in terms)
        acc: dict[tuple[int, int], complex] = {}
        for (k, m), c in items:
            k, m = int(k), int(m)
            if m < 0 or m > MAX_POWER:
                raise ConfigurationError(f"power {m} outside [0, {MAX_POWER}]")
            acc[(k, m)] = acc.get((k, m), 0j) + complex(c)
        self.terms = tuple(
            ExpTerm(k, m, c) for (k, m), c in sorted(acc.items()) if abs(c) >= _UNDERFLOW
        )

    # construction helpers

    @classmethod
    def const(cls, c: complex, L: float) -> "ExpPoly":
        return cls({(0, 0): c}, L)

    @classmethod
    def exp(cls, k: int, L: float, coeff: complex = 1.0, power: int = 0) -> "ExpPoly":
        """``coeff * t**power * exp(i k pi t / L)``."""
        return cls({(k, power): coeff}, L)

    @classmethod
    def zero(cls, L: float) -> "ExpPoly":
        return cls({}, L)

    def as_dict(self) -> dict[tuple[int, int], complex]:
        return {(t.freq, t.power): t.coeff for t in self.terms}

    # algebra

    def _check(self, other: "ExpPoly") -> None:
        if self.L != other.L:
            raise ConfigurationError(f"mismatched cavity lengths {self.L} and {other.L}")

    def __add__(self, other: "ExpPoly") -> "ExpPoly":
        if not isinstance(other, ExpPoly):
            return NotImplemented
        self._check(other)
        return ExpPoly(list(self.terms) + list(other.terms), self.L)

    def __neg__(self) -> "ExpPoly":
        return ExpPoly([ExpTerm(t.freq, t.power, -t.coeff) for t in self.terms], self.L)

    def __sub__(self, other: "ExpPoly") -> "ExpPoly":
        return self + (-other)

    def scale(self, alpha: complex) -> "ExpPoly":
        return ExpPoly([ExpTerm(t.freq, t.power, alpha * t.coeff) for t in self.terms], self.L)

    def __mul__(self, other):
        if isinstance(other, ExpPoly):
            return mul(self, other)
        if isinstance(other, (int, float, complex, np.number)):
            return self.scale(complex(other))
        return NotImplemented

    __rmul__ = __mul__

    def conj(self) -> "ExpPoly":
        """Complex conjugate as a function of real ``t``."""
        return ExpPoly([ExpTerm(-t.freq, t.power, t.coeff.conjugate()) for t in self.terms], self.L)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExpPoly):
            return NotImplemented
        return self.L == other.L and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.L, self.terms))

    def __repr__(self) -> str:
        body = " + ".join(f"({t.coeff:.6g})*t^{t.power}*e^(i{t.freq}pi t/L)" for t in self.terms)
        return f"ExpPoly[L={self.L}]({body or '0'})"

    def __call__(self, t):
        return evaluate(self, t)

    def integrate(self) -> "ExpPoly":
        return integrate_from_zero(self)


def mul(p: ExpPoly, q: ExpPoly) -> ExpPoly:
    """Pointwise product; frequencies and powers add."""
    p._check(q)
    acc: dict[tuple[int, int], complex] = {}
    for a in p.terms:
        for b in q.terms:
            key = (a.freq + b.freq, a.power + b.power)
            acc[key] = acc.get(key, 0j) + a.coeff * b.coeff
    return ExpPoly(acc, p.L)


def integrate_from_zero(p: ExpPoly) -> ExpPoly:
    """Return ``q(t) = int_0^t p(s) ds`` in closed form.

    For ``k != 0`` the antiderivative of ``s**m e^{ias}`` is
    ``e^{ias} sum_r (-1)^r m!/(m-r)! s^(m-r) / (ia)^(r+1)``; the lower limit adds
    a constant term at frequency zero.
    """
    acc: dict[tuple[int, int], complex] = {}
    for t in p.terms:
        k, m, c = t.freq, t.power, t.coeff
        if k == 0:
            key = (0, m + 1)
            acc[key] = acc.get(key, 0j) + c / (m + 1)
            continue
        ia = 1j * k * math.pi / p.L
        fact = 1.0
        for r in range(m + 1):
            # fact = m!/(m-r)!
            key = (k, m - r)
            acc[key] = acc.get(key, 0j) + c * (-1) ** r * fact / ia ** (r + 1)
            fact *= m - r
        # F(0) = (-1)^m m! / (ia)^(m+1); subtract it
        acc[(0, 0)] = acc.get((0, 0), 0j) - c * (-1) ** m * math.factorial(m) / ia ** (m + 1)
    return ExpPoly(acc, p.L)


def evaluate(p: ExpPoly, t):
    """Evaluate at scalar or array ``t`` in double precision."""
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape, dtype=complex)
    for term in p.terms:
        out = out + term.coeff * t ** term.power * np.exp(1j * term.freq * math.pi / p.L * t)
    if out.ndim == 0:
        return complex(out)
    return out


def definite(p: ExpPoly, T: float) -> complex:
    """``int_0^T p(s) ds``."""
    return complex(evaluate(integrate_from_zero(p), T))


def iterated_integral(factors: list[ExpPoly], T: float) -> complex:
    """Ordered integral ``int_{T>t1>...>tn>0} f1(t1) ... fn(tn)``.

    ``factors[0]`` depends on the outermost variable.
    """
    if not factors:
        return 1.0 + 0j
    inner = ExpPoly.const(1.0, factors[0].L)
    for f in reversed(factors):
        inner = integrate_from_zero(mul(f, inner))
    return complex(evaluate(inner, T))


# vectorised kernel

def simplex_integral(freqs, T: float, L: float) -> np.ndarray:
    """Iterated integrals of pure exponentials over the ordered simplex.

    Computes ``int_{T>t1>...>tn>0} exp(i*pi/L * sum_m k_m t_m) dt`` for an integer
    array ``freqs`` of shape ``(..., n)``, ``freqs[..., 0]`` belonging to the
    outermost variable ``t1``.

    With partial sums ``B_m = k_1 + ... + k_m`` (``B_0 = 0``) the integral equals
    ``T**n`` times the divided difference of ``exp`` at the nodes
    ``i*pi*T/L * B_m``. Nodes are integers times a common factor, so coincident
    nodes are detected exactly and handled by the confluent formula
    ``f[x,...,x] = exp(x)/r!``. Node sets spanning only a few units (short
    switching times) are evaluated by a Taylor series instead, where the
    difference table would cancel.
    """
    k = np.asarray(freqs)
    if not np.issubdtype(k.dtype, np.integer):
        raise ConfigurationError("lattice frequencies must be integers")
    n = k.shape[-1]
    if n == 0:
        return np.ones(k.shape[:-1], dtype=complex)
    if T == 0:
        return np.zeros(k.shape[:-1], dtype=complex)
    nodes = np.concatenate([np.zeros(k.shape[:-1] + (1,), dtype=np.int64), np.cumsum(k, axis=-1)], axis=-1)
    nodes = np.sort(nodes, axis=-1)
    scale = 1j * math.pi * T / L
    # closely spaced nodes make the difference table lose digits; use the series there
    near = (nodes[..., -1] - nodes[..., 0]) * abs(scale) <= _SERIES_SPREAD
    if np.all(near):
        return T ** n * _divided_difference_series(nodes * scale)
    out = T ** n * _divided_difference_table(nodes, nodes * scale)
    if np.any(near):
        out[near] = T ** n * _divided_difference_series(nodes[near] * scale)
    return out


_SERIES_SPREAD = 4.0
_SERIES_TERMS = 48


def _divided_difference_series(x):
    """``exp[x_0..x_n]`` by Taylor expansion about the midpoint.

    ``exp[x] = e^c sum_m h_m(x - c) / (m + n)!`` with ``h_m`` the complete
    homogeneous symmetric polynomials; accurate for node spreads of a few units.
    """
    n = x.shape[-1] - 1
    c = 0.5 * (x[..., 0] + x[..., -1])
    y = x - c[..., None]
    # h[m] over the variables seen so far: h_m(y_0..y_j) = h_m(y_0..y_{j-1}) + y_j h_{m-1}(y_0..y_j)
    h = np.zeros(x.shape[:-1] + (_SERIES_TERMS,), dtype=complex)
    h[..., 0] = 1.0
    for j in range(n + 1):
        for m in range(1, _SERIES_TERMS):
            h[..., m] = h[..., m] + y[..., j] * h[..., m - 1]
    inv_fact = np.array([1.0 / math.factorial(m + n) for m in range(_SERIES_TERMS)])
    return np.exp(c) * (h @ inv_fact)


def _divided_difference_table(nodes, x):
    n = x.shape[-1] - 1
    ex = np.exp(x)
    # table[i] holds f[x_i .. x_{i+r}] after pass r
    table = [ex[..., i] for i in range(n + 1)]
    for r in range(1, n + 1):
        new = []
        for i in range(n + 1 - r):
            same = nodes[..., i + r] == nodes[..., i]
            denom = np.where(same, 1.0, x[..., i + r] - x[..., i])
            val = np.where(same, ex[..., i] / math.factorial(r), (table[i + 1] - table[i]) / denom)
            new.append(val)
        table = new
    return table[0]
