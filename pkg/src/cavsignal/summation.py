"""Deterministic compensated reductions."""

from __future__ import annotations

import math

import numpy as np


def csum(values) -> complex:
    """Correctly rounded sum of a complex array (``math.fsum`` per component)."""
    v = np.asarray(values, dtype=complex).ravel()
    return complex(math.fsum(v.real), math.fsum(v.imag))


def compensated_cumsum(values) -> np.ndarray:
    """Neumaier-compensated running sum of a 1D complex array."""
    v = np.asarray(values, dtype=complex).ravel()
    out = np.empty_like(v)
    s = 0j
    comp = 0j
    for i, x in enumerate(v):
        t = s + x
        # real and imaginary parts compensate independently
        cr = (s.real - t.real) + x.real if abs(s.real) >= abs(x.real) else (x.real - t.real) + s.real
        ci = (s.imag - t.imag) + x.imag if abs(s.imag) >= abs(x.imag) else (x.imag - t.imag) + s.imag
        comp += complex(cr, ci)
        s = t
        out[i] = s + comp
    return out


def shell_cumsum(matrix) -> np.ndarray:
    """``out[N-1] = sum(matrix[:N, :N])`` for every ``N``.

    The square is grown one L-shaped shell at a time; shell totals are
    accumulated with compensation so the reduction order is fixed.
    """
    m = np.asarray(matrix, dtype=complex)
    n = m.shape[0]
    rows = np.cumsum(m, axis=1)  # rows[N, N] = sum_{l<=N} m[N, l]
    cols = np.cumsum(m, axis=0)  # cols[N-1, N] = sum_{j<N} m[j, N]
    idx = np.arange(n)
    shells = rows[idx, idx].copy()
    shells[1:] += cols[idx[:-1], idx[1:]]
    return compensated_cumsum(shells)
