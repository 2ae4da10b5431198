"""Concordance suite: analytic engines against both oracles on small instances."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..channel2 import compute_second_order, raw_second_order_coefficients
from ..channel4 import compute_fourth_order
from ..field import CavityConfig, DetectorParams
from .fock import FockBasis, dyson_fermi_coefficients, dyson_trace_check
from .quadrature import quad_coefficient

SMALL_L = math.pi
SMALL_A = DetectorParams(1.0, 1)
SMALL_B = DetectorParams(2.0, 1)


@dataclass(frozen=True)
class CheckResult:
    name: str
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.error < self.tolerance


def _rel(a, b) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def _rho(theta, gamma):
    return np.array([[theta, gamma], [np.conj(gamma), 1 - theta]])


def run_checks(tolerance_scale: float = 1.0) -> list[CheckResult]:
    s = tolerance_scale
    out = []

    cav2 = CavityConfig(SMALL_L, 3)
    second = compute_second_order(cav2, SMALL_A, SMALL_B, 2.5)
    for name in ("P2", "Q2", "R2", "S2", "C2", "D2"):
        q = quad_coefficient(name, cav2, SMALL_A, SMALL_B, 2.5, nodes_per_dim=40)
        out.append(CheckResult(f"quadrature_2d_{name}", _rel(getattr(second, name), q), 1e-8 * s))

    raw = raw_second_order_coefficients(cav2, SMALL_A, SMALL_B, 2.5)
    err = max(abs(raw[k] - v) for k, v in second.as_dict().items())
    out.append(CheckResult("raw_assembly_second_order", err, 1e-12 * s))

    cav4 = CavityConfig(SMALL_L, 2)
    fourth = compute_fourth_order(cav4, SMALL_A, SMALL_B, 3.0)
    for name in ("A4", "B4", "P4"):
        q = quad_coefficient(name, cav4, SMALL_A, SMALL_B, 3.0, nodes_per_dim=16)
        out.append(CheckResult(f"quadrature_4d_{name}", _rel(getattr(fourth, name), q.real), 1e-6 * s))

    basis = FockBasis(2, 2)
    dyson = dyson_fermi_coefficients(SMALL_L, SMALL_A, SMALL_B, 3.0, basis)
    for name in ("A4", "B4", "P4"):
        out.append(CheckResult(f"dyson_{name}", _rel(getattr(fourth, name), dyson[name]), 1e-6 * s))

    rhoA, rhoB = _rho(0.3, 0.2 + 0.1j), _rho(0.6, -0.1 + 0.3j)
    for order, tol in ((1, 1e-12), (2, 1e-9), (4, 1e-8)):
        tr = dyson_trace_check(SMALL_L, SMALL_A, SMALL_B, 3.0, basis, order, rhoA, rhoB)
        out.append(CheckResult(f"trace_order_{order}", tr, tol * s))
    return out
