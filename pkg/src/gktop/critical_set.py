"""Critical subsystems M, N, O: invariant relations, partial integrals and
the bifurcation relations among the constants (h, k, g)."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .complex_chart import ComplexState, from_complex
from .errors import BranchError, DomainError
from .rigid_core import BodyParams, IntegralValues, PhaseState

_FLOOR = 1e-12


@dataclass(frozen=True)
class SubsystemNConstants:
    m: float
    ell: float

    def __post_init__(self):
        if abs(self.m) < 1e-12:
            raise DomainError(f"subsystem N needs m != 0 (got {self.m!r})")


@dataclass(frozen=True)
class SubsystemOConstants:
    s: float
    tau: float

    def __post_init__(self):
        if self.s == 0.0:
            raise DomainError("subsystem O needs s != 0")


def _scaled(residual, *terms):
    scale = max(_FLOOR, max(abs(t) for t in terms))
    return abs(residual) / scale


# --- M ---------------------------------------------------------------------

def residual_m(cs: ComplexState) -> tuple[complex, complex]:
    return cs.w1 ** 2 + cs.x1, cs.w2 ** 2 + cs.x2


def integral_f(cs: ComplexState) -> complex:
    """First integral on M (reduces to a real number on real states)."""
    return cs.w1 * cs.w2 * cs.w3 + cs.z2 * cs.w1 + cs.z1 * cs.w2


def on_m(cs: ComplexState, tol: float = 1e-10) -> bool:
    e1, e2 = residual_m(cs)
    return max(_scaled(e1, cs.w1 ** 2, cs.x1), _scaled(e2, cs.w2 ** 2, cs.x2)) < tol


def point_on_m(w1: complex, w3: float, phase: float, params: BodyParams, z_sign: int = 1) -> PhaseState:
    """Real point of M with prescribed ``w1 = omega1 + i omega2`` and ``omega3``.

    ``x1 = -w1**2`` fixes the first field combination; ``y1`` is searched along
    the ray of argument ``phase`` so that the constraints close, then ``z1`` is
    the square root selected by ``z_sign``. Raises DomainError when the ray
    carries no solution.
    """
    x1 = -complex(w1) ** 2
    x = abs(x1)
    p2, r2 = params.p2, params.r2
    u = cmath.exp(1j * phase)
    ymax2 = 2.0 * p2 - x * x
    if ymax2 <= 0.0:
        raise DomainError("|w1|^2 too large for the constrained phase space")

    def defect(rho):
        y2 = rho * u.conjugate()
        return abs(r2 - x1 * y2) - 0.5 * (2.0 * p2 - x * x - rho * rho)

    hi = math.sqrt(ymax2)
    lo = 0.0
    if defect(lo) * defect(hi) > 0.0:
        raise DomainError("no point of M on this ray; try another phase")
    rho = brentq(defect, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    y1 = rho * u
    z1 = z_sign * cmath.sqrt(r2 - x1 * y1.conjugate())
    cs = ComplexState(x1, x1.conjugate(), y1, y1.conjugate(), z1, z1.conjugate(),
                      complex(w1), complex(w1).conjugate(), complex(w3))
    return from_complex(cs)


# --- N ---------------------------------------------------------------------

def residual_n(cs: ComplexState) -> tuple[complex, complex]:
    x1, x2 = cs.x1, cs.x2
    if x1 == 0 or x2 == 0:
        raise DomainError("invariant relations of N are singular at x1*x2 = 0")
    e1 = x1 * x2 * cs.w3 - (x2 * cs.z1 * cs.w1 + x1 * cs.z2 * cs.w2)
    e2 = x2 / x1 * (cs.w1 ** 2 + x1) - x1 / x2 * (cs.w2 ** 2 + x2)
    return e1, e2


def residual_n_scaled(cs: ComplexState) -> tuple[float, float]:
    e1, e2 = residual_n(cs)
    x1, x2 = cs.x1, cs.x2
    return (
        _scaled(e1, x1 * x2 * cs.w3, x2 * cs.z1 * cs.w1, x1 * cs.z2 * cs.w2),
        _scaled(e2, x2 / x1 * (cs.w1 ** 2 + x1), x1 / x2 * (cs.w2 ** 2 + x2)),
    )


def on_n(cs: ComplexState, tol: float = 1e-9) -> bool:
    return max(residual_n_scaled(cs)) < tol


def integrals_n(cs: ComplexState, params: BodyParams) -> SubsystemNConstants:
    """Constants ``(m, ell)``; the square root of ``x1 x2`` is the nonnegative one."""
    x1, x2 = cs.x1, cs.x2
    if x1 == 0 or x2 == 0:
        raise DomainError("partial integrals of N are singular at x1*x2 = 0")
    prod = x1 * x2
    if prod.real < 0.0 and abs(prod.imag) <= 1e-12 * abs(prod):
        raise BranchError("x1*x2 on the negative real axis: square-root branch undefined")
    m = (x2 / x1 * (cs.w1 ** 2 + x1) + x1 / x2 * (cs.w2 ** 2 + x2)) / (2.0 * params.r2)
    ell = (cs.w1 * cs.w2 + (prod + cs.z1 * cs.z2) * m) / cmath.sqrt(prod)
    return SubsystemNConstants(complex(m).real, complex(ell).real)


def bifurcation_residual_n(values: IntegralValues, params: BodyParams) -> float:
    """Residual of the relation tying (h, k, g) on N.

    Written as ``(p^2 h - 2 g)^2 - r^4 k``; with ``g^2`` in the first bracket
    the relation fails on every reconstructed point.
    """
    h, k, g = values
    return (params.p2 * h - 2.0 * g) ** 2 - params.r4 * k


# --- O ---------------------------------------------------------------------

def _o_numerators(cs: ComplexState):
    n1 = cs.w2 * cs.x1 + cs.w1 * cs.y2 + cs.w3 * cs.z1
    n2 = cs.w1 * cs.x2 + cs.w2 * cs.y1 + cs.w3 * cs.z2
    return n1, n2


def residual_o(cs: ComplexState) -> tuple[complex, complex]:
    x1, x2, y1, y2, z1, z2, w1, w2, w3 = cs.as_tuple()
    if w1 == 0 or w2 == 0:
        raise DomainError("invariant relations of O are singular at w1*w2 = 0")
    n1, n2 = _o_numerators(cs)
    e1 = n1 / w1 - n2 / w2
    e2 = ((w2 * z1 + w1 * z2) * w3 ** 2
          + (w2 * z1 ** 2 / w1 + w1 * z2 ** 2 / w2 + w1 * w2 * (y1 + y2) + x1 * w2 ** 2 + x2 * w1 ** 2) * w3
          + w2 ** 2 * x1 * z1 / w1 + w1 ** 2 * x2 * z2 / w2
          + x1 * z2 * w2 + x2 * z1 * w1 + (w1 * z2 - w2 * z1) * (y1 - y2))
    return e1, e2


def residual_o_scaled(cs: ComplexState) -> tuple[float, float]:
    x1, x2, y1, y2, z1, z2, w1, w2, w3 = cs.as_tuple()
    e1, e2 = residual_o(cs)
    n1, n2 = _o_numerators(cs)
    terms2 = [
        (w2 * z1 + w1 * z2) * w3 ** 2, w2 * z1 ** 2 / w1 * w3, w1 * z2 ** 2 / w2 * w3,
        w1 * w2 * (y1 + y2) * w3, x1 * w2 ** 2 * w3, x2 * w1 ** 2 * w3,
        w2 ** 2 * x1 * z1 / w1, w1 ** 2 * x2 * z2 / w2, x1 * z2 * w2, x2 * z1 * w1,
        (w1 * z2 - w2 * z1) * (y1 - y2),
    ]
    return _scaled(e1, n1 / w1, n2 / w2), _scaled(e2, *terms2)


def on_o(cs: ComplexState, tol: float = 1e-8) -> bool:
    return max(residual_o_scaled(cs)) < tol


def integrals_o(cs: ComplexState) -> SubsystemOConstants:
    x1, x2, y1, y2, z1, z2, w1, w2, w3 = cs.as_tuple()
    if w1 == 0 or w2 == 0:
        raise DomainError("partial integrals of O are singular at w1*w2 = 0")
    s = -0.25 * ((y2 * w1 + x1 * w2 + z1 * w3) / w1 + (x2 * w1 + y1 * w2 + z2 * w3) / w2)
    t = (0.5 * (w1 * (x2 * w1 + y1 * w2 + z2 * w3) + w2 * (y2 * w1 + x1 * w2 + z1 * w3))
         + x1 * x2 + z1 * z2)
    return SubsystemOConstants(complex(s).real, complex(t).real)


def bifurcation_constants_o(c: SubsystemOConstants, params: BodyParams) -> IntegralValues:
    s, tau = c.s, c.tau
    p2, r4 = params.p2, params.r4
    h = (p2 - tau) / (2.0 * s) + s
    k = (tau * tau - 2.0 * p2 * tau + r4) / (4.0 * s * s) + tau
    g = (p2 * p2 - r4) / (4.0 * s) + 0.5 * (p2 - tau) * s
    return IntegralValues(h, k, g)
