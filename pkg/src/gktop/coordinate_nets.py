"""Separating coordinate nets on the picture plane.

The circle net ``(s1, s2)`` lives on the ``(x, z)`` quarter plane; the
tangent-line net ``(t1, t2)`` lives on the ``(xi, x)`` plane around the conic
``tau xi^2 + sigma x^2 = tau sigma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .complex_chart import ComplexState
from .errors import DegenerateError, DomainError, RealityViolation
from .rigid_core import BodyParams


@dataclass(frozen=True)
class ProjectionPoint:
    x: float
    y: float
    z: float

    def ellipsoid_residual(self, params: BodyParams) -> float:
        return self.x ** 2 + self.y ** 2 + 2.0 * self.z ** 2 - 2.0 * params.p2


@dataclass(frozen=True)
class SPoint:
    s1: float
    s2: float


@dataclass(frozen=True)
class TPoint:
    t1: float
    t2: float
    tau: float
    sigma: float

    def ordered(self) -> "TPoint":
        """Same point with ``t1 >= t2``."""
        if self.t1 >= self.t2:
            return self
        return TPoint(self.t2, self.t1, self.tau, self.sigma)


def sigma_of(tau: float, params: BodyParams) -> float:
    return tau * tau - 2.0 * params.p2 * tau + params.r4


def _modulus(prod: complex, name: str, tol: float) -> float:
    prod = complex(prod)
    if abs(prod.imag) > tol * max(1.0, abs(prod)):
        raise RealityViolation(f"{name} has imaginary part {prod.imag:.3e}")
    return math.sqrt(max(prod.real, 0.0))


def project_xz(cs: ComplexState, tol: float = 1e-10) -> ProjectionPoint:
    return ProjectionPoint(
        _modulus(cs.x1 * cs.x2, "x1*x2", tol),
        _modulus(cs.y1 * cs.y2, "y1*y2", tol),
        _modulus(cs.z1 * cs.z2, "z1*z2", tol),
    )


def phi_pm(x: float, z: float, params: BodyParams) -> tuple[float, float]:
    """The two quartics whose signs cut out the image of the phase space."""
    q = x * x + z * z
    return (
        (q + params.r2) ** 2 - 2.0 * (params.p2 + params.r2) * x * x,
        (q - params.r2) ** 2 - 2.0 * (params.p2 - params.r2) * x * x,
    )


def s_from_xz(x: float, z: float, params: BodyParams) -> SPoint:
    if x == 0.0:
        raise DomainError("x = 0 corresponds to s1 at infinity")
    q = x * x + z * z
    return SPoint((q + params.r2) / (2.0 * x), (q - params.r2) / (2.0 * x))


def s_differentials(x: float, z: float, params: BodyParams) -> np.ndarray:
    """Jacobian ``d(s1, s2)/d(x, z)`` as a 2x2 array."""
    if x == 0.0:
        raise DomainError("differentials undefined at x = 0")
    r2 = params.r2
    return np.array([
        [(x * x - z * z - r2) / (2.0 * x * x), z / x],
        [(x * x - z * z + r2) / (2.0 * x * x), z / x],
    ])


def xz_from_s(sp: SPoint, params: BodyParams, tol: float = 1e-14) -> tuple[float, float]:
    d = sp.s1 - sp.s2
    if d == 0.0:
        raise DomainError("s1 = s2 has no preimage")
    x = params.r2 / d
    z2 = params.r2 * (sp.s1 + sp.s2) / d - x * x
    if z2 < -tol * max(1.0, x * x):
        raise DomainError(f"z^2 = {z2:.3e} < 0: point outside the image of the (x, z) plane")
    return x, math.sqrt(max(z2, 0.0))


def s_rectangle_check(sp: SPoint, params: BodyParams) -> bool:
    return sp.s1 ** 2 >= params.a ** 2 and sp.s2 ** 2 <= params.b ** 2


def t_from_point(xi: float, x: float, tau: float, sigma: float) -> TPoint:
    """Roots of the tangent-line quadratic through ``(xi, x)``.

    Labels follow the explicit root formulas (``t1`` carries ``+mu x``), not
    the value order; call :meth:`TPoint.ordered` for ``t1 >= t2``.
    """
    den = tau - x * x
    if den == 0.0:
        raise DegenerateError("tau = x^2: tangent-line quadratic degenerates")
    disc = tau * xi * xi + sigma * x * x - tau * sigma
    if disc < 0.0:
        raise DomainError(f"point outside the tangent-line region (discriminant {disc:.3e})")
    mu = math.sqrt(disc)
    return TPoint((tau * xi + mu * x) / den, (tau * xi - mu * x) / den, tau, sigma)


def t_quadratic(t: float, xi: float, x: float, tau: float, sigma: float) -> float:
    den = tau - x * x
    return t * t - 2.0 * tau * xi / den * t + (tau * xi * xi + sigma * x * x) / den


def st_link(sp: SPoint, tau: float, params: BodyParams) -> tuple[float, float]:
    d = sp.s1 - sp.s2
    if d == 0.0:
        raise DegenerateError("s1 = s2")
    return params.r2 * (sp.s1 + sp.s2) / d - tau, params.r2 / d


def line_conic_double_point(c0: float, c1: float, tau: float, sigma: float) -> float:
    """Discriminant of ``tau xi^2 + sigma x^2 = tau sigma`` cut by ``xi = c0 + c1 x``.

    Zero iff the line is tangent to the conic. Returned relative to the size of
    the quadratic's coefficients.
    """
    qa = tau * c1 * c1 + sigma
    qb = 2.0 * tau * c0 * c1
    qc = tau * c0 * c0 - tau * sigma
    scale = max(qb * qb, abs(4.0 * qa * qc), 1e-300)
    return (qb * qb - 4.0 * qa * qc) / scale


def generalized_boundary_test(jacobian_eval: Callable, point, dim_z: int | None = None,
                              rtol: float = 1e-8) -> bool:
    """Rank test for the fiber-restricted tangent map.

    ``jacobian_eval(point)`` returns the matrix of the tangent map restricted
    to the fiber directions (rows index the target). The point covers the
    generalized boundary iff the numerical rank is below ``dim_z``.
    """
    mat = np.atleast_2d(np.asarray(jacobian_eval(point), dtype=float))
    if dim_z is None:
        dim_z = mat.shape[0]
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return dim_z > 0
    rank = int(np.sum(sv > rtol * sv[0]))
    return rank < dim_z
