"""Real-variable dynamics of the Kowalevski-type top in two constant fields.

Nondimensional configuration: inertia diag(2, 2, 1), field attachment
points along the first and second body axes. A phase point is packed as the
flat vector ``(omega1..3, alpha1..3, beta1..3)`` whenever it goes through the
integrator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateError, DomainError


@dataclass(frozen=True)
class BodyParams:
    """Field magnitudes ``a = |alpha|`` and ``b = |beta|`` with ``a > b >= 0``."""

    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise DomainError("field magnitudes must be finite")
        if self.a <= 0.0:
            raise DomainError(f"need a > 0, got a={self.a}")
        if self.b < 0.0:
            raise DomainError(f"need b >= 0, got b={self.b}")
        if not self.a > self.b:
            raise DomainError(f"need a > b, got a={self.a}, b={self.b}")

    @property
    def p2(self) -> float:
        return self.a * self.a + self.b * self.b

    @property
    def r2(self) -> float:
        return self.a * self.a - self.b * self.b

    @property
    def r(self) -> float:
        return math.sqrt(self.r2)

    @property
    def r4(self) -> float:
        return self.r2 * self.r2


class IntegralValues(NamedTuple):
    h: float
    k: float
    g: float


@dataclass(frozen=True)
class PhaseState:
    omega: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        for name in ("omega", "alpha", "beta"):
            v = np.asarray(getattr(self, name), dtype=float).reshape(3)
            object.__setattr__(self, name, v)

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.omega, self.alpha, self.beta])

    @classmethod
    def from_array(cls, y) -> "PhaseState":
        y = np.asarray(y, dtype=float)
        if y.shape != (9,):
            raise DomainError(f"phase vector must have 9 components, got shape {y.shape}")
        return cls(y[0:3], y[3:6], y[6:9])


def flow_rhs(t, y):
    """Vector field of the equations of motion on flat 9-vectors.

    ``t`` is unused (autonomous system); the signature matches the integrator.
    """
    w1, w2, w3, a1, a2, a3, b1, b2, b3 = y
    return np.array([
        0.5 * (w2 * w3 + b3),
        0.5 * (-w1 * w3 - a3),
        a2 - b1,
        a2 * w3 - a3 * w2,
        a3 * w1 - a1 * w3,
        a1 * w2 - a2 * w1,
        b2 * w3 - b3 * w2,
        b3 * w1 - b1 * w3,
        b1 * w2 - b2 * w1,
    ])


def eom_rhs(state: PhaseState) -> PhaseState:
    """Time derivative of ``state`` packaged as a PhaseState."""
    return PhaseState.from_array(flow_rhs(0.0, state.as_array()))


def _integrals_from_array(y, a2, b2, frame_free=False):
    w1, w2, w3, a1, a2_, a3, b1, b2_, b3 = y
    al = np.array([a1, a2_, a3])
    be = np.array([b1, b2_, b3])
    gam = np.cross(al, be)
    h = w1 * w1 + w2 * w2 + 0.5 * w3 * w3 - (a1 + b2_)
    k = (w1 * w1 - w2 * w2 + a1 - b2_) ** 2 + (2.0 * w1 * w2 + a2_ + b1) ** 2
    g = ((a1 * w1 + a2_ * w2 + 0.5 * a3 * w3) ** 2
         + (b1 * w1 + b2_ * w2 + 0.5 * b3 * w3) ** 2
         + w3 * (gam[0] * w1 + gam[1] * w2 + 0.5 * gam[2] * w3))
    if frame_free:
        g += -a1 * (be @ be) - b2_ * (al @ al) + (al @ be) * (a2_ + b1)
    else:
        g += -a1 * b2 - b2_ * a2
    return IntegralValues(float(h), float(k), float(g))


def general_integrals(state: PhaseState, params: BodyParams) -> IntegralValues:
    """Energy ``H``, the Kowalevski-type integral ``K`` and the integral ``G``.

    ``G`` uses the field magnitudes from ``params``, so it is an integral only
    on the constrained phase space (orthogonal fields of lengths a, b).
    """
    return _integrals_from_array(state.as_array(), params.a ** 2, params.b ** 2)


def frame_free_integrals(state: PhaseState) -> IntegralValues:
    """Same as :func:`general_integrals` with ``G`` written for an arbitrary field pair.

    The constant terms ``-alpha1 b^2 - beta2 a^2`` become
    ``-alpha1 |beta|^2 - beta2 |alpha|^2 + (alpha.beta)(alpha2 + beta1)``, which
    agrees with the constrained form on orthogonal pairs and is invariant under
    the frame rotation of :func:`normalize_field_frame`.
    """
    return _integrals_from_array(state.as_array(), 0.0, 0.0, frame_free=True)


def integrals_array(y, params: BodyParams) -> np.ndarray:
    """``(H, K, G)`` of a flat 9-vector; convenient for drift monitoring."""
    return np.array(_integrals_from_array(y, params.a ** 2, params.b ** 2))


def geometric_residuals(state: PhaseState, params: BodyParams) -> tuple[float, float, float]:
    al, be = state.alpha, state.beta
    return (float(al @ al - params.a ** 2), float(be @ be - params.b ** 2), float(al @ be))


def field_invariants(alpha, beta) -> tuple[float, float]:
    """Rotation invariants ``(p, r)`` of a field pair; ``p >= r >= 0``."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    aa, bb, ab = alpha @ alpha, beta @ beta, alpha @ beta
    p = math.sqrt(aa + bb)
    r = math.sqrt(math.hypot(aa - bb, 2.0 * ab))
    return p, r


def frame_rotation(state: PhaseState, theta: float) -> PhaseState:
    """Linear automorphism mixing the fields and rotating about the third axis."""
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    alpha = rot @ (c * state.alpha - s * state.beta)
    beta = rot @ (s * state.alpha + c * state.beta)
    return PhaseState(rot @ state.omega, alpha, beta)


def normalize_field_frame(state: PhaseState, tol: float = 1e-12) -> tuple[PhaseState, float]:
    """Rotate the field pair to an orthogonal one with ``|alpha| >= |beta|``.

    Returns the rotated state and the angle used. Raises DegenerateError for
    parallel fields (``alpha x beta = 0``), where no orthogonal normal form with
    distinct lengths exists.
    """
    al, be = state.alpha, state.beta
    cross = np.linalg.norm(np.cross(al, be))
    scale = max(al @ al, be @ be, 1e-300)
    if cross <= tol * scale:
        raise DegenerateError("field vectors are parallel; frame normalization undefined")
    diff = al @ al - be @ be
    dot = al @ be
    if dot == 0.0 and diff >= 0.0:
        return state, 0.0
    theta = 0.5 * math.atan2(-2.0 * dot, diff)
    return frame_rotation(state, theta), theta


def is_equilibrium(state: PhaseState, tol: float = 1e-10) -> bool:
    """Numerical equilibrium test: the vector field vanishes to ``tol``."""
    return bool(np.max(np.abs(flow_rhs(0.0, state.as_array()))) < tol)


def random_state_on_p(rng: np.random.Generator, params: BodyParams, omega_scale: float = 1.0) -> PhaseState:
    """Uniformly oriented field frame on the constrained space with Gaussian omega."""
    q, rmat = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(rmat))
    return PhaseState(omega_scale * rng.normal(size=3), params.a * q[:, 0], params.b * q[:, 1])
