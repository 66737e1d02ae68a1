"""Kowalevski-type complex chart of the phase space.

On images of real states the pairs (x1, x2), (y1, y2), (z1, z2), (w1, w2)
are complex conjugate and w3 is real.
"""

from __future__ import annotations

from dataclasses import astuple, dataclass

import numpy as np

from .errors import RealityViolation
from .rigid_core import BodyParams, IntegralValues, PhaseState


@dataclass(frozen=True)
class ComplexState:
    x1: complex
    x2: complex
    y1: complex
    y2: complex
    z1: complex
    z2: complex
    w1: complex
    w2: complex
    w3: complex

    def as_tuple(self):
        return astuple(self)

    def conjugacy_defects(self) -> np.ndarray:
        return np.abs([
            self.x2 - np.conj(self.x1),
            self.y2 - np.conj(self.y1),
            self.z2 - np.conj(self.z1),
            self.w2 - np.conj(self.w1),
            np.imag(self.w3),
        ])


def to_complex(state: PhaseState) -> ComplexState:
    w1, w2, w3 = state.omega
    a1, a2, a3 = state.alpha
    b1, b2, b3 = state.beta
    return ComplexState(
        complex(a1 - b2, a2 + b1), complex(a1 - b2, -(a2 + b1)),
        complex(a1 + b2, a2 - b1), complex(a1 + b2, -(a2 - b1)),
        complex(a3, b3), complex(a3, -b3),
        complex(w1, w2), complex(w1, -w2),
        complex(w3, 0.0),
    )


def from_complex_array(c) -> np.ndarray:
    """Invert the chart on a 9-tuple of complex values without reality checks.

    Works elementwise on numpy arrays. Returns complex values in the order
    ``(omega, alpha, beta)``; the imaginary parts measure the reality defect.
    """
    x1, x2, y1, y2, z1, z2, w1, w2, w3 = c
    a1 = (x1 + x2 + y1 + y2) / 4
    b2 = (y1 + y2 - x1 - x2) / 4
    a2 = ((x1 - x2) + (y1 - y2)) / 4j
    b1 = ((x1 - x2) - (y1 - y2)) / 4j
    a3 = (z1 + z2) / 2
    b3 = (z1 - z2) / 2j
    o1 = (w1 + w2) / 2
    o2 = (w1 - w2) / 2j
    return np.array([o1, o2, w3, a1, a2, a3, b1, b2, b3])


def from_complex(cs: ComplexState, tol: float = 1e-10) -> PhaseState:
    """Real state from a chart point; RealityViolation if conjugacy fails.

    ``tol`` is relative to the size of the state (with a floor of 1).
    """
    y = from_complex_array(cs.as_tuple())
    scale = max(1.0, float(np.max(np.abs(y))))
    defect = float(np.max(np.abs(y.imag)))
    if defect > tol * scale:
        raise RealityViolation(f"imaginary residue {defect:.3e} exceeds {tol:.1e} (scale {scale:.3g})")
    return PhaseState.from_array(y.real)


def complex_integrals(cs: ComplexState, params: BodyParams) -> IntegralValues:
    """H, K, G in chart variables, projected to real parts.

    On images of real states the imaginary parts vanish up to rounding; use
    :func:`complex_integrals_raw` to inspect them.
    """
    return IntegralValues(*(v.real for v in complex_integrals_raw(cs, params)))


def complex_integrals_raw(cs: ComplexState, params: BodyParams) -> tuple[complex, complex, complex]:
    """Unprojected complex values of H, K, G (imaginary parts kept)."""
    x1, x2, y1, y2, z1, z2, w1, w2, w3 = cs.as_tuple()
    p2, r2 = params.p2, params.r2
    h = 0.5 * w3 ** 2 + w1 * w2 - 0.5 * (y1 + y2)
    k = (w1 ** 2 + x1) * (w2 ** 2 + x2)
    g = (0.25 * (p2 - x1 * x2) * w3 ** 2 + 0.5 * (x2 * z1 * w1 + x1 * z2 * w2) * w3
         + 0.25 * (x2 * w1 + y1 * w2) * (y2 * w1 + x1 * w2) - 0.25 * p2 * (y1 + y2) + 0.25 * r2 * (x1 + x2))
    return complex(h), complex(k), complex(g)


def complex_constraint_residuals(cs: ComplexState, params: BodyParams) -> tuple[complex, complex, complex]:
    x1, x2, y1, y2, z1, z2, _, _, _ = cs.as_tuple()
    r2, p2 = params.r2, params.p2
    return (
        complex(z1 * z1 + x1 * y2 - r2),
        complex(z2 * z2 + x2 * y1 - r2),
        complex(x1 * x2 + y1 * y2 + 2 * z1 * z2 - 2 * p2),
    )


def complex_flow_rhs(cs: ComplexState, lam: float = 0.0) -> ComplexState:
    """Chart velocity with respect to the rotated time ``i t``.

    The real-time velocity of the pushed-forward flow is ``1j`` times this.
    Only used as a cross-check of the chart; production integration runs on
    the real equations.
    """
    x1, x2, y1, y2, z1, z2, w1, w2, w3 = cs.as_tuple()
    return ComplexState(
        -x1 * w3 + z1 * w1, x2 * w3 - z2 * w2,
        -y1 * w3 + z2 * w1, y2 * w3 - z1 * w2,
        0.5 * (x1 * w2 - y2 * w1), 0.5 * (-x2 * w1 + y1 * w2),
        0.5 * (-w1 * (w3 - lam) - z1), 0.5 * (w2 * (w3 - lam) + z2),
        0.5 * (y2 - y1),
    )
