"""Elliptic separation on the second critical subsystem.

Separated coordinates are the circle-net values ``(s1, s2)``; each moves
independently along ``ds_i/dt = +-1/2 sqrt(F_i(s_i))``. The four sign bits
are those of ``S1 = sqrt(s1^2 - a^2)``, ``phi1 = sqrt(-Phi(s1))``,
``S2 = sqrt(b^2 - s2^2)`` and ``phi2 = sqrt(Phi(s2))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .complex_chart import ComplexState, to_complex
from .critical_set import SubsystemNConstants, residual_n_scaled
from .errors import AdmissibilityError, BranchError, DomainError
from .integrator import IntegrationConfig
from .rigid_core import BodyParams, PhaseState, geometric_residuals
from .separation import Radicand, integrate_separated

BIT_NAMES = ("S1", "phi1", "S2", "phi2")


@dataclass(frozen=True)
class SeparatedStateN:
    s1: float
    s2: float
    eps: tuple = (1, 1, 1, 1)

    def __post_init__(self):
        eps = tuple(int(e) for e in self.eps)
        if len(eps) != 4 or any(e not in (1, -1) for e in eps):
            raise DomainError(f"need four sign bits in {{+1, -1}}, got {self.eps!r}")
        object.__setattr__(self, "eps", eps)


def _check_params(params: BodyParams):
    if params.b == 0.0:
        raise DomainError("separation on N needs b > 0")


def phi_roots(c: SubsystemNConstants) -> tuple[float, float]:
    """Roots ``(ell - 1)/(2m)``, ``(ell + 1)/(2m)`` of the quadratic ``Phi``."""
    return (c.ell - 1.0) / (2.0 * c.m), (c.ell + 1.0) / (2.0 * c.m)


def phi_n(s: float, c: SubsystemNConstants) -> float:
    return 4.0 * c.m * s * s - 4.0 * c.ell * s + (c.ell ** 2 - 1.0) / c.m


def psi_n(s1: float, s2: float, c: SubsystemNConstants) -> float:
    return 4.0 * c.m * s1 * s2 - 2.0 * c.ell * (s1 + s2) + (c.ell ** 2 - 1.0) / c.m


def _phi_factored(s, c):
    lo, hi = phi_roots(c)
    return 4.0 * c.m * (s - lo) * (s - hi)


def radicands_n(s1, s2, c: SubsystemNConstants, params: BodyParams) -> np.ndarray:
    """The four radicands, in bit order; all nonnegative exactly on the region."""
    a, b = params.a, params.b
    return np.array([
        (s1 - a) * (s1 + a),
        -_phi_factored(s1, c),
        (b - s2) * (b + s2),
        _phi_factored(s2, c),
    ])


def region_n(s1: float, s2: float, c: SubsystemNConstants, params: BodyParams) -> bool:
    return bool(np.all(radicands_n(s1, s2, c, params) >= 0.0))


def radicals_n(st: SeparatedStateN, c, params, slack: float = 1e-10) -> tuple[float, float, float, float]:
    """Signed radicals; radicands above ``-slack`` (relative) are clamped to 0."""
    rad = radicands_n(st.s1, st.s2, c, params)
    floor = -slack * max(1.0, st.s1 * st.s1, abs(c.m) * st.s1 * st.s1)
    bad = [BIT_NAMES[i] for i in range(4) if rad[i] < floor]
    if bad:
        raise AdmissibilityError(f"negative radicands at (s1, s2)=({st.s1}, {st.s2}): {', '.join(bad)}", bad)
    return tuple(e * math.sqrt(max(v, 0.0)) for e, v in zip(st.eps, rad))


def _intersect(a_list, b_list):
    out = []
    for a0, a1 in a_list:
        for b0, b1 in b_list:
            lo, hi = max(a0, b0), min(a1, b1)
            if hi > lo:
                out.append((lo, hi))
    return out


def admissible_intervals_n(c: SubsystemNConstants, params: BodyParams, pad: float = 1.0):
    """Interval lists for ``s1`` and ``s2`` on which all radicands are nonnegative.

    Only the half ``s1 >= a`` is kept: ``x = r^2/(s1 - s2)`` is positive there,
    while the mirror band ``s1 <= -a`` holds the states of ``(m, -ell)``.
    Unbounded pieces are cut ``pad`` past the nearest finite bound.
    """
    lo, hi = phi_roots(c)
    a, b = params.a, params.b
    far = max(abs(lo), abs(hi), a) + pad
    neg_phi = [(lo, hi)] if c.m > 0 else [(-far, lo), (hi, far)]
    pos_phi = [(-far, lo), (hi, far)] if c.m > 0 else [(lo, hi)]
    s1 = _intersect([(a, far)], neg_phi)
    s2 = _intersect([(-b, b)], pos_phi)
    return s1, s2


def separated_rhs_n(st: SeparatedStateN, c: SubsystemNConstants, params: BodyParams) -> tuple[float, float]:
    S1, f1, S2, f2 = radicals_n(st, c, params)
    return 0.5 * S1 * f1, 0.5 * S2 * f2


def separated_acc_n(s1, s2, c: SubsystemNConstants, params: BodyParams) -> tuple[float, float]:
    """Second derivatives ``F_i'(s_i)/8`` of the smooth second-order form."""
    a2, b2 = params.a ** 2, params.b ** 2
    p1, dp1 = phi_n(s1, c), 8.0 * c.m * s1 - 4.0 * c.ell
    p2, dp2 = phi_n(s2, c), 8.0 * c.m * s2 - 4.0 * c.ell
    d1 = -(2.0 * s1 * p1 + (s1 * s1 - a2) * dp1)
    d2 = -2.0 * s2 * p2 + (b2 - s2 * s2) * dp2
    return d1 / 8.0, d2 / 8.0


def reconstruct_n(st: SeparatedStateN, c: SubsystemNConstants, params: BodyParams,
                  tol: float = 1e-9) -> PhaseState:
    """Phase state of N at ``(s1, s2)`` on the branch ``st.eps``.

    ``omega3`` is the combination ``-(S2 phi1 + S1 phi2)/(s1 - s2)``; it is the
    value forced by the first invariant relation of N for every sign choice.
    """
    _check_params(params)
    s1, s2 = st.s1, st.s2
    S1, f1, S2, f2 = radicals_n(st, c, params)
    a2, b2, r = params.a ** 2, params.b ** 2, params.r
    d = s1 - s2
    if d <= 0.0:
        raise DomainError(f"s1 <= s2 maps to x <= 0; the mirror point ({-s1}, {-s2}) carries ell -> -ell")
    ps = psi_n(s1, s2, c)
    dd = 2.0 * d * d
    prod = S1 * S2
    ff = f1 * f2
    alpha = [((s1 * s2 - a2) * ps + prod * ff) / dd,
             ((s1 * s2 - a2) * ff - prod * ps) / dd,
             r * S1 / d]
    beta = [-((s1 * s2 - b2) * ff - prod * ps) / dd,
            ((s1 * s2 - b2) * ps + prod * ff) / dd,
            r * S2 / d]
    omega = [r / (2.0 * d) * (c.ell - 2.0 * c.m * s1) * f2,
             r / (2.0 * d) * (c.ell - 2.0 * c.m * s2) * f1,
             -(S2 * f1 + S1 * f2) / d]
    state = PhaseState(omega, alpha, beta)
    cs = to_complex(state)
    geo = max(abs(v) for v in geometric_residuals(state, params))
    if cs.x1 != 0 and geo < tol:
        rn = max(residual_n_scaled(cs))
        if rn < tol:
            return state
    else:
        rn = float("nan")
    raise BranchError(f"branch {st.eps} at ({s1}, {s2}) misses N (geometric {geo:.2e}, relation {rn:.2e})")


def r_pair(cs: ComplexState) -> tuple[complex, complex]:
    """``R1 = sqrt(x1/x2) w2``, ``R2 = sqrt(x2/x1) w1`` with ``sqrt(x1 x2) = x >= 0``."""
    x = math.sqrt(abs(cs.x1 * cs.x2))
    return cs.x1 * cs.w2 / x, cs.x2 * cs.w1 / x


def n_identity_residuals(st: SeparatedStateN, c: SubsystemNConstants, params: BodyParams) -> dict:
    """Relative residuals of the intermediate identities behind the separation."""
    state = reconstruct_n(st, c, params)
    cs = to_complex(state)
    R1, R2 = r_pair(cs)
    x = math.sqrt(abs(cs.x1 * cs.x2))
    zz = (cs.z1 * cs.z2).real
    d = st.s1 - st.s2
    r2 = params.r2
    out = {}
    lhs = c.m * (x * x + zz) + R1 * R2
    out["m_relation"] = abs(lhs - c.ell * x) / max(1.0, abs(c.ell * x))
    s_sum = 2.0 * r2 * c.m - (cs.x1 + cs.x2)
    out["R_sum_sq"] = abs(R1 ** 2 + R2 ** 2 - s_sum) / max(1.0, abs(s_sum))
    plus = r2 * phi_n(st.s2, c) / d ** 2
    minus = r2 * phi_n(st.s1, c) / d ** 2
    out["R_plus"] = abs((R1 + R2) ** 2 - plus) / max(1.0, abs(plus))
    out["R_minus"] = abs((R1 - R2) ** 2 - minus) / max(1.0, abs(minus))
    return out


@dataclass
class SeparatedTrajectoryN:
    t: np.ndarray
    s: np.ndarray
    v: np.ndarray
    eps: np.ndarray
    flips: list
    constants: SubsystemNConstants
    params: BodyParams

    def state(self, k: int) -> SeparatedStateN:
        return SeparatedStateN(float(self.s[k, 0]), float(self.s[k, 1]), tuple(self.eps[k]))

    def reconstruct(self) -> np.ndarray:
        return np.array([reconstruct_n(self.state(k), self.constants, self.params).as_array()
                         for k in range(len(self.t))])


def integrate_separated_n(st0: SeparatedStateN, c: SubsystemNConstants, params: BodyParams,
                          t_span, samples, config: IntegrationConfig | None = None) -> SeparatedTrajectoryN:
    """Separated motion on N across turning points (sign bits flip there)."""
    _check_params(params)
    radicals_n(st0, c, params)
    a, b = params.a, params.b
    lo, hi = phi_roots(c)
    rads = [
        Radicand(0, 0, lambda q: (q[0] - a) * (q[0] + a), "S1"),
        Radicand(0, 1, lambda q: -4.0 * c.m * (q[0] - lo) * (q[0] - hi), "phi1"),
        Radicand(1, 2, lambda q: (b - q[1]) * (b + q[1]), "S2"),
        Radicand(1, 3, lambda q: 4.0 * c.m * (q[1] - lo) * (q[1] - hi), "phi2"),
    ]

    def velocity(q, bits):
        return separated_rhs_n(SeparatedStateN(q[0], q[1], bits), c, params)

    def dynamics(q, v):
        return v, np.array(separated_acc_n(q[0], q[1], c, params))

    run = integrate_separated([st0.s1, st0.s2], st0.eps, velocity, dynamics, rads, t_span, samples, config)
    return SeparatedTrajectoryN(run.t, run.q, run.v, run.bits, run.flips, c, params)
