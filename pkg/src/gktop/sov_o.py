"""Hyperelliptic separation on the third critical subsystem.

Separated coordinates are the tangent-line net values ``(t1, t2)`` built
around the conic ``tau xi^2 + sigma x^2 = tau sigma``. Phase variables are
algebraic in ``t1, t2`` up to the signs of eleven radicals

    sqrt(s tau), K1, K2, L1, L2, V1, V2, M1, M2, N1, N2

which are carried as a tuple of +-1 bits in that order. Everything is
evaluated in complex arithmetic; reality is checked only at the end.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .complex_chart import ComplexState, to_complex
from .coordinate_nets import SPoint, sigma_of, xz_from_s
from .critical_set import SubsystemOConstants, integrals_o, residual_o_scaled
from .errors import AdmissibilityError, DegenerateError, DomainError, RealityViolation
from .integrator import IntegrationConfig
from .rigid_core import BodyParams, PhaseState, geometric_residuals
from .separation import Radicand, integrate_separated

BIT_NAMES = ("sqrt_s_tau", "K1", "K2", "L1", "L2", "V1", "V2", "M1", "M2", "N1", "N2")
SQRT2 = math.sqrt(2.0)


def _csqrt(z):
    return cmath.sqrt(complex(z))


@dataclass(frozen=True)
class OConstantsDerived:
    sigma: float
    chi: float
    kappa: complex

    @classmethod
    def from_constants(cls, c: SubsystemOConstants, params: BodyParams) -> "OConstantsDerived":
        sigma = sigma_of(c.tau, params)
        chi2 = sigma / (4.0 * c.s * c.s) + c.tau
        if chi2 < -1e-14:
            raise DomainError(f"k = chi^2 = {chi2:.6g} < 0: constants (s, tau) admit no real motion")
        return cls(sigma, math.sqrt(max(chi2, 0.0)), _csqrt(sigma))


def chi_identity_residual(c: SubsystemOConstants, params: BodyParams) -> float:
    d = OConstantsDerived.from_constants(c, params)
    return 4.0 * c.s ** 2 * d.chi ** 2 - (d.sigma + 4.0 * c.s ** 2 * c.tau)


@dataclass(frozen=True)
class SeparatedStateO:
    t1: float
    t2: float
    signs: tuple = (1,) * 11

    def __post_init__(self):
        sg = tuple(int(e) for e in self.signs)
        if len(sg) != 11 or any(e not in (1, -1) for e in sg):
            raise DomainError(f"need eleven sign bits in {{+1, -1}}, got {self.signs!r}")
        object.__setattr__(self, "signs", sg)


@dataclass(frozen=True)
class RadicalTowerO:
    rst: complex  # sqrt(s tau)
    K1: complex
    K2: complex
    L1: complex
    L2: complex
    V1: complex
    V2: complex
    M1: complex
    M2: complex
    N1: complex
    N2: complex

    @property
    def U1(self):
        return self.K1 * self.L1

    @property
    def U2(self):
        return self.K2 * self.L2

    @property
    def R(self):
        return (self.K1 * self.K2 + self.L1 * self.L2) / SQRT2


def _check(c: SubsystemOConstants, params: BodyParams):
    if params.b == 0.0:
        raise DomainError("separation on O needs b > 0")
    if c.tau == 0.0:
        raise DomainError("separation on O needs tau != 0")


def radicands_o(t: float, c: SubsystemOConstants, params: BodyParams, d: OConstantsDerived | None = None):
    """Radicands of ``(K, L, V, M, N)`` at one coordinate value, in factored form."""
    d = d or OConstantsDerived.from_constants(c, params)
    tv = 2.0 * abs(c.s) * d.chi
    r2 = params.r2
    return {
        "K": t + d.kappa,
        "L": t - d.kappa,
        "V": (tv - t) * (tv + t),
        "M": t - (-c.tau - r2),
        "N": t - (r2 - c.tau),
    }


def radical_tower(st: SeparatedStateO, c: SubsystemOConstants, params: BodyParams) -> RadicalTowerO:
    _check(c, params)
    d = OConstantsDerived.from_constants(c, params)
    q1 = radicands_o(st.t1, c, params, d)
    q2 = radicands_o(st.t2, c, params, d)
    e = st.signs
    return RadicalTowerO(
        e[0] * _csqrt(c.s * c.tau),
        e[1] * _csqrt(q1["K"]), e[2] * _csqrt(q2["K"]),
        e[3] * _csqrt(q1["L"]), e[4] * _csqrt(q2["L"]),
        e[5] * _csqrt(q1["V"]), e[6] * _csqrt(q2["V"]),
        e[7] * _csqrt(q1["M"]), e[8] * _csqrt(q2["M"]),
        e[9] * _csqrt(q1["N"]), e[10] * _csqrt(q2["N"]),
    )


# --- polynomials on the (x, xi) plane -------------------------------------

@dataclass(frozen=True)
class OPolynomials:
    Phi1: float
    Phi2: float
    Psi1: float
    Psi2: float
    Theta1: float
    Theta2: float
    P: float
    Q: float


def o_polynomials(x, xi, c: SubsystemOConstants, params: BodyParams, chi=None) -> OPolynomials:
    s, tau = c.s, c.tau
    p2, r2, r4 = params.p2, params.r2, params.r4
    if chi is None:
        chi = OConstantsDerived.from_constants(c, params).chi
    chi2 = chi * chi
    s2 = s * s
    x2 = x * x
    phi1 = (xi + tau + r2) ** 2 - 2.0 * (p2 + r2) * x2
    phi2 = (xi + tau - r2) ** 2 - 2.0 * (p2 - r2) * x2
    psi1 = xi * xi - 4.0 * s2 * (x + chi) ** 2
    psi2 = xi * xi - 4.0 * s2 * (x - chi) ** 2
    th1 = (xi - 2.0 * s * x) ** 2 - 4.0 * s2 * chi2
    th2 = (xi + 2.0 * s * x) ** 2 - 4.0 * s2 * chi2
    P = (4.0 * s2 * (x2 - chi2) * (2.0 * (tau - p2) * x2 - tau * tau + r4)
         + 8.0 * s2 * ((tau - 2.0 * chi2) * x2 + tau * chi2) * xi
         - 2.0 * ((tau - p2 - 2.0 * s2) * x2 + tau * (p2 - 2.0 * s2) - r4) * xi ** 2
         - 2.0 * tau * xi ** 3 - xi ** 4)
    Q = (xi + tau + 2.0 * s2 - p2) ** 2 - 4.0 * s2 * x2 - (p2 - 2.0 * s2) ** 2 + r4
    return OPolynomials(phi1, phi2, psi1, psi2, th1, th2, P, Q)


def master_identity_residual(x, xi, c: SubsystemOConstants, params: BodyParams,
                             inject_fault: str | None = None) -> float:
    """Relative residual of ``P^2 - Phi1 Phi2 Psi1 Psi2 = 4 x^2 mu^2 Q^2``.

    ``inject_fault="phi2_sign"`` flips the sign of ``Phi2`` (negative control).
    """
    d = OConstantsDerived.from_constants(c, params)
    pol = o_polynomials(x, xi, c, params, d.chi)
    phi2 = -pol.Phi2 if inject_fault == "phi2_sign" else pol.Phi2
    mu2 = c.tau * xi * xi + d.sigma * x * x - c.tau * d.sigma
    lhs = pol.P ** 2 - pol.Phi1 * phi2 * pol.Psi1 * pol.Psi2
    rhs = 4.0 * x * x * mu2 * pol.Q ** 2
    scale = max(pol.P ** 2, abs(pol.Phi1 * phi2 * pol.Psi1 * pol.Psi2), abs(rhs), 1e-300)
    return abs(lhs - rhs) / scale


def p_split(x, xi, mu, c: SubsystemOConstants, params: BodyParams) -> tuple[float, float]:
    """``P1 = P + 2 x mu Q`` and ``P2 = P - 2 x mu Q``."""
    pol = o_polynomials(x, xi, c, params)
    return pol.P + 2.0 * x * mu * pol.Q, pol.P - 2.0 * x * mu * pol.Q


def p_split_from_t(st: SeparatedStateO, c, params) -> tuple[complex, complex]:
    """Factored forms of ``P1``, ``P2`` in the separated coordinates."""
    tw = radical_tower(st, c, params)
    _, xi, _ = point_from_t(st, c, params)
    f = 4.0 * xi * xi / (st.t1 + st.t2) ** 2
    return (f * tw.M1 ** 2 * tw.N1 ** 2 * tw.V2 ** 2,
            f * tw.M2 ** 2 * tw.N2 ** 2 * tw.V1 ** 2)


# --- accessible region on the (s1, s2) plane -------------------------------

def lambda_m_lines(sp: SPoint, c: SubsystemOConstants, params: BodyParams) -> tuple[float, float, float, float]:
    """``(Lambda+, Lambda-, M+, M-)``; each vanishes on one straight line."""
    d = OConstantsDerived.from_constants(c, params)
    r2, s, tau = params.r2, c.s, c.tau
    u = sp.s1 + sp.s2
    v = sp.s1 - sp.s2
    kl = (tau - 2.0 * s * d.chi) / r2
    km = (tau + 2.0 * s * d.chi) / r2
    return (u - kl * v + 2.0 * s, u - kl * v - 2.0 * s,
            u - km * v + 2.0 * s, u - km * v - 2.0 * s)


def xi_pm(x: float, z: float, c: SubsystemOConstants, params: BodyParams) -> tuple[float, float]:
    d = OConstantsDerived.from_constants(c, params)
    q = x * x + z * z - c.tau
    ss = 2.0 * c.s * d.chi
    return (q + ss) ** 2 - 4.0 * c.s ** 2 * x * x, (q - ss) ** 2 - 4.0 * c.s ** 2 * x * x


def region_o(sp: SPoint, c: SubsystemOConstants, params: BodyParams) -> bool:
    lp, lm, mp, mm = lambda_m_lines(sp, c, params)
    return (lp * lm >= 0.0 and mp * mm <= 0.0
            and sp.s1 ** 2 >= params.a ** 2 and sp.s2 ** 2 <= params.b ** 2)


def region_o_xz(sp: SPoint, c: SubsystemOConstants, params: BodyParams) -> bool:
    """Same region through the quartics ``Xi+-`` on the (x, z) plane."""
    x, z = xz_from_s(sp, params)
    xp, xm = xi_pm(x, z, c, params)
    return (xp >= 0.0 and xm <= 0.0
            and sp.s1 ** 2 >= params.a ** 2 and sp.s2 ** 2 <= params.b ** 2)


# --- change of variables -----------------------------------------------------

def point_from_t(st: SeparatedStateO, c: SubsystemOConstants, params: BodyParams):
    """``(x, xi, mu)`` on the branch; complex values (real on admissible branches).

    With ``U_i = K_i L_i`` the second radical enters with the opposite sign,
    which keeps these values consistent with the configuration formulas.
    """
    t1, t2 = st.t1, st.t2
    if t1 + t2 == 0.0:
        raise DegenerateError("t1 + t2 = 0")
    tw = radical_tower(st, c, params)
    sigma = sigma_of(c.tau, params)
    st_ = _csqrt(c.tau)
    U1, U2 = tw.U1, tw.U2
    den = t1 + t2
    x = st_ * (U1 - U2) / den
    if abs(x) == 0.0:
        raise DegenerateError("x = 0 on this branch (U1 = U2)")
    xi = (t1 * t2 + sigma + U1 * U2) / den
    mu = st_ * (t2 * U1 + t1 * U2) / den
    return x, xi, mu


def t_identity_residuals(st: SeparatedStateO, c, params) -> dict:
    """Residuals of the identities relating ``(x, xi, mu)`` and ``(t1, t2)``."""
    t1, t2 = st.t1, st.t2
    x, xi, mu = point_from_t(st, c, params)
    tw = radical_tower(st, c, params)
    sigma = sigma_of(c.tau, params)
    U1, U2 = tw.U1, -tw.U2
    den = t1 + t2
    # each residual is relative to the size of the terms that cancel in it
    out = {}
    lhs = x * mu
    rhs = (t1 - t2) / den * c.tau * xi
    rt = abs(cmath.sqrt(c.tau))
    x_terms = rt * (abs(U1) + abs(U2)) / abs(den)
    mu_terms = rt * (abs(t2 * U1) + abs(t1 * U2)) / abs(den)
    out["x_mu"] = abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs), x_terms * mu_terms)
    a, b = t1 * t2 + sigma, U1 * U2
    prod = (a + b) * (a - b) / den ** 2
    out["sigma"] = abs(prod - sigma) / max(1.0, abs(sigma), (abs(a) ** 2 + abs(b) ** 2) / den ** 2)
    l31 = (a - b) * (t1 - t2) ** 2
    r31 = (U1 + U2) ** 2 * (t1 * t2 - sigma - b)
    out["ratio"] = abs(l31 - r31) / max(1.0, abs(l31), abs(r31))
    mu2 = c.tau * xi * xi + sigma * x * x - c.tau * sigma
    terms = abs(c.tau * xi * xi) + abs(sigma * x * x) + abs(c.tau * sigma)
    out["mu_sq"] = abs(mu * mu - mu2) / max(1.0, abs(mu * mu), terms)
    return out


def mu_split(x, xi, c: SubsystemOConstants, params: BodyParams) -> tuple[complex, complex]:
    """``mu1, mu2`` from the sum/product system; ``Im mu1 >= 0`` convention."""
    if c.s == 0.0:
        raise DomainError("s = 0")
    pol = o_polynomials(x, xi, c, params)
    a = _csqrt(pol.Psi1)
    b = _csqrt(pol.Psi2)
    m1 = 2.0 * c.s * c.tau + (a + b) ** 2 / (8.0 * c.s)
    m2 = 2.0 * c.s * c.tau + (a - b) ** 2 / (8.0 * c.s)
    if m1.imag < 0.0 or (m1.imag == 0.0 and m1.real < m2.real):
        m1, m2 = m2, m1
    return m1, m2


def mu_from_t(st: SeparatedStateO, c, params) -> tuple[complex, complex]:
    tw = radical_tower(st, c, params)
    s, tau = c.s, c.tau
    base = 4.0 * s * s * tau + tw.U1 * tw.U2
    vv = tw.V1 * tw.V2
    f = tw.R ** 2 / (2.0 * s * (st.t1 + st.t2) ** 2)
    return f * (base - vv), f * (base + vv)


def xy_complex_from_t(st: SeparatedStateO, c: SubsystemOConstants, params: BodyParams):
    """``(x1, x2, y1, y2, z1, z2)`` on the branch."""
    t1, t2 = st.t1, st.t2
    s, tau = c.s, c.tau
    tw = radical_tower(st, c, params)
    p2, r, r2, r4 = params.p2, params.r, params.r2, params.r4
    uu = tw.U1 * tw.U2
    vv = tw.V1 * tw.V2
    mn = tw.M1 * tw.N1 * tw.M2 * tw.N2
    d_plus = 4.0 * s * s * tau + uu + vv
    d_minus = 4.0 * s * s * tau + uu - vv
    if abs(d_plus) == 0.0 or abs(d_minus) == 0.0:
        raise DegenerateError("vanishing denominator 4 s^2 tau + U1 U2 +- V1 V2")
    base = (t1 + tau) * (t2 + tau) - r4
    x1 = 2.0 * s * tau / r2 * (base + mn) / d_plus
    x2 = 2.0 * s * tau / r2 * (base - mn) / d_minus
    ybase = tau * (t1 + t2 - 2.0 * p2 + 2.0 * tau) - uu
    y1 = 2.0 * s * (ybase + mn) / d_plus
    y2 = 2.0 * s * (ybase - mn) / d_minus
    f = tw.R / (SQRT2 * r * (t1 + t2))
    z1 = f * (tw.M1 * tw.M2 + tw.N1 * tw.N2)
    z2 = f * (tw.M1 * tw.M2 - tw.N1 * tw.N2)
    return x1, x2, y1, y2, z1, z2


def w_from_t(st: SeparatedStateO, c: SubsystemOConstants, params: BodyParams, family: str = "accepted"):
    """Angular-velocity chart variables ``(w1, w2, w3)``.

    ``family`` selects the accepted formulas, their negative (``"eps_plus"``)
    or the opposite-sign family (``"rejected_plus"``, ``"rejected_minus"``),
    the latter three kept to show they violate the linear relations on O.
    """
    t1, t2 = st.t1, st.t2
    s = c.s
    tw = radical_tower(st, c, params)
    r = params.r
    U1, U2, V1, V2 = tw.U1, tw.U2, tw.V1, tw.V2
    M1, M2, N1, N2 = tw.M1, tw.M2, tw.N1, tw.N2
    den_a = M2 * N1 - M1 * N2
    den_b = M2 * N1 + M1 * N2
    if abs(den_a) == 0.0 or abs(den_b) == 0.0 or abs(U1 + U2) == 0.0:
        raise DegenerateError("vanishing denominator in the angular velocity formulas")
    w3 = (M2 * N2 * V1 - M1 * N1 * V2) / (SQRT2 * tw.rst * (U1 + U2))
    if family in ("accepted", "eps_plus"):
        k = r * tw.R / (2.0 * s * tw.rst * (t1 + t2))
        w1 = k * (U1 * V2 + U2 * V1) / den_a
        w2 = k * (U1 * V2 - U2 * V1) / den_b
        if family == "eps_plus":
            w1, w2 = -w1, -w2
    elif family in ("rejected_plus", "rejected_minus"):
        pm = 1.0 if family == "rejected_plus" else -1.0
        rs = tw.rst / _csqrt(c.tau)
        k = r * tw.R / (rs * (t1 + t2))
        w1 = pm * k * (V1 - V2) / den_a
        w2 = -pm * k * (V1 + V2) / den_b
    else:
        raise ValueError(f"unknown family {family!r}")
    return w1, w2, w3


def linear_relation_residual(cs_vals, w, s: float) -> float:
    """Residual of the two linear relations in ``w`` that hold on O."""
    x1, x2, y1, y2, z1, z2 = cs_vals
    w1, w2, w3 = w
    e1 = (y2 + 2.0 * s) * w1 + x1 * w2 + z1 * w3
    e2 = x2 * w1 + (y1 + 2.0 * s) * w2 + z2 * w3
    scale = max(1.0, abs(x1 * w2), abs(y2 * w1), abs(z1 * w3))
    return max(abs(e1), abs(e2)) / scale


def complex_from_t(st: SeparatedStateO, c, params) -> ComplexState:
    x1, x2, y1, y2, z1, z2 = xy_complex_from_t(st, c, params)
    w1, w2, w3 = w_from_t(st, c, params)
    return ComplexState(x1, x2, y1, y2, z1, z2, w1, w2, w3)


def _real_formulas(t1, t2, tw: RadicalTowerO, c, params):
    """Direct real-variable formulas; works on scalars or numpy arrays."""
    s, tau = c.s, c.tau
    p2, r, r2 = params.p2, params.r, params.r2
    U1, U2 = tw.K1 * tw.L1, tw.K2 * tw.L2
    R = (tw.K1 * tw.K2 + tw.L1 * tw.L2) / SQRT2
    V1, V2, M1, M2, N1, N2, rst = tw.V1, tw.V2, tw.M1, tw.M2, tw.N1, tw.N2, tw.rst
    A = ((t1 + tau + r2) * (t2 + tau + r2) - 2.0 * (p2 + r2) * r2) * tau
    B = ((t1 + tau - r2) * (t2 + tau - r2) + 2.0 * (p2 - r2) * r2) * tau
    D = 4.0 * r2 * s * tau * (U1 + U2) ** 2
    mn = M1 * N1 * M2 * N2
    vv = V1 * V2
    q = 4.0 * s * s * tau + U1 * U2
    a1 = ((A - r2 * U1 * U2) * q - (tau + r2) * mn * vv) / D
    a2 = 1j * ((A - r2 * U1 * U2) * vv - q * (tau + r2) * mn) / D
    a3 = R / (r * SQRT2) * M1 * M2 / (t1 + t2)
    b1 = 1j * ((B + r2 * U1 * U2) * vv - q * (tau - r2) * mn) / D
    b2 = -((B + r2 * U1 * U2) * q - (tau - r2) * mn * vv) / D
    b3 = -1j * R / (r * SQRT2) * N1 * N2 / (t1 + t2)
    dd = t1 * t1 - t2 * t2
    o1 = R / (4.0 * r * s * rst) * (M2 * N1 * U1 * V2 + M1 * N2 * U2 * V1) / dd
    o2 = -1j * R / (4.0 * r * s * rst) * (M2 * N1 * U2 * V1 + M1 * N2 * U1 * V2) / dd
    o3 = (U1 - U2) / (SQRT2 * rst) * (M2 * N2 * V1 - M1 * N1 * V2) / dd
    return [o1, o2, o3, a1, a2, a3, b1, b2, b3]


def _check_denominators(t1, t2, tw):
    if t1 == t2 or t1 == -t2:
        raise DegenerateError("t1 = +-t2: denominators vanish")
    if abs(tw.U1 + tw.U2) == 0.0:
        raise DegenerateError("U1 + U2 = 0: denominators vanish")


def reconstruct_o_complex(st: SeparatedStateO, c: SubsystemOConstants, params: BodyParams) -> np.ndarray:
    """Complex values of the nine real-variable formulas (no reality check)."""
    tw = radical_tower(st, c, params)
    _check_denominators(st.t1, st.t2, tw)
    return np.array(_real_formulas(st.t1, st.t2, tw, c, params), dtype=complex)


def reconstruct_o(st: SeparatedStateO, c: SubsystemOConstants, params: BodyParams,
                  tol: float = 1e-8) -> PhaseState:
    """Real phase state at ``(t1, t2)`` on the branch ``st.signs``.

    Raises RealityViolation when the branch is not real at this point.
    """
    y = reconstruct_o_complex(st, c, params)
    scale = max(1.0, float(np.max(np.abs(y))))
    defect = float(np.max(np.abs(y.imag)))
    if defect > tol * scale:
        raise RealityViolation(f"branch {st.signs} not real at t=({st.t1}, {st.t2}): defect {defect:.2e}")
    return PhaseState.from_array(y.real)


# --- branch enumeration -------------------------------------------------------

_ALL_SIGNS = np.array(list(itertools.product((1, -1), repeat=11)), dtype=float)


@dataclass
class BranchO:
    signs: tuple
    state: PhaseState


def _cell_key(t1, t2, c, params):
    d = OConstantsDerived.from_constants(c, params)
    key = [c.s, c.tau, params.a, params.b]
    for t in (t1, t2):
        q = radicands_o(t, c, params, d)
        for name in ("V", "M", "N"):
            key.append(int(np.sign(q[name])))
        if d.sigma >= 0.0:
            key.append(int(np.sign(q["K"].real)))
            key.append(int(np.sign(q["L"].real)))
    key.append(int(np.sign(t1 + t2)))
    key.append(int(np.sign(t1 - t2)))
    return tuple(key)


_BRANCH_CACHE: dict = {}


def _evaluate_signs(t1, t2, signs, c, params):
    d = OConstantsDerived.from_constants(c, params)
    q1 = radicands_o(t1, c, params, d)
    q2 = radicands_o(t2, c, params, d)
    base = np.array([_csqrt(c.s * c.tau), _csqrt(q1["K"]), _csqrt(q2["K"]), _csqrt(q1["L"]), _csqrt(q2["L"]),
                     _csqrt(q1["V"]), _csqrt(q2["V"]), _csqrt(q1["M"]), _csqrt(q2["M"]),
                     _csqrt(q1["N"]), _csqrt(q2["N"])])
    vals = signs * base[None, :]
    tw = RadicalTowerO(*[vals[:, i] for i in range(11)])
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.array(_real_formulas(t1, t2, tw, c, params), dtype=complex).T
    return y


def enumerate_branches(t1: float, t2: float, c: SubsystemOConstants, params: BodyParams,
                       tol: float = 1e-8, use_cache: bool = True) -> list:
    """Distinct real states over all sign choices at ``(t1, t2)``.

    Each distinct state is reported once with one representative sign tuple.
    The admissible representatives are cached per cell (fixed radicand sign
    pattern) and re-validated at every call.
    """
    _check(c, params)
    if t1 == t2 or t1 == -t2:
        raise DegenerateError("t1 = +-t2")
    key = _cell_key(t1, t2, c, params)
    cached = _BRANCH_CACHE.get(key) if use_cache else None
    signs = cached if cached is not None else _ALL_SIGNS
    y = _evaluate_signs(t1, t2, signs, c, params)
    finite = np.all(np.isfinite(y), axis=1)
    scale = np.maximum(1.0, np.max(np.abs(np.where(np.isfinite(y), y, 0.0)), axis=1))
    real = finite & (np.max(np.abs(y.imag), axis=1) <= tol * scale)
    out, seen = [], []
    for k in np.nonzero(real)[0]:
        yr = y[k].real
        if any(np.max(np.abs(yr - z)) <= 1e-9 * scale[k] for z in seen):
            continue
        seen.append(yr)
        out.append(BranchO(tuple(int(v) for v in signs[k]), PhaseState.from_array(yr)))
    if cached is not None and len(out) < len(cached):
        return enumerate_branches(t1, t2, c, params, tol, use_cache=False)
    if use_cache and cached is None and out:
        _BRANCH_CACHE[key] = np.array([b.signs for b in out], dtype=float)
    return out


def admissibility_report(t1: float, t2: float, c: SubsystemOConstants, params: BodyParams) -> list[str]:
    """Radicands whose sign rules out real motion at ``(t1, t2)``; empty if admissible.

    The separated equations need ``F(t_i) >= 0`` for both coordinates; when
    that fails the offending factors are named.
    """
    d = OConstantsDerived.from_constants(c, params)
    bad = []
    for i, t in enumerate((t1, t2), start=1):
        q = radicands_o(t, c, params, d)
        f = separated_f(t, c, params, d)
        if f < 0.0:
            parts = [f"V{i}^2={q['V']:.6g}", f"U{i}^2={(q['K'] * q['L']).real:.6g}",
                     f"M{i}^2={q['M']:.6g}", f"N{i}^2={q['N']:.6g}"]
            bad.append(f"F(t{i})={f:.6g} < 0 [" + ", ".join(parts) + "]")
    if not bad and not enumerate_branches(t1, t2, c, params):
        bad.append("no sign choice of the radical tower gives a real state")
    return bad


# --- separated motion ---------------------------------------------------------

def separated_f(t, c: SubsystemOConstants, params: BodyParams, d: OConstantsDerived | None = None) -> float:
    """``F(t) = (4 s^2 chi^2 - t^2)(t^2 - sigma)(r^4 - (t + tau)^2) / (2 s tau)``."""
    d = d or OConstantsDerived.from_constants(c, params)
    q = radicands_o(t, c, params, d)
    return float(q["V"] * (t * t - d.sigma) * (-(q["M"] * q["N"])) / (2.0 * c.s * c.tau))


def separated_df(t, c: SubsystemOConstants, params: BodyParams, d: OConstantsDerived | None = None) -> float:
    d = d or OConstantsDerived.from_constants(c, params)
    v = 4.0 * c.s ** 2 * d.chi ** 2 - t * t
    u = t * t - d.sigma
    w = params.r4 - (t + c.tau) ** 2
    dv, du, dw = -2.0 * t, 2.0 * t, -2.0 * (t + c.tau)
    return (dv * u * w + v * du * w + v * u * dw) / (2.0 * c.s * c.tau)


def admissible_intervals(c: SubsystemOConstants, params: BodyParams, pad: float = 1.0) -> list[tuple[float, float]]:
    """Closed intervals where ``F(t) >= 0``; unbounded tails are cut ``pad`` past the last root."""
    d = OConstantsDerived.from_constants(c, params)
    roots = [2.0 * abs(c.s) * d.chi, -2.0 * abs(c.s) * d.chi, -c.tau - params.r2, params.r2 - c.tau]
    if d.sigma >= 0.0:
        roots += [math.sqrt(d.sigma), -math.sqrt(d.sigma)]
    roots = sorted(set(roots))
    edges = [roots[0] - pad] + roots + [roots[-1] + pad]
    out = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo > 1e-12 and separated_f(0.5 * (lo + hi), c, params, d) > 0.0:
            if out and out[-1][1] == lo:
                out[-1] = (out[-1][0], hi)
            else:
                out.append((lo, hi))
    return out


def sample_admissible_o(rng: np.random.Generator, c: SubsystemOConstants, params: BodyParams,
                        margin: float = 0.0, tries: int = 1000):
    """Random ``(t1, t2, branches)`` with at least one real branch.

    ``margin`` keeps both coordinates that far inside their intervals.
    """
    iv = [(lo + margin, hi - margin) for lo, hi in admissible_intervals(c, params) if hi - lo > 2 * margin]
    if not iv:
        raise AdmissibilityError("no admissible interval for the separated coordinates", ["F"])
    for _ in range(tries):
        i, j = rng.integers(len(iv)), rng.integers(len(iv))
        t1, t2 = rng.uniform(*iv[i]), rng.uniform(*iv[j])
        if abs(t1 - t2) < 1e-3 or abs(t1 + t2) < 1e-3:
            continue
        t1, t2 = max(t1, t2), min(t1, t2)
        br = enumerate_branches(t1, t2, c, params)
        if br:
            return t1, t2, br
    raise AdmissibilityError("no real branch found for these constants", ["tower"])


def branch_velocities(st: SeparatedStateO, c, params) -> tuple[float, float]:
    """``W_i = (t1 - t2) dt_i/dt`` on the branch: ``i V_i U_i M_i N_i / sqrt(2 s tau)``."""
    tw = radical_tower(st, c, params)
    k = 1j / (SQRT2 * tw.rst)
    w1 = k * tw.V1 * tw.U1 * tw.M1 * tw.N1
    w2 = k * tw.V2 * tw.U2 * tw.M2 * tw.N2
    for w in (w1, w2):
        if abs(w.imag) > 1e-8 * max(1.0, abs(w)):
            raise RealityViolation(f"branch {st.signs} gives a non-real separated velocity")
    return w1.real, w2.real


def separated_rhs_o(st: SeparatedStateO, c: SubsystemOConstants, params: BodyParams) -> tuple[float, float]:
    dt = st.t1 - st.t2
    if dt == 0.0:
        raise DegenerateError("t1 = t2: separated equations are singular")
    w1, w2 = branch_velocities(st, c, params)
    return w1 / dt, w2 / dt


@dataclass
class SeparatedTrajectoryO:
    t: np.ndarray
    tt: np.ndarray
    w: np.ndarray
    signs: np.ndarray
    flips: list
    constants: SubsystemOConstants
    params: BodyParams

    def state(self, k: int) -> SeparatedStateO:
        return SeparatedStateO(float(self.tt[k, 0]), float(self.tt[k, 1]), tuple(self.signs[k]))

    def reconstruct(self) -> np.ndarray:
        return np.array([reconstruct_o(self.state(k), self.constants, self.params).as_array()
                         for k in range(len(self.t))])


def integrate_separated_o(st0: SeparatedStateO, c: SubsystemOConstants, params: BodyParams,
                          t_span, samples, config: IntegrationConfig | None = None) -> SeparatedTrajectoryO:
    """Separated motion on O; bits flip at turning lines, ``t1 = t2`` is fatal."""
    _check(c, params)
    if abs(st0.t1 - st0.t2) < 1e-9:
        raise DegenerateError("start point on t1 = t2")
    bad = admissibility_report(st0.t1, st0.t2, c, params)
    if bad:
        raise AdmissibilityError("inadmissible initial point: " + "; ".join(bad), bad)
    reconstruct_o(st0, c, params)
    d = OConstantsDerived.from_constants(c, params)

    def rad(i, name):
        if name in ("K", "L"):
            return lambda q: float(radicands_o(q[i], c, params, d)[name].real) if d.sigma >= 0.0 \
                else float(q[i] * q[i] - d.sigma)
        return lambda q: float(radicands_o(q[i], c, params, d)[name])

    rads = []
    for i in range(2):
        for name, bit in (("K", 1 + i), ("L", 3 + i), ("V", 5 + i), ("M", 7 + i), ("N", 9 + i)):
            rads.append(Radicand(i, bit, rad(i, name), f"{name}{i + 1}"))

    def velocity(q, bits):
        return branch_velocities(SeparatedStateO(q[0], q[1], bits), c, params)

    def dynamics(q, w):
        dt = q[0] - q[1]
        return (np.asarray(w) / dt,
                np.array([separated_df(q[0], c, params, d), separated_df(q[1], c, params, d)]) / (2.0 * dt))

    run = integrate_separated([st0.t1, st0.t2], st0.signs, velocity, dynamics, rads, t_span, samples, config)
    return SeparatedTrajectoryO(run.t, run.q, run.v, run.bits, run.flips, c, params)


# --- rank test for the fiber map ---------------------------------------------

def o_fiber_jacobian(state: PhaseState, c: SubsystemOConstants, params: BodyParams) -> np.ndarray:
    """Tangent map of the fiber equations restricted to the fiber directions.

    The fiber over a picture-plane point is parametrized by ``mu1 = u + i v``
    (sum/product equations ``4 s u``, ``u^2 + v^2``) and by ``z1 = p + i q``
    (equations ``4 r^2 p^2 = Phi+``, ``-4 r^2 q^2 = Phi-``). The result is
    block diagonal.
    """
    cs = to_complex(state)
    mu1 = params.r2 * cs.x1 - c.tau * cs.y1
    u, v = mu1.real, mu1.imag
    zp, zq = cs.z1.real, cs.z1.imag
    r2 = params.r2
    jac = np.zeros((4, 4))
    jac[0, 0] = 4.0 * c.s
    jac[1, 0], jac[1, 1] = 2.0 * u, 2.0 * v
    jac[2, 2] = 8.0 * r2 * zp
    jac[3, 3] = -8.0 * r2 * zq
    return jac


def on_o_branch(state: PhaseState, c: SubsystemOConstants, params: BodyParams, tol: float = 1e-8) -> dict:
    """Residuals of a reconstructed state against P, O and the constants."""
    cs = to_complex(state)
    geo = max(abs(v) for v in geometric_residuals(state, params))
    ro = max(residual_o_scaled(cs))
    oc = integrals_o(cs)
    return {"geometric": geo, "relation": ro, "s": abs(oc.s - c.s), "tau": abs(oc.tau - c.tau)}
