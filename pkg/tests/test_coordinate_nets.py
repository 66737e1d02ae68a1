import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from gktop.complex_chart import ComplexState, to_complex
from gktop.coordinate_nets import (SPoint, generalized_boundary_test, line_conic_double_point, phi_pm,
                                   project_xz, s_differentials, s_from_xz, s_rectangle_check, sigma_of,
                                   st_link, t_from_point, t_quadratic, xz_from_s)
from gktop.critical_set import SubsystemOConstants
from gktop.errors import DegenerateError, DomainError, RealityViolation
from gktop.rigid_core import BodyParams, PhaseState, random_state_on_p
from gktop.sov_o import OConstantsDerived, mu_split

from conftest import REF_O, REF_PARAMS

P = REF_PARAMS


def test_project_rest_state():
    pp = project_xz(to_complex(PhaseState([0, 0, 0], [1, 0, 0], [0, 0.4, 0])))
    assert pp.x == pytest.approx(0.6) and pp.y == pytest.approx(1.4) and pp.z == 0


def test_project_modulus():
    cs = ComplexState(2j, -2j, 1, 1, 0, 0, 0, 0, 0)
    assert project_xz(cs).x == pytest.approx(2.0)


def test_project_reality_error():
    with pytest.raises(RealityViolation):
        project_xz(ComplexState(1 + 1j, 1, 1, 1, 0, 0, 0, 0, 0))


def test_ellipsoid_and_rectangle_on_p(rng):
    for _ in range(1000):
        pp = project_xz(to_complex(random_state_on_p(rng, P)))
        assert abs(pp.ellipsoid_residual(P)) < 1e-12
        if pp.x > 1e-9:
            sp = s_from_xz(pp.x, pp.z, P)
            assert sp.s1 ** 2 >= P.a ** 2 - 1e-9 and sp.s2 ** 2 <= P.b ** 2 + 1e-9


def test_s_from_xz_examples():
    sp = s_from_xz(P.r, 0.0, P)
    assert sp.s1 == pytest.approx(P.r) and sp.s2 == pytest.approx(0.0, abs=1e-15)
    sp = s_from_xz(1.0, 0.0, P)
    assert sp.s1 == pytest.approx(0.92) and sp.s2 == pytest.approx(0.08)
    # inverse relations
    assert P.r2 / (sp.s1 - sp.s2) == pytest.approx(1.0)
    assert P.r2 * (sp.s1 + sp.s2) / (sp.s1 - sp.s2) == pytest.approx(1.0)


def test_s_from_xz_axis():
    with pytest.raises(DomainError):
        s_from_xz(0.0, 0.3, P)


def test_differentials_vs_finite_differences(rng):
    for _ in range(100):
        x, z = rng.uniform(0.2, 2.0), rng.uniform(-2.0, 2.0)
        jac = s_differentials(x, z, P)
        errs = []
        for h in (1e-3, 5e-4):
            fd = np.empty((2, 2))
            for j, (dx, dz) in enumerate(((h, 0), (0, h))):
                sp_p, sp_m = s_from_xz(x + dx, z + dz, P), s_from_xz(x - dx, z - dz, P)
                fd[:, j] = [(sp_p.s1 - sp_m.s1) / (2 * h), (sp_p.s2 - sp_m.s2) / (2 * h)]
            errs.append(np.max(np.abs(fd - jac)))
        # central differences: error falls like h^2
        assert errs[1] < 0.3 * errs[0] + 1e-10


def test_xz_from_s_examples():
    x, z = xz_from_s(SPoint(P.r, 0.0), P)
    assert x == pytest.approx(P.r) and z == pytest.approx(0.0, abs=1e-7)
    with pytest.raises(DomainError):
        xz_from_s(SPoint(1.0, 1.0), P)


def test_xz_round_trip(rng):
    for _ in range(1000):
        x, z = rng.uniform(0.05, 3.0), rng.uniform(0.0, 3.0)
        sp = s_from_xz(x, z, P)
        x2, z2 = xz_from_s(sp, P)
        assert abs(x2 - x) < 1e-12 * max(1, x) and abs(z2 - z) < 1e-10 * max(1, z)


def test_rectangle_examples():
    assert s_rectangle_check(SPoint(1.2, 0.1), P)
    assert not s_rectangle_check(SPoint(0.9, 0.1), P)
    assert not s_rectangle_check(SPoint(1.2, 0.5), P)


def test_rectangle_matches_quartic_signs(rng):
    agree = 0
    for _ in range(1000):
        sp = SPoint(rng.uniform(-3, 3), rng.uniform(-1, 1))
        if sp.s1 - sp.s2 == 0:
            continue
        try:
            x, z = xz_from_s(sp, P)
        except DomainError:
            continue
        fp, fm = phi_pm(x, z, P)
        assert (fp >= 0 and fm <= 0) == s_rectangle_check(sp, P)
        agree += 1
    assert agree > 200


def test_t_from_point_example():
    tp = t_from_point(0.0, 2.0, 1.0, 1.0)
    assert tp.t1 == pytest.approx(-2 / math.sqrt(3), abs=1e-14)
    assert tp.t2 == pytest.approx(2 / math.sqrt(3), abs=1e-14)
    od = tp.ordered()
    assert od.t1 >= od.t2


def test_t_from_point_axis():
    tp = t_from_point(0.7, 0.0, 1.3, -0.2)
    assert tp.t1 == tp.t2 == pytest.approx(0.7)


def test_t_from_point_errors():
    with pytest.raises(DegenerateError):
        t_from_point(0.1, 1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        t_from_point(0.0, 0.5, 1.0, 1.0)


@given(st.floats(-3, 3), st.floats(0.01, 3), st.floats(-2, 2), st.floats(-2, 2))
def test_t_roots_satisfy_quadratic(xi, x, tau, sigma):
    assume(abs(tau - x * x) > 1e-2 and abs(tau) > 1e-3)
    assume(tau * xi * xi + sigma * x * x - tau * sigma >= 0)
    tp = t_from_point(xi, x, tau, sigma)
    for t in (tp.t1, tp.t2):
        scale = max(1.0, t * t, abs(tau * xi / (tau - x * x) * t))
        assert abs(t_quadratic(t, xi, x, tau, sigma)) < 1e-10 * scale
    # Vieta
    den = tau - x * x
    s_vieta = 2 * tau * xi / den
    p_vieta = (tau * xi * xi + sigma * x * x) / den
    assert abs(tp.t1 + tp.t2 - s_vieta) < 1e-12 * max(1, abs(s_vieta), abs(tp.t1))
    assert abs(tp.t1 * tp.t2 - p_vieta) < 1e-10 * max(1, abs(p_vieta), tp.t1 ** 2, tp.t2 ** 2)


def test_sigma_definition():
    assert sigma_of(1.2, P) == pytest.approx(1.44 - 2 * 1.16 * 1.2 + 0.84 ** 2)


def test_st_link_consistency(rng):
    tau = 1.2
    for _ in range(200):
        x, z = rng.uniform(0.1, 2.0), rng.uniform(0.0, 2.0)
        sp = s_from_xz(x, z, P)
        xi, x2 = st_link(sp, tau, P)
        assert abs(x2 - x) < 1e-12 and abs(xi - (x * x + z * z - tau)) < 1e-12
    with pytest.raises(DegenerateError):
        st_link(SPoint(0.3, 0.3), tau, P)


@pytest.mark.parametrize("tau", [1.2, -0.5, 2.5])
def test_rectangle_edges_are_coordinate_lines(tau):
    sigma = sigma_of(tau, P)
    rng = np.random.default_rng(1)
    targets = (-tau - P.r2, -tau + P.r2)
    for fixed in ("s1", "s2"):
        for val in ((P.a, -P.a) if fixed == "s1" else (P.b, -P.b)):
            hits = 0
            for _ in range(40):
                free = rng.uniform(-P.b, P.b) if fixed == "s1" else rng.uniform(P.a, 3.0) * rng.choice([-1, 1])
                sp = SPoint(val, free) if fixed == "s1" else SPoint(free, val)
                xi, x = st_link(sp, tau, P)
                if abs(tau - x * x) < 1e-6 or tau * xi * xi + sigma * x * x - tau * sigma < 0:
                    continue
                tp = t_from_point(xi, x, tau, sigma)
                d = min(abs(t - g) for t in (tp.t1, tp.t2) for g in targets)
                assert d < 1e-10 * max(1, abs(tp.t1), abs(tp.t2))
                hits += 1
            assert hits > 0


def _rand_case(rng):
    a = rng.uniform(0.5, 2)
    p = BodyParams(a, rng.uniform(0.1, 0.9) * a)
    while True:
        c = SubsystemOConstants(rng.choice([-1, 1]) * rng.uniform(0.2, 2), rng.choice([-1, 1]) * rng.uniform(0.2, 2))
        try:
            return p, c, OConstantsDerived.from_constants(c, p)
        except DomainError:
            pass


def test_separating_lines_tangent_to_conic(rng):
    for _ in range(100):
        p, c, d = _rand_case(rng)
        sig = sigma_of(c.tau, p)
        for e1 in (1, -1):
            for e2 in (1, -1):
                assert abs(line_conic_double_point(e2 * 2 * c.s * d.chi, e1 * 2 * c.s, c.tau, sig)) < 1e-8


def test_rectangle_lines_tangent_to_conic(rng):
    for _ in range(100):
        p, c, _ = _rand_case(rng)
        sig = sigma_of(c.tau, p)
        for val in (p.a, -p.a):
            assert abs(line_conic_double_point(-c.tau - p.r2, 2 * val, c.tau, sig)) < 1e-8
        for val in (p.b, -p.b):
            assert abs(line_conic_double_point(p.r2 - c.tau, 2 * val, c.tau, sig)) < 1e-8


def test_non_tangent_line_detected():
    assert abs(line_conic_double_point(0.0, 0.0, 1.2, -0.6384)) > 0.1


def test_rank_test_basic():
    assert not generalized_boundary_test(lambda p: np.eye(3), None)
    assert generalized_boundary_test(lambda p: np.diag([1.0, 2.0, 0.0]), None)
    assert generalized_boundary_test(lambda p: np.zeros((2, 2)), None)


def test_rank_test_on_mu_fiber():
    # the fiber over (xi, x) is mu1 = u + i v with 2u = S and u^2 + v^2 = P;
    # the tangent map [[2, 0], [2u, 2v]] drops rank where the two roots merge
    jac = lambda uv: np.array([[2.0, 0.0], [2.0 * uv[0], 2.0 * uv[1]]])
    assert generalized_boundary_test(jac, (0.4, 0.0))
    assert not generalized_boundary_test(jac, (0.4, 0.3))


def test_mu_roots_merge_on_separating_lines():
    d = OConstantsDerived.from_constants(REF_O, P)
    s = REF_O.s
    for x in (0.3, 0.7, 1.1):
        for e1 in (1, -1):
            for e2 in (1, -1):
                m1, m2 = mu_split(x, e1 * 2 * s * x + e2 * 2 * s * d.chi, REF_O, P)
                assert abs(m1 - m2) < 1e-6
        m1, m2 = mu_split(x, 0.05, REF_O, P)
        assert abs(m1 - m2) > 1e-2
