import csv
import itertools
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gktop.complex_chart import complex_constraint_residuals, to_complex
from gktop.coordinate_nets import SPoint, generalized_boundary_test, project_xz, sigma_of, t_from_point
from gktop.critical_set import SubsystemOConstants, bifurcation_constants_o, integrals_o, residual_o_scaled
from gktop.errors import AdmissibilityError, BranchError, DegenerateError, DomainError, RealityViolation
from gktop.integrator import IntegrationConfig, integrate_adaptive
from gktop.rigid_core import BodyParams, PhaseState, flow_rhs, general_integrals, geometric_residuals
from gktop.sov_o import (OConstantsDerived, SeparatedStateO, admissible_intervals, branch_velocities,
                         chi_identity_residual, complex_from_t, enumerate_branches, integrate_separated_o,
                         lambda_m_lines, linear_relation_residual, master_identity_residual, mu_from_t, mu_split,
                         o_fiber_jacobian, o_polynomials, p_split, p_split_from_t, point_from_t,
                         reconstruct_o, region_o, region_o_xz, sample_admissible_o,
                         separated_f, separated_rhs_o, t_identity_residuals, w_from_t, xy_complex_from_t)

from conftest import REF_O, REF_PARAMS

P, C = REF_PARAMS, REF_O
D = OConstantsDerived.from_constants(C, P)
CFG = IntegrationConfig(rel_tol=1e-12, abs_tol=1e-14)
FIXTURES = Path(__file__).parent / "fixtures"


def _points(n, seed=0, margin=1e-3):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        t1, t2, br = sample_admissible_o(rng, C, P, margin=margin)
        out.append((t1, t2, br))
    return out


# --- constants and polynomials -------------------------------------------------

def test_reference_constants():
    assert D.sigma == pytest.approx(-0.6384, abs=1e-12)
    assert D.chi == pytest.approx(0.869866, abs=1e-6)
    assert 2 * abs(C.s) * D.chi == pytest.approx(1.04384, abs=1e-5)
    assert D.kappa.real == 0.0


@given(st.floats(0.5, 2), st.floats(0.05, 0.95), st.floats(0.1, 2), st.floats(-2, 2))
def test_chi_identity(a, bf, s, tau):
    p = BodyParams(a, bf * a)
    try:
        assert abs(chi_identity_residual(SubsystemOConstants(s, tau), p)) < 1e-12 * max(1, s * s * abs(tau), p.r4)
    except DomainError:
        pass


def test_theta_vanishing_lines():
    for x in (0.2, 0.9, 1.7):
        assert abs(o_polynomials(x, 2 * C.s * x + 2 * C.s * D.chi, C, P).Theta1) < 1e-14
        assert abs(o_polynomials(x, -2 * C.s * x + 2 * C.s * D.chi, C, P).Theta2) < 1e-14


@given(st.floats(0, 3), st.floats(-3, 3))
def test_phi_difference(x, xi):
    pol = o_polynomials(x, xi, C, P)
    expect = 4 * P.r2 * (xi + C.tau) - 4 * P.r2 * x * x
    assert abs(pol.Phi1 - pol.Phi2 - expect) < 1e-12 * max(1, abs(pol.Phi1), abs(pol.Phi2))


@given(st.floats(0.01, 3), st.floats(-3, 3), st.floats(0.2, 2), st.floats(-2, 2))
def test_master_identity_property(x, xi, s, tau):
    for c in (SubsystemOConstants(s, tau), SubsystemOConstants(-s, tau)):
        try:
            assert master_identity_residual(x, xi, c, P) < 1e-9
        except DomainError:
            pass


def test_master_identity_fault_is_caught(rng):
    worst = max(master_identity_residual(rng.uniform(0.1, 2), rng.uniform(-2, 2), C, P, inject_fault="phi2_sign")
                for _ in range(50))
    assert worst > 1e-3


def test_p_split_factorized():
    for t1, t2, br in _points(50):
        for b in br:
            st_ = SeparatedStateO(t1, t2, b.signs)
            f1, f2 = p_split_from_t(st_, C, P)
            x, xi, mu = point_from_t(st_, C, P)
            q1, q2 = p_split(x.real, xi.real, mu.real, C, P)
            scale = max(1, abs(q1), abs(q2))
            assert abs(f1 - q1) < 1e-9 * scale and abs(f2 - q2) < 1e-9 * scale


# --- region -------------------------------------------------------------------

def test_region_line_routes_agree(rng):
    checked = 0
    for _ in range(1000):
        sp = SPoint(rng.uniform(-3, 3), rng.uniform(-0.5, 0.5))
        try:
            via_xz = region_o_xz(sp, C, P)
        except DomainError:
            continue
        assert via_xz == region_o(sp, C, P)
        checked += 1
    assert checked > 300


def test_region_point_on_lambda_line():
    from gktop.region import Window, lines_o, o_inside, trace_boundary

    inside = o_inside(C, P)
    segs = trace_boundary(lines_o(C, P), inside, Window(-3, 3, -0.6, 0.6))
    lam = [sg for sg in segs if sg.line.startswith("Lambda")]
    assert lam
    for sg in lam:
        ln = next(l for l in lines_o(C, P) if l.name == sg.line)
        m1, m2 = 0.5 * (sg.s1a + sg.s1b), 0.5 * (sg.s2a + sg.s2b)
        assert abs(ln.value(m1, m2)) < 1e-12
        lp, lm, mp, mm = lambda_m_lines(SPoint(m1, m2), C, P)
        assert min(abs(lp), abs(lm)) < 1e-12
        n = np.array([ln.n1, ln.n2])
        assert inside(*(np.array([m1, m2]) + 1e-6 * n)) != inside(*(np.array([m1, m2]) - 1e-6 * n))
        # closed region: the line belongs to it up to rounding
        assert inside(*(np.array([m1, m2]) + 1e-12 * n)) or inside(*(np.array([m1, m2]) - 1e-12 * n))


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_ref_region_golden(tmp_path):
    from gktop.cli import main

    assert main(["region", "--config", str(FIXTURES / "ref_region.json"), "--out", str(tmp_path)]) == 0
    got, want = _read(tmp_path / "region_boundary.csv"), _read(FIXTURES / "ref_region_boundary.csv")
    assert got[0] == want[0] and len(got) == len(want)
    for g, w in zip(got[1:], want[1:]):
        assert g[0] == w[0]
        np.testing.assert_allclose([float(v) for v in g[1:]], [float(v) for v in w[1:]], atol=1e-12)
    assert _read(tmp_path / "region_grid.csv") == _read(FIXTURES / "ref_region_grid.csv")
    names = {row[0] for row in got[1:]}
    assert names <= {"s1=+a", "s1=-a", "s2=+b", "s2=-b", "Lambda+", "Lambda-", "M+", "M-"}


# --- change of variables --------------------------------------------------------

def test_t_identities_random(rng):
    for _ in range(500):
        st_ = SeparatedStateO(*rng.uniform(-3, 3, size=2), tuple(rng.choice([-1, 1], size=11)))
        try:
            vals = t_identity_residuals(st_, C, P)
        except DegenerateError:
            continue
        assert max(vals.values()) < 1e-10


def test_point_from_t_round_trip():
    for t1, t2, br in _points(30):
        for b in br:
            x, xi, mu = point_from_t(SeparatedStateO(t1, t2, b.signs), C, P)
            assert abs(x.imag) < 1e-10 and abs(xi.imag) < 1e-10
            tp = t_from_point(xi.real, abs(x.real), C.tau, D.sigma).ordered()
            assert abs(tp.t1 - t1) < 1e-9 and abs(tp.t2 - t2) < 1e-9


def test_point_from_t_degenerate():
    c = SubsystemOConstants(-0.6, -1.0)  # sigma > 0 here
    k = math.sqrt(sigma_of(-1.0, P))
    with pytest.raises(DegenerateError):
        point_from_t(SeparatedStateO(k, -k), c, P)


def test_mu_split_sum_product(rng):
    for _ in range(500):
        x, xi = rng.uniform(0.05, 2), rng.uniform(-3, 3)
        m1, m2 = mu_split(x, xi, C, P)
        s_sum = (xi * xi - 4 * C.s ** 2 * (x * x - C.tau) - D.sigma) / (2 * C.s)
        prod = C.tau * xi * xi + D.sigma * x * x - C.tau * D.sigma
        assert abs(m1 + m2 - s_sum) < 1e-10 * max(1, abs(s_sum))
        assert abs(m1 * m2 - prod) < 1e-10 * max(1, abs(prod))


def test_mu_routes_agree():
    for t1, t2, br in _points(30):
        for b in br:
            st_ = SeparatedStateO(t1, t2, b.signs)
            x, xi, _ = point_from_t(st_, C, P)
            a = sorted(mu_split(x.real, xi.real, C, P), key=lambda z: (z.real, z.imag))
            bb = sorted(mu_from_t(st_, C, P), key=lambda z: (z.real, z.imag))
            assert max(abs(a[0] - bb[0]), abs(a[1] - bb[1])) < 1e-9


def test_xy_complex_from_t():
    for t1, t2, br in _points(30):
        for b in br:
            st_ = SeparatedStateO(t1, t2, b.signs)
            x1, x2, y1, y2, z1, z2 = xy_complex_from_t(st_, C, P)
            mu1, mu2 = mu_from_t(st_, C, P)
            assert abs(P.r2 * x1 - C.tau * y1 - mu1) < 1e-9 and abs(P.r2 * x2 - C.tau * y2 - mu2) < 1e-9
            cs = complex_from_t(st_, C, P)
            assert max(abs(v) for v in complex_constraint_residuals(cs, P)) < 1e-9
            zz = z1 * z2
            assert abs(zz.imag) < 1e-9 and zz.real > -1e-9
            x, _, _ = point_from_t(st_, C, P)
            assert abs(x1 * x2 - x * x) < 1e-9


# --- reconstruction ---------------------------------------------------------------

def test_sixteen_branches_at_interior_point():
    t1, t2, br = _points(1, seed=3)[0]
    assert len(br) == 16


def test_reconstruction_end_to_end():
    hkg = np.array(bifurcation_constants_o(C, P))
    for t1, t2, br in _points(40, seed=1):
        for b in br:
            state = reconstruct_o(SeparatedStateO(t1, t2, b.signs), C, P)
            assert max(abs(v) for v in geometric_residuals(state, P)) < 1e-9
            cs = to_complex(state)
            assert max(residual_o_scaled(cs)) < 1e-8
            back = integrals_o(cs)
            assert abs(back.s - C.s) < 1e-8 and abs(back.tau - C.tau) < 1e-8
            assert np.max(np.abs(np.array(general_integrals(state, P)) - hkg)) < 1e-8


def test_beta3_vanishes_on_n_root():
    t1 = P.r2 - C.tau
    rng = np.random.default_rng(0)
    iv = admissible_intervals(C, P)
    t2 = rng.uniform(iv[0][0] + 0.1, iv[0][1] - 0.1)
    br = enumerate_branches(t1, t2, C, P)
    assert br
    for b in br:
        assert abs(b.state.beta[2]) < 1e-14


def test_linear_relations_select_family():
    for t1, t2, br in _points(10, seed=4):
        for b in br:
            st_ = SeparatedStateO(t1, t2, b.signs)
            xy = xy_complex_from_t(st_, C, P)
            assert linear_relation_residual(xy, w_from_t(st_, C, P), C.s) < 1e-9
        # the other family misses the relations whatever the signs
        signs = list(itertools.product((1, -1), repeat=11))
        for fam in ("rejected_plus", "rejected_minus", "eps_plus"):
            worst = min(linear_relation_residual(xy_complex_from_t(SeparatedStateO(t1, t2, sg), C, P),
                                                 w_from_t(SeparatedStateO(t1, t2, sg), C, P, fam), C.s)
                        for sg in signs[::7])
            assert worst > 1e-3


def test_sign_tuples_cover_exactly_the_enumerated_states():
    # many sign tuples give the same state; every real one must be enumerated
    t1, t2, br = _points(1, seed=5)[0]
    states = [b.state.as_array() for b in br]
    hit = set()
    for sg in itertools.product((1, -1), repeat=11):
        try:
            y = reconstruct_o(SeparatedStateO(t1, t2, sg), C, P).as_array()
        except (RealityViolation, BranchError):
            continue
        dist = [np.max(np.abs(y - z)) for z in states]
        assert min(dist) < 1e-12
        hit.add(int(np.argmin(dist)))
    assert hit == set(range(len(states)))


# --- separated motion ---------------------------------------------------------------

def test_turning_lines_zero_velocity():
    tv = 2 * abs(C.s) * D.chi
    for t in (tv, P.r2 - C.tau, -C.tau - P.r2):
        assert separated_f(t, C, P) == 0.0


def test_velocity_squares_match_f():
    for t1, t2, br in _points(20, seed=6):
        for b in br:
            w1, w2 = branch_velocities(SeparatedStateO(t1, t2, b.signs), C, P)
            assert abs(w1 * w1 - separated_f(t1, C, P)) < 1e-10 * max(1, abs(w1 * w1))
            assert abs(w2 * w2 - separated_f(t2, C, P)) < 1e-10 * max(1, abs(w2 * w2))


def test_chain_rule_against_direct_flow():
    for t1, t2, br in _points(5, seed=7, margin=0.05):
        st_ = SeparatedStateO(t1, t2, br[0].signs)
        state = br[0].state
        h = 1e-4
        traj = integrate_adaptive(flow_rhs, state.as_array(), (0, 2 * h), CFG)

        def t_at(t):
            cs = to_complex(PhaseState.from_array(traj(t)))
            pp = project_xz(cs)
            return t_from_point(pp.x * pp.x + pp.z * pp.z - C.tau, pp.x, C.tau, D.sigma).ordered()

        a, b = t_at(0.0), t_at(2 * h)
        fd = ((b.t1 - a.t1) / (2 * h), (b.t2 - a.t2) / (2 * h))
        mid = t_at(h)
        v = separated_rhs_o(SeparatedStateO(mid.t1, mid.t2, st_.signs), C, P)
        for f, g in zip(fd, v):
            assert abs(f - g) < 1e-5 * max(1, abs(g))


def test_commutation_short_step():
    for t1, t2, br in _points(5, seed=8, margin=0.01):
        b = br[np.random.default_rng(0).integers(len(br))]
        st0 = SeparatedStateO(t1, t2, b.signs)
        run = integrate_separated_o(st0, C, P, (0, 0.05), [0.0, 0.05], CFG)
        direct = integrate_adaptive(flow_rhs, b.state.as_array(), (0, 0.05), CFG).final
        assert np.max(np.abs(run.reconstruct()[-1] - direct)) < 1e-6


def test_commutation_with_turning_points():
    tv = 2 * abs(C.s) * D.chi
    t1, t2 = tv - 0.01, -1.5
    br = enumerate_branches(t1, t2, C, P)
    st0 = SeparatedStateO(t1, t2, br[0].signs)
    ts = np.linspace(0, 1.0, 21)
    run = integrate_separated_o(st0, C, P, (0, 1.0), ts, CFG)
    assert run.flips
    direct = integrate_adaptive(flow_rhs, br[0].state.as_array(), (0, 1.0), CFG).sample(ts)
    assert np.max(np.abs(run.reconstruct() - direct)) < 1e-6


def test_separated_errors():
    with pytest.raises(DegenerateError):
        separated_rhs_o(SeparatedStateO(0.5, 0.5), C, P)
    with pytest.raises(AdmissibilityError):
        integrate_separated_o(SeparatedStateO(3.0, -0.5), C, P, (0, 1), [0, 1])
    with pytest.raises(DegenerateError):
        integrate_separated_o(SeparatedStateO(0.5, 0.5), C, P, (0, 1), [0, 1])


# --- rank test and region projection ------------------------------------------------

def test_projection_inside_region():
    for t1, t2, br in _points(50, seed=9, margin=1e-6):
        for b in br:
            pp = project_xz(to_complex(b.state))
            from gktop.coordinate_nets import s_from_xz
            sp = s_from_xz(pp.x, pp.z, P)
            assert region_o(SPoint(sp.s1, sp.s2), C, P) or min(abs(v) for v in lambda_m_lines(sp, C, P)) < 1e-6


def _root_values():
    tv = 2 * abs(C.s) * D.chi
    return {"V": tv, "N": P.r2 - C.tau, "M": -C.tau - P.r2, "V-": -tv}


def test_rank_drops_on_radicand_roots():
    iv = admissible_intervals(C, P)
    rng = np.random.default_rng(11)
    for name, root in _root_values().items():
        other = [v for v in iv if not (v[0] - 1e-12 <= root <= v[1] + 1e-12)]
        for _ in range(5):
            lo, hi = other[0]
            t_other = rng.uniform(lo + 0.05, hi - 0.05)
            br = enumerate_branches(max(root, t_other), min(root, t_other), C, P)
            assert br, name
            for b in br:
                assert generalized_boundary_test(lambda s: o_fiber_jacobian(s, C, P), b.state), name


def test_rank_full_in_interior():
    for t1, t2, br in _points(30, seed=12, margin=1e-6):
        for b in br:
            assert not generalized_boundary_test(lambda s: o_fiber_jacobian(s, C, P), b.state)
