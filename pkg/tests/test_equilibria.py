from dataclasses import replace

import numpy as np
import pytest

from sirsat import ControlPair, Kind, ModelParams, SirState, Stability, state_rhs
from sirsat import equilibria as eq

from conftest import FIGURE1, FIGURE1_U, TABLE2

U55 = ControlPair(0.5, 0.5)


def with_r0(p, u, r0):
    return replace(p, beta=eq.beta_for_r0(r0, p, u))


def bisect(f, lo, hi, iters=200):
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def gap_roots_by_scan(p, u, I_max, n=200_000):
    """Roots of H on (0, I_max] located by sign changes on a log grid, then bisection."""
    grid = np.concatenate([[1e-12], np.geomspace(1e-9, I_max, n)])
    H = np.array([eq.equilibrium_gap(I, p, u)[0] for I in grid])
    idx = np.nonzero(np.sign(H[:-1]) != np.sign(H[1:]))[0]
    return [bisect(lambda I: eq.equilibrium_gap(I, p, u)[0], grid[i], grid[i + 1]) for i in idx]


# -- reproduction number and DFE ----------------------------------------------

def test_dfe_figure1():
    x = eq.disease_free_equilibrium(FIGURE1, 0.5)
    assert x.S == pytest.approx(21.99828413383756, rel=1e-12)
    assert x.I == 0.0
    assert x.R == pytest.approx(282029.2837671482, rel=1e-12)


def test_dfe_no_vaccination():
    x = eq.disease_free_equilibrium(TABLE2, 0.0)
    assert (x.S, x.I, x.R) == (pytest.approx(25000.0), 0.0, 0.0)


def test_r0_table2():
    assert eq.basic_reproduction_number(TABLE2, U55) == pytest.approx(21.473235758950043, rel=1e-12)
    assert eq.basic_reproduction_number(TABLE2, ControlPair(0, 0)) == pytest.approx(3453.038674033149, rel=1e-12)


# -- equilibrium gap and the quadratic ----------------------------------------

def test_gap_at_zero():
    H0, _ = eq.equilibrium_gap(0.0, TABLE2, U55)
    r0 = eq.basic_reproduction_number(TABLE2, U55)
    expected = (TABLE2.removal + TABLE2.r * 0.5) / TABLE2.beta * (r0 - 1)
    assert H0 == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("p,u", [(TABLE2, U55), (FIGURE1, FIGURE1_U), (TABLE2, ControlPair(0.1, 0.9))])
@pytest.mark.parametrize("I", [0.01, 1.0, 30.0])
def test_gap_derivative_finite_difference(p, u, I):
    step = 1e-6
    fd = (eq.equilibrium_gap(I + step, p, u)[0] - eq.equilibrium_gap(I - step, p, u)[0]) / (2 * step)
    assert eq.equilibrium_gap(I, p, u)[1] == pytest.approx(fd, rel=1e-6)


def test_gap_rejects_negative():
    with pytest.raises(ValueError):
        eq.equilibrium_gap(-1.0, TABLE2, U55)


def test_c3_vanishes_at_threshold():
    p = with_r0(TABLE2, U55, 1.0)
    c = eq.endemic_coefficients(p, U55)
    assert abs(c.c3) <= 1e-12 * (0.504 * 0.924)


def test_c1_vanishes_without_treatment():
    assert eq.endemic_coefficients(TABLE2, ControlPair(0.5, 0.0)).c1 == 0.0


@pytest.mark.parametrize("r0", [0.97, 0.99, 1.5, 3.0])
def test_quadratic_roots_match_gap_roots(r0):
    p = with_r0(FIGURE1, FIGURE1_U, r0)
    found = [pt.state.I for pt in eq.endemic_equilibria(p, FIGURE1_U)]
    oracle = gap_roots_by_scan(p, FIGURE1_U, I_max=1e3)
    assert len(found) == len(oracle)
    np.testing.assert_allclose(found, oracle, rtol=1e-9)


def test_sign_c3_matches_threshold():
    rng = np.random.default_rng(7)
    for _ in range(200):
        p = ModelParams(*rng.uniform([1, 1e-3, 0, 1e-3, 0, 0, 0, 0], [200, 1, 2, 0.5, 0.5, 1, 1, 3]))
        u = ControlPair(*rng.uniform(0, 1, 2))
        r0 = eq.basic_reproduction_number(p, u)
        c3 = eq.endemic_coefficients(p, u).c3
        closed = (p.d + u.u1) * (p.removal + p.r * u.u2) * (1 - r0)
        assert c3 == pytest.approx(closed, abs=1e-12 * max(1.0, p.beta * p.A))
        if abs(1 - r0) > 1e-9:
            assert np.sign(c3) == np.sign(1 - r0)


# -- endemic equilibria --------------------------------------------------------

def test_table2_single_endemic_point():
    pts = eq.endemic_equilibria(TABLE2, U55)
    assert len(pts) == 1
    pt = pts[0]
    assert pt.kind is Kind.ENDEMIC and pt.state.I > 0
    assert max(abs(v) for v in state_rhs(pt.state, U55, TABLE2)) < 1e-8
    assert pt.stability is Stability.ASYMPTOTICALLY_STABLE


def test_figure1_two_then_none():
    r0_star = eq.find_r0_star(FIGURE1, FIGURE1_U)
    above = eq.endemic_equilibria(with_r0(FIGURE1, FIGURE1_U, 0.5 * (r0_star + 1)), FIGURE1_U)
    assert len(above) == 2 and above[0].state.I < above[1].state.I
    below = eq.endemic_equilibria(with_r0(FIGURE1, FIGURE1_U, 0.99 * r0_star), FIGURE1_U)
    assert below == []
    assert gap_roots_by_scan(with_r0(FIGURE1, FIGURE1_U, 0.99 * r0_star), FIGURE1_U, 1e3) == []


def test_no_treatment_linear_case():
    u = ControlPair(0.5, 0.0)
    pts = eq.endemic_equilibria(TABLE2, u)
    assert len(pts) == 1
    c = eq.endemic_coefficients(TABLE2, u)
    assert pts[0].state.I == pytest.approx(-c.c3 / c.c2, rel=1e-12)
    assert eq.endemic_equilibria(with_r0(TABLE2, u, 0.8), u) == []


def test_forward_regime_has_no_points_below_one():
    # reference parameters with reduced beta: C2 > 0 and R0 < 1
    p = with_r0(TABLE2, U55, 0.8)
    assert eq.endemic_coefficients(p, U55).c2 > 0
    assert eq.endemic_equilibria(p, U55) == []


# -- Jacobian and DFE stability ------------------------------------------------

def test_jacobian_structure_and_finite_difference():
    x = SirState(120.0, 15.0, 300.0)
    u = ControlPair(0.3, 0.6)
    J = np.array(eq.jacobian(x, u, TABLE2))
    assert J[2, 2] == -TABLE2.d
    base = np.array(x.as_tuple())
    step = 1e-6
    for j in range(3):
        e = np.zeros(3)
        e[j] = step
        plus = np.array(state_rhs(SirState(*(base + e)), u, TABLE2))
        minus = np.array(state_rhs(SirState(*(base - e)), u, TABLE2))
        np.testing.assert_allclose(J[:, j], (plus - minus) / (2 * step), rtol=1e-5, atol=1e-9)


@pytest.mark.parametrize("p,u", [(TABLE2, U55), (FIGURE1, FIGURE1_U), (TABLE2, ControlPair(0, 1))])
def test_dfe_eigenvalues(p, u):
    x = eq.disease_free_equilibrium(p, u.u1)
    lam = sorted(z.real for z in eq.analytic_eigenvalues(x, u, p))
    r0 = eq.basic_reproduction_number(p, u)
    expected = sorted([-p.d, -(p.d + u.u1), (p.removal + p.r * u.u2) * (r0 - 1)])
    np.testing.assert_allclose(lam, expected, rtol=1e-9)
    generic = sorted(np.roots(np.poly(np.array(eq.jacobian(x, u, p)))).real)
    np.testing.assert_allclose(lam, generic, rtol=1e-9)


def test_dfe_unstable_table2():
    assert eq.dfe_stability(TABLE2, U55).stability is Stability.UNSTABLE


def test_dfe_globally_stable_when_dulac_holds():
    p = with_r0(TABLE2, U55, 0.5)
    assert p.alpha >= p.b * 0.5
    res = eq.dfe_stability(p, U55)
    assert res.stability is Stability.GLOBALLY_ASYMPTOTICALLY_STABLE
    assert res.r0 == pytest.approx(0.5)


def test_dfe_locally_stable_without_dulac():
    # alpha < b*u2 blocks the global upgrade
    p = with_r0(replace(FIGURE1, alpha=0.1), FIGURE1_U, 0.5)
    assert eq.dfe_stability(p, FIGURE1_U).stability is Stability.ASYMPTOTICALLY_STABLE


def test_dfe_centre_manifold_branch():
    p = with_r0(FIGURE1, FIGURE1_U, 1.0)
    m, q = p.d + 0.5, p.removal + p.r * 0.5
    assert q * (p.beta + m * p.alpha) < m * p.r * p.b * 0.25
    res = eq.dfe_stability(p, FIGURE1_U)
    assert abs(res.r0 - 1) <= 1e-9
    assert res.a11 < 0 and res.stability is Stability.ASYMPTOTICALLY_STABLE

    p = with_r0(TABLE2, U55, 1.0)
    res = eq.dfe_stability(p, U55)
    assert res.a11 > 0 and res.stability is Stability.UNSTABLE


# -- transcritical and backward bifurcation ------------------------------------

def test_transcritical_threshold():
    th = eq.transcritical_u2_threshold(TABLE2, 0.5)
    assert th.u2 == pytest.approx(47.793174603174606, rel=1e-12)
    assert not th.admissible
    assert eq.transcritical_u2_threshold(with_r0(TABLE2, ControlPair(0.5, 0), 0.9), 0.5) is None
    with pytest.raises(ValueError):
        eq.transcritical_u2_threshold(replace(TABLE2, r=0.0), 0.5)


def test_transcritical_identity_random():
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 50:
        p = ModelParams(*rng.uniform([1, 1e-3, 0, 1e-3, 0, 0, 0.05, 0], [200, 1, 2, 0.5, 0.5, 1, 1, 3]))
        u1 = rng.uniform()
        th = eq.transcritical_u2_threshold(p, u1)
        if th is None:
            continue
        m, q = p.d + u1, p.removal + p.r * th.u2
        assert p.beta * p.A / (m * q) == pytest.approx(1.0, abs=1e-12)
        checked += 1


def test_backward_condition_figure1():
    holds, margin = eq.backward_bifurcation_condition(FIGURE1, 0.5)
    # 2.21*0.4*0.25*11 - 0.300039*5.800039
    assert holds and margin == pytest.approx(0.690762098479, abs=1e-9)


def test_backward_condition_examples():
    assert not eq.backward_bifurcation_condition(replace(FIGURE1, b=0.0), 0.5)[0]
    holds, margin = eq.backward_bifurcation_condition(TABLE2, 0.5)
    assert not holds
    assert margin == pytest.approx(0.5 - 0.924 * 50.924, rel=1e-12)


def test_slope_figure1():
    assert eq.slope_dI_dR0_at_one(FIGURE1, 0.5) == pytest.approx(-4.777953230594537, rel=1e-10)
    p = replace(TABLE2, b=0.0, alpha=0.0)
    assert eq.slope_dI_dR0_at_one(p, 0.5) == pytest.approx(p.A / (p.removal + 0.2), rel=1e-12)


@pytest.mark.parametrize("p,u", [(FIGURE1, FIGURE1_U), (TABLE2, U55), (TABLE2, ControlPair(0.2, 0.0))])
def test_slope_matches_branch_finite_difference(p, u):
    h = 1e-4

    def branch(r0):
        c = eq.endemic_coefficients(with_r0(p, u, r0), u)
        if c.c1 == 0:
            return -c.c3 / c.c2
        roots = np.roots([c.c1, c.c2, c.c3])
        return roots[np.argmin(np.abs(roots))].real

    fd = (branch(1 + h) - branch(1 - h)) / (2 * h)
    slope = eq.slope_dI_dR0_at_one(p, u.u2)
    assert slope == pytest.approx(fd, rel=1e-2)
    assert np.sign(slope) == -np.sign(eq.backward_bifurcation_condition(p, u.u2)[1])


def test_find_r0_star():
    r0_star = eq.find_r0_star(FIGURE1, FIGURE1_U)
    assert 0 < r0_star < 1
    p = with_r0(FIGURE1, FIGURE1_U, r0_star)
    c = eq.endemic_coefficients(p, FIGURE1_U)
    assert abs(c.discriminant) < 1e-10 and c.c2 < 0
    disc = max(c.discriminant, 0.0)
    i1 = (-c.c2 - np.sqrt(disc)) / (2 * c.c1)
    i2 = (-c.c2 + np.sqrt(disc)) / (2 * c.c1)
    assert abs(i2 - i1) < 1e-5
    assert len(eq.endemic_equilibria(with_r0(FIGURE1, FIGURE1_U, r0_star * (1 + 1e-6)), FIGURE1_U)) == 2
    assert len(eq.endemic_equilibria(with_r0(FIGURE1, FIGURE1_U, r0_star * (1 - 1e-6)), FIGURE1_U)) == 0


def test_find_r0_star_absent_without_backward_bifurcation():
    assert eq.find_r0_star(TABLE2, U55) is None


# -- endemic stability and scan ------------------------------------------------

def test_endemic_stability_identity_and_tags():
    r0_star = eq.find_r0_star(FIGURE1, FIGURE1_U)
    for r0 in np.linspace(r0_star * 1.001, 0.999, 5):
        p = with_r0(FIGURE1, FIGURE1_U, r0)
        lower, upper = eq.endemic_equilibria(p, FIGURE1_U)
        assert lower.stability is Stability.UNSTABLE
        assert upper.stability is Stability.ASYMPTOTICALLY_STABLE
        for pt in (lower, upper):
            x = pt.state
            _, K2 = eq.characteristic_coefficients(x, FIGURE1_U, p)
            _, dH = eq.equilibrium_gap(x.I, p, FIGURE1_U)
            rhs = -(p.beta * p.A * x.I / x.S) * dH
            assert K2 == pytest.approx(rhs, rel=1e-8)


def test_endemic_stability_agrees_with_eigenvalues():
    pt = eq.endemic_equilibria(TABLE2, U55)[0]
    assert eq.sufficient_stability_condition(TABLE2, 0.5)
    eig = np.linalg.eigvals(np.array(eq.jacobian(pt.state, U55, TABLE2)))
    assert np.all(eig.real < 0)
    assert eq.endemic_stability(pt, TABLE2, U55) is Stability.ASYMPTOTICALLY_STABLE


def test_endemic_stability_rejects_non_equilibrium():
    pt = eq.endemic_equilibria(TABLE2, U55)[0]
    moved = eq.EquilibriumPoint(SirState(pt.state.S, pt.state.I * 1.01, pt.state.R), Kind.ENDEMIC)
    with pytest.raises(ValueError):
        eq.endemic_stability(moved, TABLE2, U55)


def test_bifurcation_scan_figure1():
    r0_star = eq.find_r0_star(FIGURE1, FIGURE1_U)
    grid = [0.9 * r0_star, *np.linspace(r0_star + 1e-3, 0.999, 4), 1.2, 2.0]
    samples = eq.bifurcation_scan(FIGURE1, FIGURE1_U, grid)
    assert [s.r0 for s in samples] == pytest.approx(grid)
    assert samples[0].points == ()
    for s in samples[1:5]:
        tags = [tag for _, tag in s.i_values]
        assert tags == [Stability.UNSTABLE, Stability.ASYMPTOTICALLY_STABLE]
    for s in samples[5:]:
        assert len(s.points) == 1
        assert s.points[0].stability is Stability.ASYMPTOTICALLY_STABLE


def test_scan_rejects_nonpositive_grid():
    with pytest.raises(ValueError):
        eq.bifurcation_scan(FIGURE1, FIGURE1_U, [0.5, 0.0])
