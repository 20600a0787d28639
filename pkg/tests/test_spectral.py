import math

import numpy as np
import pytest
import scipy.linalg

from multifrag import (
    bernstein_matrix,
    fragmentation_spec,
    intensity_matrix,
    irreducibility_check,
    matrix_exponential,
    perron_eigen,
    phi_derivatives,
    theta_bar,
)
from multifrag.errors import NormTooLarge, NotIrreducible, StencilOutOfDomain
from conftest import random_conservative_spec

LN2 = math.log(2.0)


# --- matrix exponential -------------------------------------------------------

def test_expm_identity_and_diagonal():
    m = np.array([[2.0, 1.0], [0.5, -1.0]])
    assert np.allclose(matrix_exponential(m, 0.0), np.eye(2))
    d = np.diag([0.3, -1.2])
    assert np.allclose(matrix_exponential(d, 2.0),
                       np.diag(np.exp([0.6, -2.4])), rtol=1e-13)


def test_expm_scalar_closed_form(spec_a):
    for th in (0.0, 0.5, 2.0):
        for t in (0.5, 1.0, 3.0):
            val = matrix_exponential(-bernstein_matrix(spec_a, th), t)[0, 0]
            assert val == pytest.approx(math.exp(-t * (1 - 2 ** (-th))),
                                        rel=1e-13)


def test_expm_against_scipy():
    rng = np.random.default_rng(31)
    for n in (2, 3, 5, 8):
        for _ in range(10):
            m = rng.normal(size=(n, n)) * rng.uniform(0.1, 3.0)
            ours = matrix_exponential(m, 1.0)
            ref = scipy.linalg.expm(m)
            assert np.max(np.abs(ours - ref)) < 1e-12 * max(
                1.0, np.max(np.abs(ref)))


def test_expm_norm_cap():
    with pytest.raises(NormTooLarge):
        matrix_exponential(np.array([[200.0]]), 1.0)
    with pytest.raises(ValueError):
        matrix_exponential(np.zeros((65, 65)))


def test_expm_semigroup_property(spec_c):
    for th in (0.0, 0.7, 2.0):
        phi = bernstein_matrix(spec_c, th)
        for t1, t2 in ((0.5, 0.5), (1.0, 2.0), (0.5, 1.5)):
            lhs = matrix_exponential(-phi, t1 + t2)
            rhs = matrix_exponential(-phi, t1) @ matrix_exponential(-phi, t2)
            assert np.max(np.abs(lhs - rhs)) < 1e-11


# --- irreducibility -------------------------------------------------------------

def test_irreducibility(spec_b, spec_c):
    assert irreducibility_check(intensity_matrix(spec_b))
    assert irreducibility_check(intensity_matrix(spec_c))
    assert irreducibility_check(np.zeros((1, 1)))
    one_way = np.array([[-1.0, 1.0], [0.0, 0.0]])
    assert not irreducibility_check(one_way)


def test_perron_raises_on_reducible_chain():
    spec = fragmentation_spec(2, {
        1: [(1.0, [(0.6, 1), (0.4, 2)])],
        2: [(1.0, [(0.5, 2), (0.5, 2)])],
    })
    assert not irreducibility_check(intensity_matrix(spec))
    with pytest.raises(NotIrreducible):
        perron_eigen(spec, 1.0)


# --- Perron data ------------------------------------------------------------------

def test_phi_at_zero_is_stationary(spec_c):
    sd = perron_eigen(spec_c, 0.0)
    assert abs(sd.phi) < 1e-10
    assert np.allclose(sd.v, 1.0, atol=1e-10)
    assert np.max(np.abs(sd.u @ intensity_matrix(spec_c))) < 1e-10
    assert sd.u == pytest.approx([5 / 9, 4 / 9], abs=1e-10)


def test_perron_spec_b_closed_form(spec_b):
    for th in (0.3, 1.0, 2.5):
        sd = perron_eigen(spec_b, th)
        assert sd.phi == pytest.approx(1 - 2 ** (-th), abs=1e-12)
        assert sd.u == pytest.approx([0.5, 0.5], abs=1e-10)
        assert sd.v == pytest.approx([1.0, 1.0], abs=1e-10)


def _phi_2x2_oracle(spec, th):
    """Quadratic-formula eigenvalue of minimal real part, no iteration."""
    m = bernstein_matrix(spec, th)
    half_tr = 0.5 * (m[0, 0] + m[1, 1])
    disc = math.sqrt(0.25 * (m[0, 0] - m[1, 1]) ** 2 + m[0, 1] * m[1, 0])
    return half_tr - disc


def test_perron_spec_c_against_quadratic_oracle(spec_c):
    for th in (-0.5, 0.0, 1.0, 2.0, 4.0):
        sd = perron_eigen(spec_c, th)
        assert sd.phi == pytest.approx(_phi_2x2_oracle(spec_c, th), abs=1e-10)


def test_spectral_data_invariants(spec_c):
    for th in np.linspace(-0.8, 30.0, 40):
        sd = perron_eigen(spec_c, float(th))
        assert sd.u.sum() == pytest.approx(1.0, abs=1e-10)
        assert sd.u @ sd.v == pytest.approx(1.0, abs=1e-10)
        assert sd.u.min() > 0 and sd.v.min() > 0
        a = matrix_exponential(-bernstein_matrix(spec_c, float(th)))
        r = math.exp(-sd.phi)
        assert np.max(np.abs(sd.u @ a - r * sd.u)) < 1e-9
        assert np.max(np.abs(a @ sd.v - r * sd.v)) < 1e-9


def test_random_specs_match_dense_eigensolver():
    rng = np.random.default_rng(32)
    checked = 0
    while checked < 15:
        spec = random_conservative_spec(rng)
        if not irreducibility_check(intensity_matrix(spec)):
            continue
        th = float(rng.uniform(-0.5, 3.0))
        sd = perron_eigen(spec, th)
        w = np.linalg.eigvals(bernstein_matrix(spec, th))
        assert sd.phi == pytest.approx(float(np.min(w.real)), abs=1e-9)
        checked += 1


# --- derivatives -------------------------------------------------------------------

def test_derivatives_scalar_closed_form(spec_a, spec_b):
    for spec in (spec_a, spec_b):
        d1, d2 = phi_derivatives(spec, 0.0)
        assert d1 == pytest.approx(LN2, abs=1e-8)
        assert d2 == pytest.approx(-(LN2 ** 2), abs=1e-5)
        d1, d2 = phi_derivatives(spec, 1.0)
        assert d1 == pytest.approx(0.5 * LN2, abs=1e-8)
        assert d2 == pytest.approx(-0.5 * LN2 ** 2, abs=1e-5)


def test_derivative_agrees_with_stationary_drift(spec_c):
    # phi'(0) equals the stationary mean of the log-mass jump rate
    u = perron_eigen(spec_c, 0.0).u
    drift = 0.0
    for i in (1, 2):
        for atom in spec_c.atoms(i):
            drift += u[i - 1] * atom.weight * sum(
                -m * math.log(m) for m, _ in atom.outcome.parts)
    d1, _ = phi_derivatives(spec_c, 0.0)
    assert d1 == pytest.approx(drift, abs=1e-4)


def test_derivative_stencil_domain(spec_a):
    with pytest.raises(StencilOutOfDomain):
        phi_derivatives(spec_a, -0.99995)


# --- shape of phi ---------------------------------------------------------------------

def _phi_fn(spec):
    def f(th):
        return perron_eigen(spec, th).phi
    return f


def test_phi_concave_increasing(spec_c):
    phi = _phi_fn(spec_c)
    grid = np.linspace(-0.8, 20.0, 60)
    vals = np.array([phi(float(t)) for t in grid])
    d1 = np.diff(vals)
    d2 = np.diff(vals, 2)
    assert np.all(d1 >= -1e-10)
    assert np.all(d2 <= 1e-8)


def test_phi_sublinear(spec_c):
    phi = _phi_fn(spec_c)
    ratios = [phi(th) / th for th in (10.0, 20.0, 40.0)]
    assert ratios[0] > ratios[1] > ratios[2]
    assert ratios[2] < 0.05


# --- critical exponent ------------------------------------------------------------------

def _theta_bar_oracle_spec_a():
    """Bisection on 1 - 2^-t = (t + 1) 2^-t ln 2, independent of the library."""
    def g(t):
        return 1 - 2 ** (-t) - (t + 1) * 2 ** (-t) * LN2
    lo, hi = 0.5, 3.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def test_theta_bar_spec_a(spec_a, spec_b):
    oracle = _theta_bar_oracle_spec_a()
    tb, d1 = theta_bar(spec_a)
    assert tb == pytest.approx(oracle, abs=1e-3)
    assert d1 == pytest.approx(2 ** (-oracle) * LN2, abs=1e-4)
    # SPEC-B shares phi, hence the critical exponent
    tb_b, _ = theta_bar(spec_b)
    assert tb_b == pytest.approx(tb, abs=1e-5)


def test_theta_bar_fixed_point_residual(spec_a, spec_b, spec_c):
    for spec in (spec_a, spec_b, spec_c):
        tb, d1 = theta_bar(spec)
        phi = perron_eigen(spec, tb).phi
        assert abs(phi / (tb + 1.0) - d1) < 1e-6


def test_theta_bar_bracket_edge(spec_a):
    from multifrag.errors import MaximumAtBracketEdge
    with pytest.raises(MaximumAtBracketEdge):
        theta_bar(spec_a, bracket=(0.0, 1.0))


def test_g_unimodal_on_grid(spec_c):
    tb, _ = theta_bar(spec_c)
    phi = _phi_fn(spec_c)
    grid = np.linspace(-0.5, 30.0, 100)
    vals = np.array([phi(float(t)) / (t + 1.0) for t in grid])
    peak = vals.argmax()
    assert abs(grid[peak] - tb) < grid[1] - grid[0] + 1e-9
    assert np.all(np.diff(vals[:peak + 1]) > -1e-12)
    assert np.all(np.diff(vals[peak:]) < 1e-12)
