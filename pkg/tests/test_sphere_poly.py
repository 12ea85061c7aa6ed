import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from rieszlab.rw_unitary import compose_unitary, haar_unitary
from rieszlab.sphere_poly import (NotOnSphereError, SpherePoly, bidegree_components,
                                 coefficient_sup_bound, complex_laplacian, derivative,
                                 gaussian_moment_integral, harmonic_decomposition,
                                 harmonic_projections, integrate_sphere, l2_norm_sq,
                                 monomial_integral, monomial_sup, norm_sq_poly, power,
                                 product_bidegree_rule, sample_sphere, slice_integral_identity_check,
                                 slice_restrict, spectrum, sup_norm_bounds, torus_grid_sup)

Z1 = SpherePoly.monomial([1, 0])
Z2 = SpherePoly.monomial([0, 1])


def random_poly(n, max_deg, terms, seed, p=None, q=None):
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(terms):
        if p is None:
            a = rng.integers(0, max_deg + 1, size=n)
            b = rng.integers(0, max_deg + 1, size=n)
        else:
            a = rng.multinomial(p, [1 / n] * n)
            b = rng.multinomial(q, [1 / n] * n)
        rows.append(list(a) + list(b))
    c = rng.standard_normal(terms) + 1j * rng.standard_normal(terms)
    return SpherePoly(n, rows, c)


def random_harmonic(n, p, q, seed):
    f = random_poly(n, 0, 6, seed, p, q)
    return harmonic_decomposition(f)[0]


# --- integration -------------------------------------------------------------

@pytest.mark.parametrize("alpha,beta,value", [
    ((0, 0), (0, 0), 1.0),
    ((1, 0), (1, 0), 0.5),
    ((2, 0), (2, 0), 1 / 3),
    ((1, 0), (0, 1), 0.0),
])
def test_monomial_integral(alpha, beta, value):
    assert_allclose(monomial_integral(alpha, beta), value, atol=1e-15)


def test_monte_carlo_oracle_z1_fourth():
    # 10^7 uniform points, in chunks
    total, count = 0.0, 0
    for start in range(0, 10_000_000, 1_000_000):
        Z = sample_sphere(2, 1_000_000, seed=2024, start=start)
        total += float(np.sum(np.abs(Z[:, 0]) ** 4))
        count += Z.shape[0]
    assert abs(total / count - 1 / 3) < 1e-3
    f = SpherePoly.monomial([2, 0], [2, 0])
    assert_allclose(integrate_sphere(f), 1 / 3, atol=1e-15)
    assert_allclose(complex(gaussian_moment_integral(f)), 1 / 3, atol=1e-15)


def test_high_degree_moment_exact():
    # (n-1)! alpha! / (n-1+|alpha|)! for alpha = (50, 40)
    ref = math.factorial(50) * math.factorial(40) / math.factorial(91)
    assert_allclose(monomial_integral((50, 40), (50, 40)), ref, rtol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 3), st.integers(0, 10_000))
def test_two_integration_routes_agree(n, seed):
    f = random_poly(n, 3, 8, seed)
    f = f * f.conj()
    assert_allclose(integrate_sphere(f), complex(gaussian_moment_integral(f)), atol=1e-10)


def test_unitary_invariance():
    f = random_poly(2, 3, 10, 5)
    U = haar_unitary(2, 9)
    assert_allclose(integrate_sphere(compose_unitary(f, U)), integrate_sphere(f), atol=1e-9)


def test_monte_carlo_consistency():
    f = random_poly(3, 2, 10, 8)
    Z = sample_sphere(3, 200_000, 4)
    v = f(Z)
    se = np.std(v) / math.sqrt(v.size)
    assert abs(v.mean() - integrate_sphere(f)) < 4 * max(se, 1e-12)


def test_sampling():
    Z = sample_sphere(3, 100_000, 1)
    assert np.abs(np.linalg.norm(Z, axis=1) - 1).max() <= 1e-12
    assert abs(np.mean(np.abs(Z[:, 0]) ** 2) - 1 / 3) < 5e-3
    assert np.array_equal(Z, sample_sphere(3, 100_000, 1))
    assert np.array_equal(Z[2000:2100], sample_sphere(3, 100, 1, start=2000))


# --- algebra -------------------------------------------------------------------

def test_products_and_norms():
    f = random_poly(2, 2, 5, 1)
    assert (f * SpherePoly.constant(2)).allclose(f)
    assert (Z1 * Z1.conj()).terms() == {((1, 0), (1, 0)): 1}
    assert_allclose(l2_norm_sq(Z1), 0.5)
    assert_allclose(l2_norm_sq(power(Z1 + Z2, 3)), integrate_sphere(power(Z1 + Z2, 3) * power(Z1 + Z2, 3).conj()).real)
    assert norm_sq_poly(2).allclose(Z1 * Z1.conj() + Z2 * Z2.conj())


def test_json_roundtrip():
    f = random_poly(3, 3, 7, 2)
    assert SpherePoly.from_json(f.to_json()).allclose(f, atol=0)


def test_derivative():
    f = SpherePoly.monomial([2, 1], [1, 0])
    assert derivative(f, 0).allclose(SpherePoly.monomial([1, 1], [1, 0], 2))
    assert derivative(f, 0, conj=True).allclose(SpherePoly.monomial([2, 1], [0, 0]))


# --- harmonic analysis ---------------------------------------------------------

def test_laplacian_examples():
    assert len(complex_laplacian(power(Z1, 5))) == 0
    assert complex_laplacian(Z1 * Z1.conj()).allclose(SpherePoly.constant(2, 4))
    assert len(complex_laplacian(Z1 * Z1.conj() - Z2 * Z2.conj())) == 0


def test_bidegree_components():
    comps = bidegree_components(Z1 + Z2.conj())
    assert set(comps) == {(1, 0), (0, 1)}
    assert comps[(1, 0)].allclose(Z1)


def test_decomposition_abs_z1():
    h = harmonic_decomposition(Z1 * Z1.conj())
    assert h[0].allclose((Z1 * Z1.conj() - Z2 * Z2.conj()) * 0.5)
    assert h[1].allclose(SpherePoly.constant(2, 0.5))
    assert harmonic_decomposition(power(Z1, 4))[0].allclose(power(Z1, 4))


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 3), st.integers(0, 4), st.integers(0, 4), st.integers(0, 10_000))
def test_decomposition_roundtrip(n, p, q, seed):
    f = random_poly(n, 0, 6, seed, p, q)
    hs = harmonic_decomposition(f)
    r2 = norm_sq_poly(n)
    back = SpherePoly.zero(n)
    for ell, h in enumerate(hs):
        assert complex_laplacian(h).max_abs_coeff() <= 1e-10
        back = back + power(r2, ell) * h
    assert back.allclose(f, atol=1e-10)
    assert_allclose(sum(l2_norm_sq(h) for h in hs), l2_norm_sq(f), rtol=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3), st.integers(0, 3),
       st.integers(0, 10_000))
def test_multiplication_rule(p, q, r, s, seed):
    f = random_harmonic(2, p, q, seed)
    g = random_harmonic(2, r, s, seed + 1)
    assert spectrum(f * g) <= product_bidegree_rule((p, q), (r, s))


def test_multiplication_rule_h10_h01():
    f = random_harmonic(3, 1, 0, 1)
    g = random_harmonic(3, 0, 1, 2)
    assert spectrum(f * g) <= {(1, 1), (0, 0)}


def test_spectrum_examples():
    assert spectrum(SpherePoly.constant(2)) == {(0, 0)}
    assert spectrum(power(Z1, 7)) == {(7, 0)}
    f = SpherePoly.constant(2) + power(Z1, 3) * 0.25 + power(Z1, 3).conj() * 0.25
    assert spectrum(f) == {(0, 0), (3, 0), (0, 3)}
    assert set(harmonic_projections(Z1 * Z1.conj())) == {(1, 1), (0, 0)}


# --- slices --------------------------------------------------------------------

def test_slice_restrict_examples():
    assert slice_restrict(Z1, [1, 0]).to_dict() == {1: 1}
    assert slice_restrict(SpherePoly.constant(2, 3.0), [0.6, 0.8]).to_dict() == {0: 3}
    assert_allclose(slice_restrict(Z1 * Z1.conj(), [0.6, 0.8j]).coeff(0), 0.36)
    with pytest.raises(NotOnSphereError):
        slice_restrict(Z1, [1, 1])


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(0, 2 * math.pi))
def test_slice_matches_evaluation(seed, t):
    f = random_poly(2, 3, 6, seed)
    z = sample_sphere(2, 1, seed)[0]
    assert_allclose(slice_restrict(f, z)(t), f(np.exp(1j * t) * z), atol=1e-10)


def test_slice_identity():
    assert slice_integral_identity_check(SpherePoly.constant(2)) == 0
    assert slice_integral_identity_check(Z1) == 0
    f = random_poly(2, 3, 12, 3)
    assert slice_integral_identity_check(f) <= 1e-12
    assert slice_integral_identity_check(f, "monte_carlo", 20_000) < 0.05


# --- sup norms -------------------------------------------------------------------

def test_monomial_sup():
    assert monomial_sup((5, 0)) == 1
    assert_allclose(monomial_sup((1, 1)), 0.5)
    assert monomial_sup((0, 0, 0)) == 1
    Z = sample_sphere(2, 200_000, 0)
    assert np.abs(Z[:, 0] * Z[:, 1]).max() <= 0.5


def test_sup_bounds_examples():
    b = sup_norm_bounds(power(Z1, 6))
    assert b.lower >= 1 - 1e-6 and b.upper <= 1 + 1e-12
    b = sup_norm_bounds(SpherePoly.constant(2, 2.5))
    assert_allclose(b, (2.5, 2.5))
    b = sup_norm_bounds(Z1 + Z2)
    assert b.lower <= math.sqrt(2) + 1e-12 <= b.upper + 1e-12


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 8), st.integers(0, 10_000))
def test_sup_bounds_bracket(deg, seed):
    f = random_poly(2, 0, 5, seed, deg, 0)
    b = sup_norm_bounds(f, samples=512, multistarts=8, ascent_steps=10)
    assert b.lower <= b.upper
    assert b.upper <= coefficient_sup_bound(f) + 1e-12
    assert np.abs(f(sample_sphere(2, 5000, seed))).max() <= b.upper


def test_torus_certificate():
    grid_max, upper = torus_grid_sup(power(Z1, 5))
    assert_allclose(grid_max, 1.0)
    assert 1.0 <= upper < 1.01
    f = random_poly(2, 0, 6, 3, 4, 2)
    grid_max, upper = torus_grid_sup(f)
    assert np.abs(f(sample_sphere(2, 20_000, 1))).max() <= upper
    assert torus_grid_sup(random_poly(3, 2, 3, 1)) is None
