import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose
from scipy.integrate import quad

from rieszlab.circle_riesz import (AdmissibilityError, AdmissiblePair, CoeffSpec, NotADensityError,
                                  TrigPoly, check_lacunary, circle_points, dichotomy_curve,
                                  evaluate_circle, exp_phase, factor_values, grid_phases,
                                  hellinger_affinity, l1_distance, l2_norm_sq_circle,
                                  lacunary_sequence, parse_complex, parseval_product,
                                  partial_product_circle, peyriere_curve,
                                  pointwise_product_circle, random_phases, riesz_factor)


def pair(J, a):
    return AdmissiblePair(tuple(J), tuple(a))


# --- TrigPoly ---------------------------------------------------------------

def test_trigpoly_arithmetic_and_json():
    p = TrigPoly.from_dict({-1: 0.25, 0: 1, 1: 0.25})
    q = TrigPoly.from_dict({2: 1j})
    assert (p + q).to_dict() == {-1: 0.25, 0: 1, 1: 0.25, 2: 1j}
    assert (p - p).to_dict() == {}
    assert (p * q).coeff(3) == 0.25j
    assert p.is_hermitian() and not q.is_hermitian()
    assert TrigPoly.from_json(p.to_json()).allclose(p)
    assert_allclose(p(0.0), 1.5)


def test_factor_values_small_grid():
    assert_allclose(evaluate_circle(riesz_factor(1, 0.5), 4), [1.5, 1, 0.5, 1])
    assert_allclose(factor_values(1, 0.5, 4), [1.5, 1, 0.5, 1], atol=1e-15)


def test_constant_grid():
    assert_allclose(evaluate_circle(TrigPoly.constant(1.0), 16), np.ones(16))


# --- admissibility and coefficient specs ---------------------------------------

def test_lacunarity_checks():
    check_lacunary([1, 3, 9])
    with pytest.raises(AdmissibilityError):
        check_lacunary([1, 2])
    with pytest.raises(AdmissibilityError):
        pair([1, 3], [0.5, 1.0])
    assert lacunary_sequence(4) == [1, 3, 9, 27]
    assert lacunary_sequence(3, base=4, first=2) == [2, 8, 32]


@pytest.mark.parametrize("text,k,value", [
    ("const:0.9", 7, 0.9),
    ("geom:0.5", 3, 0.125),
    ("geom:0.5,-1,0.5", 2, 0.25),
    ("harmonic:1", 1, 0.5),
    ("list:0.1,0.2i,0.3+0.4i", 3, 0.3 + 0.4j),
])
def test_coeff_spec(text, k, value):
    spec = CoeffSpec.parse(text)
    assert_allclose(spec.value(k), value)
    assert CoeffSpec.parse(str(spec)).value(k) == spec.value(k)


def test_coeff_spec_errors():
    with pytest.raises(ValueError):
        CoeffSpec.parse("bogus:1")
    with pytest.raises(ValueError):
        CoeffSpec.parse("const:1.2").sequence(3)
    assert parse_complex("i") == 1j
    assert parse_complex("-0.5") == -0.5


# --- partial products ---------------------------------------------------------

def test_partial_product_examples():
    assert partial_product_circle(pair([1, 3, 9], [0.5] * 3), 0).to_dict() == {0: 1}
    assert partial_product_circle(pair([1, 3, 9], [0.5] * 3), 1).to_dict() == {-1: 0.25, 0: 1, 1: 0.25}
    p = partial_product_circle(pair([1, 3], [0.5, 0.5]), 2)
    assert p.support() == {0, 1, -1, 2, -2, 3, -3, 4, -4}
    # term by term: (1/4 z^-1 + 1 + 1/4 z)(1/4 z^-3 + 1 + 1/4 z^3)
    expected = {0: 1, 1: 0.25, -1: 0.25, 3: 0.25, -3: 0.25,
                4: 1 / 16, -4: 1 / 16, 2: 1 / 16, -2: 1 / 16}
    for f, c in expected.items():
        assert_allclose(p.coeff(f), c)
    assert_allclose(l2_norm_sq_circle(partial_product_circle(pair([1], [0.5]), 1)), 9 / 8)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(0.05, 0.95), st.floats(0, 2 * math.pi)), min_size=1, max_size=7),
       st.integers(1, 4), st.integers(3, 5))
def test_partial_product_invariants(ab, first, ratio):
    J = [first * ratio ** k for k in range(len(ab))]
    a = [r * np.exp(1j * t) for r, t in ab]
    p = partial_product_circle(pair(J, a), len(J))
    assert len(p) == 3 ** len(J)
    assert_allclose(p.coeff(0), 1.0, atol=1e-12)
    assert p.is_hermitian()
    assert_allclose(l2_norm_sq_circle(p), parseval_product(a), rtol=1e-12)
    N = 4 * p.max_freq + 4
    direct = evaluate_circle(p, N)
    assert direct.min() >= -1e-12
    assert_allclose(direct, pointwise_product_circle(pair(J, a), len(J), N), atol=1e-10)


def test_two_path_kappa2():
    pr = pair([1, 3], [0.5, 0.3 - 0.2j])
    p = partial_product_circle(pr, 2)
    for N in (16, 64):
        assert_allclose(evaluate_circle(p, N), pointwise_product_circle(pr, 2, N), atol=1e-10)


# --- phase evaluation --------------------------------------------------------

def test_exp_phase_exact_for_huge_frequencies():
    j = 3 ** 39
    u = random_phases(16, 3)
    expect = [np.exp(2j * np.pi * ((j * int(x)) % 2 ** 64) / 2 ** 64) for x in u]
    assert_allclose(exp_phase(j, u), expect, atol=1e-12)
    assert_allclose(exp_phase(-5, u), np.conj(exp_phase(5, u)), atol=1e-12)


def test_grid_phases_match_regular_grid():
    u = grid_phases(8)
    assert_allclose(exp_phase(1, u), np.exp(2j * np.pi * np.arange(8) / 8), atol=1e-15)
    # non power-of-two grids are represented to 2^-64
    assert_allclose(exp_phase(1, grid_phases(6)), np.exp(2j * np.pi * np.arange(6) / 6), atol=1e-12)


def test_circle_points_modes():
    u, mode = circle_points(10, 64)
    assert mode == "grid" and u.size == 64
    u, mode = circle_points(10 ** 6, 64, seed=4)
    assert mode == "random" and u.size == 64
    assert np.array_equal(u, circle_points(10 ** 6, 64, seed=4)[0])


def test_random_points_unbiased_for_lacunary_product():
    # kappa = 5 affinity against Lebesgue, reference by adaptive quadrature
    ref = quad(lambda t: np.sqrt(np.prod([1 + 0.9 * np.cos(3 ** k * t) for k in range(5)])),
               0, 2 * np.pi, limit=2000)[0] / (2 * np.pi)
    vals = pointwise_product_circle(pair(lacunary_sequence(5), [0.9] * 5), 5, random_phases(1 << 16, 1))
    assert abs(hellinger_affinity(vals, np.ones_like(vals)) - ref) < 0.01
    assert abs(vals.mean() - 1) < 0.02


# --- distances -----------------------------------------------------------------

def test_affinity_and_l1_closed_forms():
    p = TrigPoly.from_dict({-1: 0.5, 0: 1, 1: 0.5})  # 1 + cos
    aff_ref = quad(lambda t: np.sqrt(1 + np.cos(t)), 0, 2 * np.pi)[0] / (2 * np.pi)
    l1_ref = quad(lambda t: abs(np.cos(t)), 0, 2 * np.pi)[0] / (2 * np.pi)
    assert_allclose(hellinger_affinity(1.0, p, 1 << 14), 2 * math.sqrt(2) / math.pi, atol=1e-6)
    assert_allclose(hellinger_affinity(1.0, p, 1 << 14), aff_ref, atol=1e-6)
    assert_allclose(l1_distance(1.0, p, 1 << 14), 2 / math.pi, atol=1e-6)
    assert_allclose(l1_distance(1.0, p, 1 << 14), l1_ref, atol=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-0.9, 0.9), min_size=3, max_size=3))
def test_distance_properties(cs):
    polys = [partial_product_circle(pair([1, 3], [c, c / 2]), 2) for c in cs]
    p, q, r = polys
    assert_allclose(hellinger_affinity(p, p), 1.0, atol=1e-10)
    assert_allclose(l1_distance(p, p), 0.0, atol=1e-10)
    assert_allclose(hellinger_affinity(p, q), hellinger_affinity(q, p), atol=1e-12)
    assert l1_distance(p, r) <= l1_distance(p, q) + l1_distance(q, r) + 1e-9


def test_negative_density_rejected():
    with pytest.raises(NotADensityError):
        hellinger_affinity(np.array([1.0, -0.5]), np.ones(2))


# --- curves -------------------------------------------------------------------

def test_dichotomy_zero_coefficients():
    rows = dichotomy_curve("const:0.0", lacunary_sequence(10), 10)
    assert all(r.l2_norm_sq == 1 and abs(r.affinity - 1) < 1e-12 for r in rows)


def test_dichotomy_square_summable():
    rows = dichotomy_curve("geom:0.5", lacunary_sequence(20), 20)
    ref = np.cumprod([1.0] + [1 + 4.0 ** -k / 2 for k in range(1, 21)])
    assert_allclose([r.l2_norm_sq for r in rows], ref, rtol=1e-12)
    assert np.all(np.diff([r.l2_norm_sq for r in rows]) >= 0)


def test_dichotomy_expansion_matches_parseval():
    rows = dichotomy_curve("const:0.9", lacunary_sequence(16), 16, expand_upto=14)
    assert_allclose([r.l2_norm_sq for r in rows], [1.405 ** k for k in range(17)], rtol=1e-12)


def test_peyriere_identical():
    rows = peyriere_curve("const:0.5", "const:0.5", lacunary_sequence(10), 10, shifts=2)
    assert all(abs(r.l1_distance) < 1e-12 for r in rows)


def test_peyriere_rises():
    rows = peyriere_curve("const:0.5", "const:-0.5", lacunary_sequence(12), 12, shifts=4)
    l1 = [r.l1_distance for r in rows]
    assert all(y > x for x, y in zip(l1, l1[1:]))
