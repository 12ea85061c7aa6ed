import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from rieszlab.circle_riesz import AdmissiblePair, TrigPoly, partial_product_circle
from rieszlab.generalized_riesz import (BlockError, CircleBlocks, GeneralizedPair,
                                        GeneralizedProductState, LacunaryBlock, SphereBlocks,
                                        build_block_circle, build_block_sphere, check_audit,
                                        generalized_construct, generalized_singularity_experiment,
                                        generalized_slice, generalized_step)
from rieszlab.sphere_poly import SpherePoly, integrate_sphere, sample_sphere, sup_norm_bounds


def test_circle_block_examples():
    b = build_block_circle(5, 3)
    assert b.degrees == (5,) and b.delta == 1
    b = build_block_circle(5, 3, D=2)
    assert b.degrees == (5, 8)
    assert b.members[0].allclose(SpherePoly.monomial([5], c=0.5))
    assert b.members[1].allclose(SpherePoly.monomial([8], c=0.5))
    z = np.exp(1j * np.linspace(0, 2 * np.pi, 101))[:, None]
    assert_allclose(np.abs(b.values(z)).sum(axis=1), 1.0)
    assert np.abs(b.values(z).sum(axis=1)).max() <= 1 + 1e-12


def test_block_invariants_enforced():
    w = SpherePoly.monomial([3], c=0.5)
    with pytest.raises(BlockError):
        LacunaryBlock(4, 1, 1, (3,), (w,), 1.0, 1.0)
    w2 = SpherePoly.monomial([4], c=0.5)
    with pytest.raises(BlockError):
        LacunaryBlock(3, 2, 1, (3, 4), (w, w2), 1.0, 1.0)
    with pytest.raises(BlockError):
        LacunaryBlock(3, 1, 1, (3,), (w,), 0.0, 1.0)


def test_sphere_block():
    b = build_block_sphere(4, 6, D=3, n=2, trials=16, seed=1, delta_samples=10_000)
    assert b.degrees == (4, 10, 16)
    assert b.delta > 0
    # subadditivity: each member is a certified RW polynomial divided by D
    assert sum(sup_norm_bounds(w * 3).upper for w in b.members) <= 3 + 1e-9
    Z = sample_sphere(2, 5000, 8)
    assert np.abs(b.values(Z).sum(axis=1)).max() <= 1
    b1 = build_block_sphere(4, 6, D=1, n=2, trials=16, seed=1, delta_samples=2000)
    assert len(b1.members) == 1
    with pytest.raises(BlockError):
        build_block_sphere(4, 6, D=3, n=2, trials=4, seed=1, delta_samples=1000, floor=2.0)
    again = build_block_sphere(4, 6, D=3, n=2, trials=16, seed=1, delta_samples=10_000)
    assert json.dumps(again.to_json()) == json.dumps(b.to_json())


def test_first_step():
    pair = GeneralizedPair(CircleBlocks(), [0.5])
    s = generalized_step(GeneralizedProductState.initial(1), pair)
    assert s.partial.allclose(TrigPoly.from_dict({-1: 0.25, 0: 1, 1: 0.25}))
    assert s.J == [1] and s.L == [1]


def test_zero_coefficients():
    s = generalized_construct(GeneralizedPair(CircleBlocks(), [0.0] * 5), 5)
    assert s.partial.allclose(TrigPoly.constant(1.0))


def test_circle_audit():
    s = generalized_construct(GeneralizedPair(CircleBlocks(), [0.9] * 8), 8)
    assert check_audit(s) == []
    assert s.J == [1, 4, 12, 36, 108, 324, 972, 2916]
    for r in s.audit:
        assert r.method == "exact" and r.disjoint
        assert_allclose(r.mass, 1.0, atol=1e-12)
        if r.k > 1:
            assert r.L == 2 * r.M + 2
    for d0, d1 in zip(s.degrees[1:], s.degrees[2:]):
        assert d1 >= 3 * d0 + 2
    # with D = 1 the product is the classical one for the chosen indices
    ref = partial_product_circle(AdmissiblePair(s.J, [0.9] * 8), 8)
    assert s.partial.allclose(ref, atol=1e-12)
    out = s.audit_json(seed=0)
    assert [st["k"] for st in out["steps"]] == list(range(1, 9))


def test_circle_blocks_wider():
    s = generalized_construct(GeneralizedPair(CircleBlocks(D=3), [0.7, 0.6j, -0.5, 0.4]), 4)
    assert check_audit(s) == []
    assert s.audit[-1].block_degrees == [s.J[-1] + i * s.L[-1] for i in range(3)]


def test_sphere_construct():
    pair = GeneralizedPair(SphereBlocks(2, 3, trials=16, seed=3, delta_samples=2000), [0.9] * 3)
    s = generalized_construct(pair, 3)
    assert check_audit(s) == []
    assert [r.method for r in s.audit] == ["exact", "exact", "rule"]
    assert_allclose(integrate_sphere(s.partial), 1.0, atol=1e-10)
    Z = sample_sphere(2, 50, 1)
    assert_allclose(s.partial(Z).real, s.values(Z), atol=1e-9)
    for z in sample_sphere(2, 5, 2):
        assert generalized_slice(s, z).allclose(generalized_slice(s, z, path="restrict"),
                                                atol=1e-10)


def test_slice_examples():
    s = generalized_construct(GeneralizedPair(CircleBlocks(), [0.5, 0.5, 0.5]), 3)
    assert generalized_slice(s, [1.0]).allclose(s.partial)
    assert generalized_slice(s, [1.0], kappa=0).to_dict() == {0: 1}
    z = np.exp(0.7j)
    assert generalized_slice(s, [z]).allclose(generalized_slice(s, [z], path="restrict"),
                                              atol=1e-12)
    with pytest.raises(ValueError):
        generalized_slice(s, [1.0], kappa=2, path="restrict")


def test_experiment_identical_pairs():
    pa = GeneralizedPair(CircleBlocks(), [0.9] * 5)
    with pytest.warns(UserWarning):
        rows = generalized_singularity_experiment(pa, pa, 5, shifts=2)
    assert_allclose([r.mean_affinity for r in rows], 1.0, atol=1e-12)


def test_experiment_lebesgue_decay():
    pa = GeneralizedPair(CircleBlocks(), [0.9] * 8)
    pb = GeneralizedPair(CircleBlocks(), [0.0] * 8)
    rows = generalized_singularity_experiment(pa, pb, 8, shifts=4)
    aff = [r.mean_affinity for r in rows]
    assert np.all(np.diff(aff) < 0)
    assert_allclose(aff[0], 0.9328, atol=2e-3)


def test_experiment_opposite_signs():
    pa = GeneralizedPair(CircleBlocks(), [0.8] * 8)
    pb = GeneralizedPair(CircleBlocks(), [-0.8] * 8)
    rows = generalized_singularity_experiment(pa, pb, 8, shifts=4)
    l1 = [r.mean_l1 for r in rows]
    assert l1[-1] > l1[0] and l1[-1] > 1.5
