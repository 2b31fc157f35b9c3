import math

import numpy as np
import pytest
from scipy.stats import special_ortho_group

from conftest import random_poly
from specbound.common import InvalidArgumentError
from specbound import oracle as mod
from specbound.poly import HomoPoly, PolyMap, power, rotate, scale
from specbound.tensor import DenseTensor, hopm_spectral_estimate, poly_to_tensor


def P(n, p, terms):
    return HomoPoly.from_terms(n, p, terms)


def test_shopm_constant_on_sphere():
    for n in (2, 3, 5):
        f = HomoPoly(n, 2, 2 * np.eye(n, dtype=int), np.ones(n))
        res = mod.shopm_lower_bound(f, starts=3)
        assert res.value == pytest.approx(1.0, rel=1e-12)
        assert np.linalg.norm(res.x) == pytest.approx(1.0, rel=1e-12)


def test_shopm_diagonal_finds_largest_weight():
    f = P(2, 3, {(3, 0): 1.0, (0, 3): 0.5})
    res = mod.shopm_lower_bound(f)
    assert res.value == pytest.approx(1.0, abs=1e-9)
    assert abs(res.x[0]) == pytest.approx(1.0, abs=1e-6)
    assert res.residual < 1e-6


def test_shopm_rank_one_cubic():
    f = power(HomoPoly.linear([1.0, 1.0]), 3)
    res = mod.shopm_lower_bound(f)
    assert res.value == pytest.approx(2**1.5, abs=1e-8)
    x = np.abs(res.x)
    assert np.allclose(x, [1 / math.sqrt(2)] * 2, atol=1e-6)


def test_shopm_linear_and_zero():
    res = mod.shopm_lower_bound(HomoPoly.linear([3.0, 4.0]))
    assert res.value == pytest.approx(5.0)
    assert np.allclose(res.x, [0.6, 0.8])
    assert res.residual == pytest.approx(0.0, abs=1e-14)

    zero = mod.shopm_lower_bound(HomoPoly.zero(3, 4))
    assert zero.value == 0.0 and zero.converged


def test_shopm_rejects_bad_arguments(make_poly):
    f = make_poly(2, 3)
    with pytest.raises(InvalidArgumentError):
        mod.shopm_lower_bound(f, starts=0)
    with pytest.raises(InvalidArgumentError):
        mod.shopm_lower_bound(f, damping=1.5)
    with pytest.raises(InvalidArgumentError):
        mod.shopm_lower_bound(HomoPoly.one(2))


def test_shopm_value_is_attained_at_witness(make_poly):
    f = make_poly(3, 4)
    res = mod.shopm_lower_bound(f, starts=8)
    assert abs(f(res.x)) == pytest.approx(res.value, rel=1e-12)


def test_witness_ratio_is_scale_invariant(make_poly):
    f = make_poly(3, 3)
    res = mod.shopm_lower_bound(f, starts=8)
    x = np.array(res.x)
    for t in (0.25, 0.5, 2.0, 10.0, 1e3):
        ratio = abs(f(t * x)) / np.linalg.norm(t * x) ** f.p
        assert ratio == pytest.approx(res.value, rel=1e-12)


def test_power_of_polynomial_raises_spectral_norm_to_power(rng):
    for _ in range(10):
        f = random_poly(rng, 2, 3)
        base = mod.grid_oracle(f)
        for k in (2, 3):
            fk = power(f, k)
            assert mod.grid_oracle(fk).value == pytest.approx(base.value**k, rel=1e-4)
            assert abs(fk(base.x)) == pytest.approx(abs(f(base.x)) ** k, rel=1e-10)


def test_shopm_improves_with_more_iterations(make_poly):
    f = make_poly(3, 3)
    values = [mod.shopm_lower_bound(f, starts=1, iters=k, seed=5).value for k in (1, 2, 5, 20, 100)]
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_shopm_is_reproducible(make_poly):
    f = make_poly(3, 4)
    assert mod.shopm_lower_bound(f, starts=4, seed=3) == mod.shopm_lower_bound(f, starts=4, seed=3)


def test_shopm_scales_with_polynomial(make_poly):
    f = make_poly(2, 3)
    base = mod.shopm_lower_bound(f, seed=1).value
    assert mod.shopm_lower_bound(scale(f, -2.5), seed=1).value == pytest.approx(2.5 * base, rel=1e-9)


def test_grid_examples():
    res = mod.grid_oracle(HomoPoly.monomial((1, 1)))
    assert res.value == pytest.approx(0.5, abs=1e-12)
    assert abs(res.x[0]) == pytest.approx(abs(res.x[1]), abs=1e-6)

    assert mod.grid_oracle(HomoPoly.monomial((3, 0))).value == pytest.approx(1.0, abs=1e-12)

    res = mod.grid_oracle(P(2, 3, {(3, 0): 1.0, (0, 3): 1.0}))
    assert res.value == pytest.approx(1.0, abs=1e-12)
    assert max(abs(res.x[0]), abs(res.x[1])) == pytest.approx(1.0, abs=1e-6)


def test_grid_one_and_three_variables():
    assert mod.grid_oracle(HomoPoly.monomial((4,), -2.0)).value == 2.0
    f = power(HomoPoly.linear([1.0, 1.0, 1.0]), 2)
    res = mod.grid_oracle(f, resolution=360)
    assert res.value == pytest.approx(3.0, rel=1e-3)
    assert res.value <= 3.0 + 1e-12
    assert res.points == 360 * 360


def test_grid_rejects_large_dimension():
    with pytest.raises(InvalidArgumentError):
        mod.grid_oracle(HomoPoly.linear([1.0, 1.0, 1.0, 1.0]))


def test_grid_is_rotation_invariant(make_poly):
    f = make_poly(2, 4)
    Q = special_ortho_group.rvs(2, random_state=4)
    assert mod.grid_oracle(rotate(f, Q)).value == pytest.approx(mod.grid_oracle(f).value, rel=1e-6)


def test_shopm_agrees_with_grid_on_cubics(rng):
    for _ in range(50):
        f = random_poly(rng, 2, 3)
        grid = mod.grid_oracle(f).value
        shopm = mod.shopm_lower_bound(f).value
        assert shopm == pytest.approx(grid, rel=1e-3)


def test_hopm_matches_shopm_on_symmetric_tensors(rng):
    for _ in range(10):
        f = random_poly(rng, 2, 3)
        tied = mod.shopm_lower_bound(f, tol=1e-13).value
        untied = hopm_spectral_estimate(poly_to_tensor(f), tol=1e-14, iters=2000).value
        assert untied == pytest.approx(tied, abs=1e-6)


def test_eigen_residual_examples(rng):
    T = DenseTensor(np.diag([2.0, 0.5]))
    assert mod.eigen_residual(T, [1.0, 0.0], 2.0) == 0.0

    ones = DenseTensor(np.ones((2, 2, 2, 2)))
    assert mod.eigen_residual(ones, [1.0, 1.0], 8.0) == 0.0

    x = rng.standard_normal(2)
    x /= np.linalg.norm(x)
    assert mod.eigen_residual(ones, x, 123.0) > 0


def test_eigen_residual_sigma_form():
    f = P(2, 3, {(3, 0): 1.0, (0, 3): 0.5})
    assert mod.eigen_residual(f, [1.0, 0.0], 1.0, kind="sigma") == 0.0
    assert mod.eigen_residual(f, [0.0, 1.0], 1.0, kind="sigma") == pytest.approx(0.5)
    with pytest.raises(InvalidArgumentError):
        mod.eigen_residual(f, [1.0, 0.0], 1.0, kind="z")


def test_witness_residual_of_constant_on_sphere():
    f = P(2, 2, {(2, 0): 1.0, (0, 2): 1.0})
    assert mod.witness_residual(f, [0.6, 0.8]) == pytest.approx(0.0, abs=1e-14)


def test_map_sigma_examples(rng):
    F = PolyMap([HomoPoly.monomial((2, 0)), HomoPoly.monomial((0, 2))])
    assert mod.map_sigma_estimate(F).value == pytest.approx(1.0, abs=1e-9)

    A = rng.standard_normal((3, 3))
    res = mod.map_sigma_estimate(PolyMap.from_matrix(A))
    assert res.value == pytest.approx(np.linalg.norm(A, 2), rel=1e-8)

    zero = PolyMap([HomoPoly.zero(2, 2), HomoPoly.zero(2, 2)])
    assert mod.map_sigma_estimate(zero).value == 0.0
