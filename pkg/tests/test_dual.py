import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from aspot import (DualPoint, EntropicContext, PotInstance, b_matrix, dual_gradient,
                   dual_objective, feasibility_error, rho)
from aspot.exceptions import DimensionMismatch, DualOverflowError, NonPositiveArgument

from conftest import instances, make_instance


def _scalar(gamma=1.0, cost=0.0):
    return EntropicContext(PotInstance([1.0], [1.0], [[cost]], 0.5), gamma)


def _random_point(rng, n, scale=1.0):
    return DualPoint(rng.normal(0, scale, n), rng.normal(0, scale, n), rng.normal(0, scale))


def test_log_kernel_matches_cost():
    inst = make_instance(np.random.default_rng(0), 4)
    ctx = EntropicContext(inst, 0.3)
    np.testing.assert_allclose(ctx.logK, -inst.C / 0.3)
    with pytest.raises(ValueError):
        EntropicContext(inst, 0.0)


def test_b_matrix_at_origin():
    assert b_matrix(_scalar(), DualPoint.zeros(1)).tolist() == [[1.0]]


def test_b_matrix_with_potentials():
    z = DualPoint([math.log(2)], [0.0], math.log(3))
    assert b_matrix(_scalar(), z)[0, 0] == pytest.approx(6.0)


@pytest.mark.parametrize("gamma", [0.01, 1.0, 7.0])
def test_b_matrix_kernel_entry(gamma):
    ctx = _scalar(gamma, cost=gamma * math.log(4))
    assert b_matrix(ctx, DualPoint.zeros(1))[0, 0] == pytest.approx(0.25)


def test_b_matrix_overflow_is_an_error():
    with pytest.raises(DualOverflowError):
        b_matrix(_scalar(), DualPoint([800.0], [0.0], 0.0))
    with pytest.raises(DualOverflowError):
        dual_objective(_scalar(), DualPoint([0.0], [0.0], 701.0))


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        b_matrix(_scalar(), DualPoint.zeros(2))


def test_objective_scalar_instance():
    assert dual_objective(_scalar(), DualPoint.zeros(1)) == pytest.approx(3.0)


def test_objective_zero_cost_at_origin():
    inst = PotInstance([0.3, 0.1], [0.2, 0.2], np.zeros((2, 2)), 0.1)
    assert dual_objective(EntropicContext(inst, 1.0), DualPoint.zeros(2)) == pytest.approx(8.0)


def test_gradient_scalar_instance():
    g = dual_gradient(_scalar(), DualPoint.zeros(1))
    assert g.u.tolist() == [1.0]
    assert g.v.tolist() == [1.0]
    assert g.w == pytest.approx(0.5)


def test_gradient_vanishes_after_exact_u_update():
    rng = np.random.default_rng(3)
    inst = make_instance(rng, 4)
    ctx = EntropicContext(inst, 0.5)
    z = _random_point(rng, 4, 0.5)
    B = b_matrix(ctx, z)
    u = z.u + np.log(inst.r) - np.log(B.sum(axis=1) + np.exp(z.u))
    # u enters both B's rows and e^u linearly in the exponent, so one update is exact
    g = dual_gradient(ctx, DualPoint(u, z.v, z.w))
    np.testing.assert_allclose(g.u, 0.0, atol=1e-14)


def _finite_difference(ctx, z, h=1e-6):
    x = z.to_vector()
    out = np.empty_like(x)
    for k in range(x.size):
        up, down = x.copy(), x.copy()
        up[k] += h
        down[k] -= h
        out[k] = (dual_objective(ctx, DualPoint.from_vector(up))
                  - dual_objective(ctx, DualPoint.from_vector(down))) / (2 * h)
    return out


@given(instances(), st.integers(0, 2**32 - 1), st.floats(0.1, 2.0))
def test_gradient_matches_finite_differences(inst, seed, gamma):
    ctx = EntropicContext(inst, gamma)
    z = _random_point(np.random.default_rng(seed), inst.n)
    g = dual_gradient(ctx, z).to_vector()
    fd = _finite_difference(ctx, z)
    rel = np.abs(g - fd) / np.maximum(np.abs(g), 1e-3)
    assert rel.max() <= 1e-5


@given(instances(), st.integers(0, 2**32 - 1), st.floats(0.01, 0.99))
def test_objective_is_convex_along_segments(inst, seed, lam):
    rng = np.random.default_rng(seed)
    ctx = EntropicContext(inst, 0.5)
    z1, z2 = _random_point(rng, inst.n), _random_point(rng, inst.n)
    mid = DualPoint.from_vector(lam * z1.to_vector() + (1 - lam) * z2.to_vector())
    bound = lam * dual_objective(ctx, z1) + (1 - lam) * dual_objective(ctx, z2)
    assert dual_objective(ctx, mid) <= bound + 1e-10


def test_error_scalar_instance():
    assert feasibility_error(_scalar(), DualPoint.zeros(1)) == pytest.approx(2.5)


def test_error_vanishes_at_stationary_point():
    # B = 0.25, e^u = e^v = 0.25 -> r = c = 0.5, s = 0.25
    u = math.log(0.25)
    inst = PotInstance([0.5], [0.5], [[0.0]], 0.25)
    z = DualPoint([u], [u], -u)
    assert feasibility_error(EntropicContext(inst, 1.0), z) == pytest.approx(0.0, abs=1e-15)


@given(instances(), st.integers(0, 2**32 - 1))
def test_error_is_sum_of_gradient_norms(inst, seed):
    ctx = EntropicContext(inst, 0.7)
    z = _random_point(np.random.default_rng(seed), inst.n)
    g = dual_gradient(ctx, z)
    assert feasibility_error(ctx, z) == abs(g.w) + np.abs(g.u).sum() + np.abs(g.v).sum()


@pytest.mark.parametrize("a, b, expected", [
    (1.0, 1.0, 0.0),
    (1.0, math.e, math.e - 2),
    (2.0, 1.0, -1 + 2 * math.log(2)),
])
def test_rho_values(a, b, expected):
    assert rho(a, b) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("a, b", [(0.0, 1.0), (1.0, -2.0)])
def test_rho_rejects_non_positive(a, b):
    with pytest.raises(NonPositiveArgument):
        rho(a, b)


def test_rho_nonnegative_on_random_pairs():
    rng = np.random.default_rng(0)
    a = np.exp(rng.uniform(-10, 10, 10_000))
    b = np.exp(rng.uniform(-10, 10, 10_000))
    assert rho(a, b).min() >= 0.0
    assert np.abs(rho(a, a)).max() <= 1e-15
