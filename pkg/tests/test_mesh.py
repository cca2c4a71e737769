import math

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from nlsfem.mesh import (FeSpace, Mesh1D, build_perturbed_mesh, build_uniform_mesh,
                         eval_basis, gauss_rule, reference_nodes)


@pytest.mark.parametrize("a,b,m,expected", [
    (0, 1, 2, [0, 0.5, 1]),
    (0, 1, 4, [0, 0.25, 0.5, 0.75, 1]),
    (-1, 1, 2, [-1, 0, 1]),
])
def test_uniform_mesh_nodes(a, b, m, expected):
    mesh = build_uniform_mesh(a, b, m)
    np.testing.assert_allclose(mesh.nodes, expected, atol=1e-15)
    assert mesh.m == m
    assert mesh.ratio == pytest.approx(1.0)


@pytest.mark.parametrize("a,b,m", [(0, 1, 1), (1, 1, 4), (2, 1, 4)])
def test_uniform_mesh_rejects_bad_input(a, b, m):
    with pytest.raises(ValueError):
        build_uniform_mesh(a, b, m)


def test_mesh_rejects_non_monotone_and_bad_ratio():
    with pytest.raises(ValueError):
        Mesh1D(0.0, 1.0, [0.0, 0.6, 0.5, 1.0])
    with pytest.raises(ValueError):
        Mesh1D(0.0, 1.0, [0.0, 0.01, 1.0])  # ratio 99 > 10


def test_perturbed_mesh_zero_jitter_is_uniform():
    np.testing.assert_array_equal(build_perturbed_mesh(0, 1, 4, 0.0, 3).nodes,
                                  build_uniform_mesh(0, 1, 4).nodes)


def test_perturbed_mesh_displacement_bound():
    mesh = build_perturbed_mesh(0, 1, 4, 0.2, rng_seed=1)
    uniform = build_uniform_mesh(0, 1, 4).nodes
    assert np.all(np.diff(mesh.nodes) > 0)
    assert np.max(np.abs(mesh.nodes - uniform)) <= 0.05 + 1e-15
    again = build_perturbed_mesh(0, 1, 4, 0.2, rng_seed=1)
    np.testing.assert_array_equal(mesh.nodes, again.nodes)


def test_perturbed_mesh_quasi_uniformity():
    mesh = build_perturbed_mesh(0, 1, 8, 0.4, rng_seed=7)
    lengths = np.diff(mesh.nodes)
    assert lengths.max() / lengths.min() <= 9.0


def test_perturbed_mesh_rejects_large_jitter():
    with pytest.raises(ValueError):
        build_perturbed_mesh(0, 1, 4, 0.5, 0)


def test_gauss_rule_small_cases():
    r1 = gauss_rule(1)
    np.testing.assert_allclose(r1.points, [0.0], atol=1e-15)
    np.testing.assert_allclose(r1.weights, [2.0])
    # two-point rule from the exactness conditions for 1, x, x^2, x^3:
    # symmetric nodes +-s with unit weights and 2 s^2 = 2/3
    r2 = gauss_rule(2)
    np.testing.assert_allclose(np.sort(r2.points), [-1 / math.sqrt(3), 1 / math.sqrt(3)], rtol=1e-15)
    np.testing.assert_allclose(r2.weights, [1.0, 1.0], rtol=1e-15)
    r3 = gauss_rule(3)
    assert abs(np.sum(r3.weights * r3.points ** 4) - 2 / 5) < 1e-14


@pytest.mark.parametrize("q", range(1, 9))
def test_gauss_rule_exactness(q):
    rule = gauss_rule(q)
    assert abs(rule.weights.sum() - 2.0) < 1e-14
    for j in range(2 * q):
        exact = 0.0 if j % 2 else 2.0 / (j + 1)
        assert abs(np.sum(rule.weights * rule.points ** j) - exact) < 1e-13


@pytest.mark.parametrize("q", [0, 9])
def test_gauss_rule_range(q):
    with pytest.raises(ValueError):
        gauss_rule(q)


def test_eval_basis_examples():
    v, _ = eval_basis(1, -1.0)
    np.testing.assert_allclose(v, [1.0, 0.0])
    v, d = eval_basis(1, 0.0)
    np.testing.assert_allclose(v, [0.5, 0.5])
    np.testing.assert_allclose(d, [-0.5, 0.5])
    v, _ = eval_basis(2, 0.0)
    np.testing.assert_allclose(v, [0.0, 1.0, 0.0], atol=1e-15)
    with pytest.raises(ValueError):
        eval_basis(4, 0.0)


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_eval_basis_nodal_property(degree):
    for i, node in enumerate(reference_nodes(degree)):
        v, _ = eval_basis(degree, node)
        expected = np.zeros(degree + 1)
        expected[i] = 1.0
        np.testing.assert_array_equal(v, expected)


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_partition_of_unity(degree):
    xi = np.random.default_rng(degree).uniform(-1, 1, 1000)
    v, d = eval_basis(degree, xi)
    assert np.max(np.abs(v.sum(axis=0) - 1.0)) < 1e-13
    assert np.max(np.abs(d.sum(axis=0))) < 1e-12


@given(st.integers(1, 3), st.floats(-1, 1))
def test_basis_derivative_matches_finite_difference(degree, xi):
    eps = 1e-6
    lo, hi = max(-1.0, xi - eps), min(1.0, xi + eps)
    v_lo, _ = eval_basis(degree, lo)
    v_hi, _ = eval_basis(degree, hi)
    _, d = eval_basis(degree, xi)
    np.testing.assert_allclose(d, (v_hi - v_lo) / (hi - lo), atol=1e-5)


@pytest.mark.parametrize("degree", [1, 2, 3])
@pytest.mark.parametrize("m", [2, 5])
def test_fe_space_dofs(degree, m):
    space = FeSpace(build_uniform_mesh(0, 1, m), degree)
    assert space.n_dof == m * degree - 1
    assert space.bandwidth == degree
    dm = space.dof_map
    assert dm[0, 0] == -1 and dm[-1, -1] == -1
    used = dm[dm >= 0]
    assert sorted(set(used.tolist())) == list(range(space.n_dof))
    # interior mesh nodes are shared by exactly the two adjacent elements
    for e in range(m - 1):
        assert dm[e, -1] == dm[e + 1, 0]
    vertex_dofs = [e * degree - 1 for e in range(1, m)]
    for dof in vertex_dofs:
        assert np.count_nonzero(dm == dof) == 2
    np.testing.assert_allclose(space.dof_coords,
                               np.linspace(0, 1, m * degree + 1)[1:-1], atol=1e-15)


@settings(max_examples=30)
@given(st.integers(2, 3), st.integers(2, 9), st.integers(0, 1000))
def test_interpolant_reproduces_polynomials(degree, m, seed):
    # x(1-x) times a polynomial of degree p-2 lies in the constrained space
    space = FeSpace(build_perturbed_mesh(0, 1, m, 0.3, seed), degree)
    factor = np.poly1d(np.random.default_rng(seed).normal(size=degree - 1))
    poly = lambda x: factor(x) * x * (1 - x)
    U = space.interpolate(poly)
    xs = np.linspace(0, 1, 57)
    np.testing.assert_allclose(space.evaluate_at(U, xs).real, poly(xs), atol=1e-12)
