import math

import numpy as np
import pytest

from nlsfem import linalg
from nlsfem.assembly import Nonlinearity, ScalarField, assemble_mass, assemble_stiffness, m_norm
from nlsfem.errors import NonFiniteWeight, StepError
from nlsfem.mesh import FeSpace, build_perturbed_mesh, build_uniform_mesh
from nlsfem.projections import fe_field
from nlsfem.timestepper import (NlsProblem, Stepper, TimeGrid, advance, full_step, half_step,
                                initial_data)
from nlsfem.verification import builtin_case, eoc, error_l2, without_forcing

from conftest import dense_cn_step, dense_p1_matrices

SINE0 = ScalarField(value=lambda t, x: np.sin(np.pi * x) + 0j,
                    dx=lambda t, x: np.pi * np.cos(np.pi * x) + 0j)


def eigvec_data(space):
    return space.interpolate(lambda x: np.sin(np.pi * x))


def test_time_grid_basics():
    grid = TimeGrid.uniform(1.0, 4)
    np.testing.assert_allclose(grid.steps, 0.25)
    np.testing.assert_allclose(grid.midpoints, [0.125, 0.375, 0.625, 0.875])
    assert grid.N == 4 and grid.k == 0.25 and grid.T == 1.0
    with pytest.raises(ValueError):
        TimeGrid([0.0, 0.5, 0.5, 1.0])
    with pytest.raises(ValueError):
        TimeGrid([0.1, 1.0])
    with pytest.raises(ValueError):
        TimeGrid.perturbed(1.0, 4, 0.5)


def test_perturbed_time_grid():
    grid = TimeGrid.perturbed(1.0, 50, 0.3, seed=3)
    assert grid.nodes[0] == 0.0 and grid.nodes[-1] == 1.0
    assert np.all(grid.steps > 0)
    assert np.max(np.abs(grid.nodes - np.linspace(0, 1, 51))) <= 0.3 / 50 + 1e-15
    np.testing.assert_array_equal(grid.nodes, TimeGrid.perturbed(1.0, 50, 0.3, seed=3).nodes)


def test_problem_validation():
    bad = ScalarField(lambda t, x: np.cos(x) + 0j, dx=lambda t, x: -np.sin(x) + 0j)
    with pytest.raises(ValueError):
        NlsProblem((0, 1), 1.0, Nonlinearity.zero(), ScalarField.zero(), bad)
    with pytest.raises(ValueError):
        NlsProblem((0, 1), 1.0, Nonlinearity.zero(), ScalarField.zero(), SINE0,
                   exact=ScalarField(lambda t, x: 2 * np.sin(np.pi * x) + 0j))


def test_initial_data(p1_space):
    case = builtin_case("ms1")
    assert np.all(initial_data(p1_space, builtin_case("zero").problem) == 0)
    U = np.random.default_rng(0).normal(size=p1_space.n_dof) + 0j
    problem = NlsProblem((0, 1), 1.0, Nonlinearity.zero(), ScalarField.zero(), fe_field(p1_space, U))
    np.testing.assert_allclose(initial_data(p1_space, problem), U, atol=1e-12)
    errs = []
    for m in (8, 16, 32, 64):
        sp = FeSpace(build_uniform_mesh(0, 1, m), 1)
        errs.append(error_l2(sp, initial_data(sp, case.problem), SINE0, 0.0))
    assert min(eoc([1 / m for m in (8, 16, 32, 64)], errs)) >= 1.95


def test_ritz_initial_data_is_nodal_for_p1():
    # in 1-D the P1 Ritz projection interpolates at the nodes
    sp = FeSpace(build_uniform_mesh(0, 1, 40), 1)
    U0 = initial_data(sp, builtin_case("free1").problem)
    np.testing.assert_allclose(U0, np.sin(np.pi * sp.dof_coords), atol=1e-13)


@pytest.mark.parametrize("degree", [1, 2, 3])
@pytest.mark.parametrize("f", [Nonlinearity.zero(), Nonlinearity.cubic(1.0),
                               Nonlinearity.power(-2.0, 1.5)])
def test_half_and_full_step_conserve_mass(degree, f):
    sp = FeSpace(build_perturbed_mesh(0, 1, 16, 0.2, 1), degree)
    M, A = assemble_mass(sp), assemble_stiffness(sp)
    rng = np.random.default_rng(degree)
    U = eigvec_data(sp) * (1 + 0.3j) + 0.1 * rng.normal(size=sp.n_dof)
    g = ScalarField.zero()
    U_half = half_step(sp, M, A, f, g, U, 0.0, 0.05)
    assert abs(m_norm(M, U_half) - m_norm(M, U)) <= 1e-12
    U_new = full_step(sp, M, A, f, g, U, U_half, 0.0, 0.05)
    assert abs(m_norm(M, U_new) - m_norm(M, U)) <= 1e-12


def test_full_step_tiny_time_step(p1_space):
    sp = p1_space
    M, A = assemble_mass(sp), assemble_stiffness(sp)
    case = builtin_case("ms1")
    U = initial_data(sp, case.problem)
    k = 1e-10
    U_half = half_step(sp, M, A, case.problem.f, case.problem.g, U, 0.0, k)
    U_new = full_step(sp, M, A, case.problem.f, case.problem.g, U, U_half, 0.0, k)
    assert np.linalg.norm(U_new - U) <= 1e-6


def test_step_rejects_nonpositive_k(p1_space):
    M, A = assemble_mass(p1_space), assemble_stiffness(p1_space)
    U = eigvec_data(p1_space)
    with pytest.raises(ValueError):
        half_step(p1_space, M, A, Nonlinearity.zero(), ScalarField.zero(), U, 0.0, 0.0)
    with pytest.raises(ValueError):
        full_step(p1_space, M, A, Nonlinearity.zero(), ScalarField.zero(), U, U, 0.0, -1.0)


def test_free_schroedinger_second_order_in_time():
    case = builtin_case("free1", T=0.25)
    sp = FeSpace(build_uniform_mesh(0, 1, 64), 3)
    Ns = [16, 32, 64, 128]
    errs = []
    for N in Ns:
        U, _ = advance(sp, case.problem, TimeGrid.uniform(0.25, N))
        errs.append(error_l2(sp, U, case.problem.exact, 0.25))
    rates = eoc([0.25 / N for N in Ns], errs)
    assert min(rates) >= 1.95


@pytest.mark.parametrize("m", [10, 33, 50])
def test_single_step_matches_dense_crank_nicolson(m):
    case = builtin_case("free1", T=0.1)
    sp = FeSpace(build_uniform_mesh(0, 1, m), 1)
    U, records = advance(sp, case.problem, TimeGrid.uniform(0.1, 1))
    M, A = dense_p1_matrices(m)
    U0 = np.sin(np.pi * np.linspace(0, 1, m + 1)[1:-1]) + 0j
    ref = dense_cn_step(M, A, U0, 0.1)
    assert len(records) == 1
    assert np.max(np.abs(U - ref)) <= 1e-11


def test_mass_ledger_without_forcing():
    case = without_forcing(builtin_case("ms1"))
    sp = FeSpace(build_uniform_mesh(0, 1, 24), 2)
    U0 = initial_data(sp, case.problem)
    l2_0 = m_norm(assemble_mass(sp), U0)
    _, records = advance(sp, case.problem, TimeGrid.perturbed(1.0, 120, 0.3, 5))
    norms = np.array([r.l2_norm for r in records])
    assert np.max(np.abs(norms - l2_0)) <= 1e-10
    assert all(r.g_l2 == 0 for r in records)


def test_boundedness_with_forcing():
    case = builtin_case("ms1")
    sp = FeSpace(build_uniform_mesh(0, 1, 16), 1)
    grid = TimeGrid.perturbed(1.0, 40, 0.2, 1)
    U0 = initial_data(sp, case.problem)
    prev = m_norm(assemble_mass(sp), U0)
    _, records = advance(sp, case.problem, grid)
    for rec, k in zip(records, grid.steps):
        assert rec.l2_norm <= prev + k * rec.g_l2 + 1e-10
        prev = rec.l2_norm
        assert rec.l2_norm >= 0 and rec.wall_time >= 0


def test_two_factorizations_per_step(monkeypatch, p1_space):
    calls = []
    real = linalg.band_lu

    def counting(A):
        calls.append(A.n)
        return real(A)

    monkeypatch.setattr(linalg, "band_lu", counting)
    case = builtin_case("ms1")
    N = 7
    advance(p1_space, case.problem, TimeGrid.uniform(1.0, N))
    # one factorization for the Ritz initial data, then two per step
    assert len(calls) == 1 + 2 * N


def test_zero_case_stays_zero(p1_space):
    U, records = advance(p1_space, builtin_case("zero").problem, TimeGrid.uniform(1.0, 10))
    assert np.all(U == 0)
    assert all(r.l2_norm == 0 for r in records)


def test_step_error_is_annotated(p1_space):
    f = Nonlinearity.custom(lambda x: np.where(x > 0.5, np.inf, x), lambda x: np.ones_like(x))
    u0 = ScalarField(value=lambda t, x: 0.5 * np.sin(np.pi * x) + 0j,
                     dx=lambda t, x: 0.5 * np.pi * np.cos(np.pi * x) + 0j)
    # forcing drives |U| past the blow-up threshold after a few steps
    g = ScalarField(lambda t, x: 3.0 * np.sin(np.pi * x) + 0j)
    problem = NlsProblem((0, 1), 1.0, f, g, u0)
    with pytest.raises(StepError) as info:
        advance(p1_space, problem, TimeGrid.uniform(1.0, 20))
    assert info.value.n > 1
    assert isinstance(info.value.cause, NonFiniteWeight)
    assert "x=" in str(info.value)


def test_grid_must_end_at_final_time(p1_space):
    with pytest.raises(ValueError):
        advance(p1_space, builtin_case("ms1").problem, TimeGrid.uniform(0.5, 4))


def test_stepper_caches_matrices(p1_space):
    st = Stepper(p1_space, Nonlinearity.zero(), ScalarField.zero())
    assert st.M is assemble_mass(p1_space)
    assert st.A is assemble_stiffness(p1_space)
