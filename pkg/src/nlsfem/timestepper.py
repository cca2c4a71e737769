"""Two-level linearly implicit time stepping for the NLS problem.

Per step the nonlinearity is frozen at a known iterate, so each of the
half step and the full step is one banded linear solve:

    (2/k M + i/2 (A - N(U^{n-1})))  U^{n-1/2} = (2/k M - i/2 (A - N(U^{n-1})))  U^{n-1} + G(t_{n-1})
    (1/k M + i/2 (A - N(U^{n-1/2}))) U^n      = (1/k M - i/2 (A - N(U^{n-1/2}))) U^{n-1} + G(t_{n-1/2})

with M, A the mass and stiffness matrices, N(W) the f(|W|^2)-weighted mass
matrix and G(t) the load vector of g(t, .).
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import linalg
from .assembly import (Nonlinearity, ScalarField, assemble_load, assemble_mass,
                       assemble_stiffness, assemble_weighted_mass, field_l2_norm, m_norm)
from .errors import NlsError, StepError
from .linalg import BandedComplexMatrix
from .mesh import FeSpace
from .projections import ritz_project


@dataclass(frozen=True)
class TimeGrid:
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("time grid needs at least one step")
        if nodes[0] != 0.0:
            raise ValueError("time grid must start at t=0")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("time steps must be positive")
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, T: float, N: int):
        if N < 1:
            raise ValueError("need N >= 1 steps")
        nodes = np.linspace(0.0, T, N + 1)
        nodes[-1] = T
        return cls(nodes)

    @classmethod
    def perturbed(cls, T: float, N: int, jitter: float, seed: int = 0):
        """Uniform grid with interior nodes moved by up to ``jitter*T/N``."""
        if not 0.0 <= jitter < 0.5:
            raise ValueError(f"time jitter must lie in [0, 0.5), got {jitter}")
        grid = cls.uniform(T, N)
        if jitter == 0.0 or N == 1:
            return grid
        rng = np.random.default_rng(seed)
        nodes = grid.nodes.copy()
        nodes[1:-1] += jitter * (T / N) * rng.uniform(-1.0, 1.0, size=N - 1)
        return cls(nodes)

    @property
    def N(self) -> int:
        return self.nodes.size - 1

    @property
    def T(self) -> float:
        return float(self.nodes[-1])

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def midpoints(self) -> np.ndarray:
        return self.nodes[:-1] + 0.5 * self.steps

    @property
    def k(self) -> float:
        return float(self.steps.max())


@dataclass(frozen=True)
class NlsProblem:
    """u_t = i u_xx + i f(|u|^2) u + g on (a, b), u = 0 at a and b, u(0) = u0."""

    domain: tuple
    T: float
    f: Nonlinearity
    g: ScalarField
    u0: ScalarField
    exact: Optional[ScalarField] = None

    def __post_init__(self):
        a, b = self.domain
        if not a < b:
            raise ValueError("domain must satisfy a < b")
        if self.T <= 0:
            raise ValueError("final time must be positive")
        ends = np.array([a, b], dtype=float)
        if np.max(np.abs(self.u0(0.0, ends))) > 1e-12:
            raise ValueError("u0 must vanish at both endpoints")
        if self.exact is not None:
            xs = np.linspace(a, b, 41)
            if np.max(np.abs(self.exact(0.0, xs) - self.u0(0.0, xs))) > 1e-12:
                raise ValueError("exact solution at t=0 disagrees with u0")


@dataclass
class StepRecord:
    n: int
    t: float
    l2_norm: float
    g_l2: float
    wall_time: float
    err_l2: Optional[float] = None
    err_h1: Optional[float] = None


@dataclass
class Stepper:
    """Holds the cached matrices of one space; N is rebuilt at every solve."""

    space: FeSpace
    f: Nonlinearity
    g: ScalarField
    M: BandedComplexMatrix = field(init=False)
    A: BandedComplexMatrix = field(init=False)

    def __post_init__(self):
        self.M = assemble_mass(self.space)
        self.A = assemble_stiffness(self.space)

    def half_step(self, U_prev, t_prev: float, k_n: float) -> np.ndarray:
        return half_step(self.space, self.M, self.A, self.f, self.g, U_prev, t_prev, k_n)

    def full_step(self, U_prev, U_half, t_prev: float, k_n: float) -> np.ndarray:
        return full_step(self.space, self.M, self.A, self.f, self.g, U_prev, U_half,
                         t_prev, k_n)


def _linear_step(space, M, A, f, frozen, U_prev, load, scale):
    """Solve (scale M + i/2 L) U = (scale M - i/2 L) U_prev + load, L = A - N(frozen)."""
    L = A - assemble_weighted_mass(space, frozen, f)
    lhs = M * scale + L * 0.5j
    rhs = M @ U_prev * scale - (L @ U_prev) * 0.5j + load
    return linalg.band_solve(linalg.band_lu(lhs), rhs)


def half_step(space: FeSpace, M, A, f: Nonlinearity, g, U_prev, t_prev: float,
              k_n: float) -> np.ndarray:
    if k_n <= 0:
        raise ValueError("step size must be positive")
    U_prev = np.asarray(U_prev, dtype=complex)
    return _linear_step(space, M, A, f, U_prev, U_prev,
                        assemble_load(space, g, t_prev), 2.0 / k_n)


def full_step(space: FeSpace, M, A, f: Nonlinearity, g, U_prev, U_half, t_prev: float,
              k_n: float) -> np.ndarray:
    if k_n <= 0:
        raise ValueError("step size must be positive")
    U_prev = np.asarray(U_prev, dtype=complex)
    return _linear_step(space, M, A, f, np.asarray(U_half, dtype=complex), U_prev,
                        assemble_load(space, g, t_prev + 0.5 * k_n), 1.0 / k_n)


def initial_data(space: FeSpace, problem: NlsProblem) -> np.ndarray:
    return ritz_project(space, problem.u0, 0.0)


def advance(space: FeSpace, problem: NlsProblem, grid: TimeGrid, *,
            observer=None) -> tuple[np.ndarray, list[StepRecord]]:
    """March from t=0 to ``grid.T``; one StepRecord per step.

    ``observer(n, t, U)`` is called after each step (and with n=0 for the
    initial data), e.g. to measure errors at every time level.
    """
    if abs(grid.T - problem.T) > 1e-12 * max(1.0, problem.T):
        raise ValueError(f"grid ends at {grid.T}, problem final time is {problem.T}")
    stepper = Stepper(space, problem.f, problem.g)
    U = initial_data(space, problem)
    if observer is not None:
        observer(0, 0.0, U)
    records = []
    nodes, steps = grid.nodes, grid.steps
    for n in range(1, grid.N + 1):
        t_prev, k_n = float(nodes[n - 1]), float(steps[n - 1])
        start = time.perf_counter()
        try:
            U_half = stepper.half_step(U, t_prev, k_n)
            U = stepper.full_step(U, U_half, t_prev, k_n)
        except NlsError as exc:
            raise StepError(n, float(nodes[n]), exc) from exc
        elapsed = time.perf_counter() - start
        g_l2 = field_l2_norm(space, problem.g, t_prev + 0.5 * k_n)
        records.append(StepRecord(n, float(nodes[n]), m_norm(stepper.M, U), g_l2, elapsed))
        if observer is not None:
            observer(n, float(nodes[n]), U)
    return U, records
