"""Manufactured solutions, error norms, EOC studies and consistency residuals."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .assembly import Nonlinearity, ScalarField
from .errors import MissingDerivative, NlsError, UnknownCase
from .mesh import FeSpace, build_perturbed_mesh, build_uniform_mesh
from .timestepper import NlsProblem, TimeGrid, advance

PI = math.pi


@dataclass(frozen=True)
class ManufacturedCase:
    name: str
    problem: NlsProblem
    description: str = ""


def _separable(omega: float, shape_amp: float = 1.0):
    """Exact field e^{i omega t} sin(pi x) with its derivative bundle on (0, 1)."""
    w = omega
    s = lambda x: np.sin(PI * np.asarray(x, dtype=float))
    c = lambda x: np.cos(PI * np.asarray(x, dtype=float))
    ph = lambda t: shape_amp * np.exp(1j * w * t)
    return ScalarField(
        value=lambda t, x: ph(t) * s(x),
        dx=lambda t, x: ph(t) * PI * c(x),
        dt=lambda t, x: (1j * w) * ph(t) * s(x),
        dtt=lambda t, x: (1j * w) ** 2 * ph(t) * s(x),
        dttt=lambda t, x: (1j * w) ** 3 * ph(t) * s(x),
        lap=lambda t, x: -PI ** 2 * ph(t) * s(x),
        lap_dt=lambda t, x: -PI ** 2 * (1j * w) * ph(t) * s(x),
        lap_dtt=lambda t, x: -PI ** 2 * (1j * w) ** 2 * ph(t) * s(x),
    )


def _frozen(field_: ScalarField) -> ScalarField:
    """The t=0 slice of a field, as initial data."""
    return ScalarField(value=lambda t, x: field_.value(0.0, x),
                       dx=lambda t, x: field_.dx(0.0, x))


def _ms1(T: float = 1.0, lam: float = 1.0) -> ManufacturedCase:
    u = _separable(1.0)
    s2 = lambda x: np.sin(PI * np.asarray(x, dtype=float)) ** 2
    # u_t = i u, u_xx = -pi^2 u, |u|^2 = sin^2(pi x)
    g = ScalarField(value=lambda t, x: 1j * u.value(t, x) * (1.0 + PI ** 2 - lam * s2(x)))
    problem = NlsProblem((0.0, 1.0), T, Nonlinearity.cubic(lam), g, _frozen(u), exact=u)
    return ManufacturedCase("ms1", problem,
                            "cubic NLS, u = exp(i t) sin(pi x) with manufactured forcing")


def _free1(T: float = 1.0) -> ManufacturedCase:
    u = _separable(-PI ** 2)
    problem = NlsProblem((0.0, 1.0), T, Nonlinearity.zero(), ScalarField.zero(),
                         _frozen(u), exact=u)
    return ManufacturedCase("free1", problem,
                            "free Schroedinger, u = exp(-i pi^2 t) sin(pi x)")


def _zero(T: float = 1.0) -> ManufacturedCase:
    z = ScalarField.zero()
    problem = NlsProblem((0.0, 1.0), T, Nonlinearity.cubic(1.0), z, z, exact=z)
    return ManufacturedCase("zero", problem, "trivial solution u = 0")


BUILTIN_CASES = {"ms1": _ms1, "free1": _free1, "zero": _zero}


def builtin_case(name: str, T: float = 1.0) -> ManufacturedCase:
    try:
        factory = BUILTIN_CASES[name]
    except KeyError:
        raise UnknownCase(f"unknown case {name!r}; choose from {sorted(BUILTIN_CASES)}") from None
    return factory(T=T)


def without_forcing(case: ManufacturedCase) -> ManufacturedCase:
    """Same f and u0 with g removed; the exact solution no longer applies."""
    problem = replace(case.problem, g=ScalarField.zero(), exact=None)
    return ManufacturedCase(case.name + "-nog", problem, case.description + " (g removed)")


def pde_residual(case: ManufacturedCase, nt: int = 50, nx: int = 50) -> float:
    """max |u_t - i u_xx - i f(|u|^2) u - g| over an nt x nx sample grid."""
    p = case.problem
    u = p.exact
    if u is None:
        raise ValueError("case has no exact solution")
    a, b = p.domain
    worst = 0.0
    xs = np.linspace(a, b, nx)
    for t in np.linspace(0.0, p.T, nt):
        uv = u.value(t, xs)
        res = (u.derivative("dt")(t, xs) - 1j * u.derivative("lap")(t, xs)
               - 1j * p.f(np.abs(uv) ** 2) * uv - p.g(t, xs))
        worst = max(worst, float(np.max(np.abs(res))))
    return worst


def error_l2(space: FeSpace, U, exact, t: float, q: Optional[int] = None) -> float:
    """L2 norm of U_h - u(t) with quadrature two orders above assembly."""
    q = space.quad_order + 2 if q is None else q
    pts, wts, _, _ = space.quadrature(q)
    vals, _ = space.evaluate(U, q)
    diff = vals - np.asarray(exact(t, pts), dtype=complex)
    return float(np.sqrt(np.sum(wts * np.abs(diff) ** 2)))


def error_h1(space: FeSpace, U, exact, t: float, q: Optional[int] = None) -> float:
    """H1 seminorm of U_h - u(t)."""
    dx = getattr(exact, "dx", None)
    if dx is None:
        raise MissingDerivative("H1 error needs the x-derivative of the exact field")
    q = space.quad_order + 2 if q is None else q
    pts, wts, _, _ = space.quadrature(q)
    _, ders = space.evaluate(U, q)
    diff = ders - np.asarray(dx(t, pts), dtype=complex)
    return float(np.sqrt(np.sum(wts * np.abs(diff) ** 2)))


def eoc(hs, errs) -> list[float]:
    hs = np.asarray(hs, dtype=float)
    errs = np.asarray(errs, dtype=float)
    return [float(r) for r in np.log(errs[:-1] / errs[1:]) / np.log(hs[:-1] / hs[1:])]


def summary_rate(rates) -> float:
    """Median of successive rates, dropping the coarsest pair when possible."""
    rates = list(rates)
    if len(rates) > 1:
        rates = rates[1:]
    return float(np.median(rates))


@dataclass
class Level:
    m: int
    h: float
    k: float
    N: int
    err_l2: float
    err_h1: float


@dataclass
class EocReport:
    case: str
    degree: int
    coupling: str
    levels: list = field(default_factory=list)

    @property
    def rates_l2(self) -> list[float]:
        return eoc([lv.h for lv in self.levels], [lv.err_l2 for lv in self.levels])

    @property
    def rates_h1(self) -> list[float]:
        return eoc([lv.h for lv in self.levels], [lv.err_h1 for lv in self.levels])

    @property
    def rate_l2(self) -> float:
        return summary_rate(self.rates_l2)

    @property
    def rate_h1(self) -> float:
        return summary_rate(self.rates_h1)

    def rows(self) -> list[dict]:
        r2 = [None] + self.rates_l2
        r1 = [None] + self.rates_h1
        return [dict(level=i, m=lv.m, h=lv.h, k=lv.k, N=lv.N, err_l2=lv.err_l2,
                     rate_l2=r2[i], err_h1=lv.err_h1, rate_h1=r1[i])
                for i, lv in enumerate(self.levels)]


COUPLINGS = ("h", "h^r/2")


def steps_for(T: float, h: float, degree: int, coupling: str, k_factor: float = 1.0) -> int:
    """Number of uniform steps with k ~ k_factor*h (or h^{r/2})."""
    if coupling == "h":
        k = k_factor * h
    elif coupling == "h^r/2":
        k = k_factor * h ** ((degree + 1) / 2.0)
    else:
        raise ValueError(f"unknown coupling {coupling!r}; use one of {COUPLINGS}")
    return max(1, math.ceil(T / k - 1e-9))


def run_level(case: ManufacturedCase, degree: int, m: int, N: int, *, jitter: float = 0.0,
              mesh_jitter: float = 0.0, seed: int = 0, max_over_n: bool = False) -> Level:
    p = case.problem
    a, b = p.domain
    if mesh_jitter:
        mesh = build_perturbed_mesh(a, b, m, mesh_jitter, seed)
    else:
        mesh = build_uniform_mesh(a, b, m)
    space = FeSpace(mesh, degree)
    grid = TimeGrid.perturbed(p.T, N, jitter, seed + m)
    worst = [0.0, 0.0]

    def observe(n, t, U):
        if max_over_n:
            worst[0] = max(worst[0], error_l2(space, U, p.exact, t))
            worst[1] = max(worst[1], error_h1(space, U, p.exact, t))

    U, _ = advance(space, p, grid, observer=observe)
    if max_over_n:
        e2, e1 = worst
    else:
        e2 = error_l2(space, U, p.exact, p.T)
        e1 = error_h1(space, U, p.exact, p.T)
    return Level(m, mesh.h, grid.k, N, e2, e1)


def _threads(levels: int) -> int:
    env = os.environ.get("NLS_THREADS")
    if env:
        return max(1, int(env))
    return levels


def convergence_study(case: ManufacturedCase, degree: int = 1, levels: int = 4, *,
                      m0: int = 8, coupling: str = "h", jitter: float = 0.0,
                      mesh_jitter: float = 0.0, k_factor: float = 1.0, seed: int = 0,
                      max_over_n: bool = False) -> EocReport:
    """Final-time errors on meshes m0*2^l with time steps coupled to h."""
    if levels < 3:
        raise ValueError("a convergence study needs at least 3 levels")
    if case.problem.exact is None:
        raise ValueError("convergence study needs an exact solution")
    a, b = case.problem.domain
    jobs = []
    for lvl in range(levels):
        m = m0 * 2 ** lvl
        N = steps_for(case.problem.T, (b - a) / m, degree, coupling, k_factor)
        jobs.append((lvl, m, N))

    def work(job):
        lvl, m, N = job
        try:
            return run_level(case, degree, m, N, jitter=jitter, mesh_jitter=mesh_jitter,
                             seed=seed, max_over_n=max_over_n)
        except NlsError as exc:
            raise NlsError(f"level {lvl} (m={m}, N={N}): {exc}") from exc

    with ThreadPoolExecutor(max_workers=min(_threads(levels), levels)) as pool:
        results = list(pool.map(work, jobs))
    return EocReport(case.name, degree, coupling, results)


@dataclass
class ConsistencyReport:
    case: str
    t0: float
    ks: list
    r_half_norms: list
    r_full_norms: list

    @property
    def fitted_order_half(self) -> float:
        return fit_order(self.ks, self.r_half_norms)

    @property
    def fitted_order_full(self) -> float:
        return fit_order(self.ks, self.r_full_norms)

    def rows(self) -> list[dict]:
        return [dict(k=k, r_half=rh, r_full=rf)
                for k, rh, rf in zip(self.ks, self.r_half_norms, self.r_full_norms)]


def fit_order(ks, norms) -> float:
    """Least-squares slope of log(norm) against log(k)."""
    ks = np.asarray(ks, dtype=float)
    norms = np.asarray(norms, dtype=float)
    if np.any(norms <= 0):
        return float("nan")
    slope, _ = np.polyfit(np.log(ks), np.log(norms), 1)
    return float(slope)


def consistency_residuals(case: ManufacturedCase, ks, t0: float = 0.3, *, m: int = 64,
                          q: int = 8) -> ConsistencyReport:
    """L2 norms of the defects left when the exact solution is put into both steps."""
    p = case.problem
    u = p.exact
    if u is None:
        raise ValueError("consistency check needs an exact solution")
    lap = u.derivative("lap")
    a, b = p.domain
    space = FeSpace(build_uniform_mesh(a, b, m), 1)
    pts, wts, _, _ = space.quadrature(q)
    f, g = p.f, p.g

    def l2(v):
        return float(np.sqrt(np.sum(wts * np.abs(v) ** 2)))

    half, full = [], []
    for k in ks:
        t_prev, t_half, t_n = t0, t0 + 0.5 * k, t0 + k
        u_prev, u_half, u_n = (u.value(t, pts) for t in (t_prev, t_half, t_n))
        l_prev, l_half, l_n = (lap(t, pts) for t in (t_prev, t_half, t_n))
        r_half = ((u_half - u_prev) / (k / 2) - 1j * (l_half + l_prev) / 2
                  - 1j * f(np.abs(u_prev) ** 2) * (u_half + u_prev) / 2 - g(t_prev, pts))
        r_full = ((u_n - u_prev) / k - 1j * (l_n + l_prev) / 2
                  - 1j * f(np.abs(u_half) ** 2) * (u_n + u_prev) / 2 - g(t_half, pts))
        half.append(l2(r_half))
        full.append(l2(r_full))
    return ConsistencyReport(case.name, t0, [float(k) for k in ks], half, full)


def lipschitz_gap(space: FeSpace, u1, u2, f: Nonlinearity, n_sample: int = 2001):
    """Both sides of ||f(|u1|^2) - f(|u2|^2)|| <= sup|f'| (|u1|_inf + |u2|_inf) ||u1 - u2||.

    L2 norms use the space's high-order quadrature; sup norms sample the
    quadrature points plus ``n_sample`` equispaced points.
    """
    q = min(space.quad_order + 2, 8)
    pts, wts, _, _ = space.quadrature(q)
    v1, _ = space.evaluate(u1, q)
    v2, _ = space.evaluate(u2, q)
    lhs = np.sqrt(np.sum(wts * (f(np.abs(v1) ** 2) - f(np.abs(v2) ** 2)) ** 2))
    dist = np.sqrt(np.sum(wts * np.abs(v1 - v2) ** 2))
    xs = np.linspace(space.mesh.a, space.mesh.b, n_sample)
    sup1 = max(np.max(np.abs(space.evaluate_at(u1, xs))), np.max(np.abs(v1)))
    sup2 = max(np.max(np.abs(space.evaluate_at(u2, xs))), np.max(np.abs(v2)))
    interval = np.linspace(0.0, max(sup1, sup2) ** 2, 1001)
    lip = np.max(np.abs(f.derivative(interval)))
    return float(lhs), float(lip * (sup1 + sup2) * dist)
