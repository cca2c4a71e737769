"""1-D meshes, Lagrange spaces with Dirichlet elimination, Gauss quadrature."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

SUPPORTED_DEGREES = (1, 2, 3)


@dataclass(frozen=True)
class Mesh1D:
    a: float
    b: float
    nodes: np.ndarray
    gamma: float = 10.0

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        nodes.flags.writeable = False
        if nodes.ndim != 1 or nodes.size < 3:
            raise ValueError("mesh needs at least 2 elements")
        if not self.a < self.b:
            raise ValueError(f"need a < b, got a={self.a}, b={self.b}")
        if nodes[0] != self.a or nodes[-1] != self.b:
            raise ValueError("first/last node must equal the interval endpoints")
        lengths = np.diff(nodes)
        if np.any(lengths <= 0):
            raise ValueError("mesh nodes must be strictly increasing")
        if self.ratio > self.gamma:
            raise ValueError(
                f"quasi-uniformity ratio {self.ratio:.3g} exceeds bound {self.gamma}"
            )

    @property
    def m(self) -> int:
        return self.nodes.size - 1

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def h(self) -> float:
        return float(self.lengths.max())

    @property
    def h_min(self) -> float:
        return float(self.lengths.min())

    @property
    def ratio(self) -> float:
        lengths = np.diff(self.nodes)
        return float(lengths.max() / lengths.min())


def build_uniform_mesh(a: float, b: float, m: int) -> Mesh1D:
    if m < 2:
        raise ValueError(f"need m >= 2 elements, got {m}")
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    nodes = np.linspace(a, b, m + 1)
    nodes[0], nodes[-1] = a, b
    return Mesh1D(a, b, nodes)


def build_perturbed_mesh(a: float, b: float, m: int, jitter: float,
                         rng_seed: int = 0, gamma: float = 10.0) -> Mesh1D:
    """Uniform mesh with interior nodes moved by at most ``jitter*(b-a)/m``."""
    if not 0.0 <= jitter < 0.5:
        raise ValueError(f"jitter must lie in [0, 0.5), got {jitter}")
    base = build_uniform_mesh(a, b, m)
    if jitter == 0.0:
        return Mesh1D(a, b, base.nodes, gamma=gamma)
    rng = np.random.default_rng(rng_seed)
    h = (b - a) / m
    nodes = base.nodes.copy()
    nodes[1:-1] += jitter * h * rng.uniform(-1.0, 1.0, size=m - 1)
    return Mesh1D(a, b, nodes, gamma=gamma)


@dataclass(frozen=True)
class QuadRule:
    points: np.ndarray
    weights: np.ndarray

    @property
    def q(self) -> int:
        return self.points.size


def gauss_rule(q: int) -> QuadRule:
    if not 1 <= q <= 8:
        raise ValueError(f"quadrature order must be in 1..8, got {q}")
    x, w = np.polynomial.legendre.leggauss(q)
    return QuadRule(x, w)


def reference_nodes(degree: int) -> np.ndarray:
    return np.linspace(-1.0, 1.0, degree + 1)


def eval_basis(degree: int, ref_point):
    """Lagrange shape functions on [-1, 1] with equispaced nodes.

    Returns ``(values, derivatives)``, each of shape ``(degree+1,)`` for a
    scalar point or ``(degree+1, npts)`` for an array of points.
    """
    if degree not in SUPPORTED_DEGREES:
        raise ValueError(f"unsupported degree {degree}; use one of {SUPPORTED_DEGREES}")
    xi = np.asarray(ref_point, dtype=float)
    nodes = reference_nodes(degree)
    n = degree + 1
    vals = np.ones((n,) + xi.shape)
    ders = np.zeros((n,) + xi.shape)
    for i in range(n):
        others = [j for j in range(n) if j != i]
        denom = np.prod([nodes[i] - nodes[j] for j in others])
        factors = [xi - nodes[j] for j in others]
        vals[i] = np.prod(factors, axis=0) / denom if factors else 1.0
        # product rule: sum over the dropped factor
        acc = np.zeros(xi.shape)
        for skip in range(len(others)):
            term = np.ones(xi.shape)
            for idx, fac in enumerate(factors):
                if idx != skip:
                    term = term * fac
            acc = acc + term
        ders[i] = acc / denom
    return vals, ders


@dataclass(frozen=True)
class FeSpace:
    """Continuous degree-p Lagrange space on ``mesh`` with zero boundary values.

    Global nodes are numbered left to right, ``e*p + i`` for local node ``i``
    of element ``e``. The two endpoint nodes are eliminated and the remaining
    ``m*p - 1`` free DOFs are indexed ``global - 1``.

    ``quad_order`` (default p+2) integrates the polynomial matrix entries;
    ``data_quad_order`` is used for integrals of user callables.
    """

    mesh: Mesh1D
    degree: int = 1
    quad_order: int | None = None
    data_quad_order: int = 8
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.degree not in SUPPORTED_DEGREES:
            raise ValueError(f"unsupported degree {self.degree}")
        if self.quad_order is None:
            object.__setattr__(self, "quad_order", self.degree + 2)

    @property
    def p(self) -> int:
        return self.degree

    @property
    def r(self) -> int:
        return self.degree + 1

    @property
    def n_dof(self) -> int:
        return self.mesh.m * self.degree - 1

    @property
    def n_global(self) -> int:
        return self.mesh.m * self.degree + 1

    @property
    def bandwidth(self) -> int:
        return self.degree

    @cached_property
    def dof_map(self) -> np.ndarray:
        """(m, p+1) free DOF indices; -1 marks an eliminated boundary node."""
        p = self.degree
        glob = np.arange(self.mesh.m)[:, None] * p + np.arange(p + 1)[None, :]
        free = glob - 1
        free[glob == 0] = -1
        free[glob == self.n_global - 1] = -1
        free.flags.writeable = False
        return free

    @cached_property
    def global_coords(self) -> np.ndarray:
        """Physical coordinates of every global node, boundary included."""
        p = self.degree
        xs = np.empty(self.n_global)
        ref = (reference_nodes(p) + 1.0) / 2.0
        x0 = self.mesh.nodes[:-1, None]
        xs[:-1] = (x0 + self.mesh.lengths[:, None] * ref[None, :-1]).ravel()
        xs[-1] = self.mesh.b
        return xs

    @property
    def dof_coords(self) -> np.ndarray:
        return self.global_coords[1:-1]

    def quadrature(self, q: int | None = None):
        """Physical points ``(m, q)``, weights ``(m, q)`` and basis tables.

        Basis tables are ``phi`` (p+1, q) and ``dphi`` (m, p+1, q), the latter
        already mapped to physical derivatives.
        """
        q = self.quad_order if q is None else q
        key = ("quad", q)
        if key not in self._cache:
            rule = gauss_rule(q)
            h = self.mesh.lengths
            x0 = self.mesh.nodes[:-1]
            pts = x0[:, None] + 0.5 * h[:, None] * (rule.points[None, :] + 1.0)
            wts = 0.5 * h[:, None] * rule.weights[None, :]
            phi, dref = eval_basis(self.degree, rule.points)
            dphi = dref[None, :, :] * (2.0 / h)[:, None, None]
            self._cache[key] = (pts, wts, phi, dphi)
        return self._cache[key]

    def padded(self, coeffs) -> np.ndarray:
        """Coefficient vector with the zero boundary values re-inserted."""
        c = np.asarray(coeffs)
        if c.shape != (self.n_dof,):
            raise ValueError(f"expected {self.n_dof} coefficients, got shape {c.shape}")
        full = np.zeros(self.n_global, dtype=np.result_type(c.dtype, float))
        full[1:-1] = c
        return full

    def element_coeffs(self, coeffs) -> np.ndarray:
        full = self.padded(coeffs)
        p = self.degree
        idx = np.arange(self.mesh.m)[:, None] * p + np.arange(p + 1)[None, :]
        return full[idx]

    def evaluate(self, coeffs, q: int | None = None):
        """FE function values and x-derivatives at the quadrature points."""
        _, _, phi, dphi = self.quadrature(q)
        ec = self.element_coeffs(coeffs)
        vals = ec @ phi
        ders = np.einsum("ei,eiq->eq", ec, dphi)
        return vals, ders

    def evaluate_at(self, coeffs, x, derivative: bool = False) -> np.ndarray:
        """Point values (or x-derivatives) of the FE function at physical ``x``."""
        x_in = np.asarray(x, dtype=float)
        x = np.atleast_1d(x_in).ravel()
        nodes = self.mesh.nodes
        e = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, self.mesh.m - 1)
        xi = 2.0 * (x - nodes[e]) / self.mesh.lengths[e] - 1.0
        phi, dphi = eval_basis(self.degree, xi)
        ec = self.element_coeffs(coeffs)[e]
        if derivative:
            out = np.einsum("ni,in->n", ec, dphi) * (2.0 / self.mesh.lengths[e])
        else:
            out = np.einsum("ni,in->n", ec, phi)
        return out.reshape(x_in.shape) if x_in.ndim else out

    def interpolate(self, fn) -> np.ndarray:
        """Nodal interpolant of a vectorized callable ``fn(x)``; boundary dropped."""
        return np.asarray(fn(self.dof_coords), dtype=complex)


def make_space(a: float, b: float, m: int, degree: int = 1, *, jitter: float = 0.0,
               seed: int = 0) -> FeSpace:
    if jitter:
        mesh = build_perturbed_mesh(a, b, m, jitter, seed)
    else:
        mesh = build_uniform_mesh(a, b, m)
    return FeSpace(mesh, degree)
