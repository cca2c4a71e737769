"""Mass, stiffness, weighted mass and load assembly on a FeSpace."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import MissingDerivative, NonFiniteWeight
from .linalg import BandedComplexMatrix
from .mesh import FeSpace


@dataclass(frozen=True)
class Nonlinearity:
    """Real nonlinearity f on [0, inf) acting as f(|u|^2).

    ``kind`` is one of "cubic" (f(x) = lam*x), "power" (f(x) = lam*x**sigma)
    or "custom" (callables ``func`` and ``deriv``).
    """

    kind: str = "cubic"
    lam: float = 1.0
    sigma: float = 1.0
    func: Optional[Callable] = None
    deriv: Optional[Callable] = None

    def __post_init__(self):
        if self.kind not in ("cubic", "power", "custom"):
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        if self.kind == "custom" and (self.func is None or self.deriv is None):
            raise ValueError("custom nonlinearity needs both func and deriv")

    @classmethod
    def cubic(cls, lam: float = 1.0):
        return cls("cubic", lam=lam)

    @classmethod
    def power(cls, lam: float, sigma: float):
        return cls("power", lam=lam, sigma=sigma)

    @classmethod
    def custom(cls, func, deriv):
        return cls("custom", func=func, deriv=deriv)

    @classmethod
    def zero(cls):
        return cls("cubic", lam=0.0)

    @classmethod
    def constant(cls, c: float):
        return cls.custom(lambda x: np.full_like(np.asarray(x, dtype=float), c),
                          lambda x: np.zeros_like(np.asarray(x, dtype=float)))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "cubic":
            return self.lam * x
        if self.kind == "power":
            return self.lam * x ** self.sigma
        return np.asarray(self.func(x), dtype=float)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "cubic":
            return np.full_like(x, self.lam)
        if self.kind == "power":
            return self.lam * self.sigma * x ** (self.sigma - 1.0)
        return np.asarray(self.deriv(x), dtype=float)

    def to_dict(self) -> dict:
        if self.kind == "custom":
            return {"kind": "custom"}
        return {"kind": self.kind, "lam": self.lam, "sigma": self.sigma}


_DERIVS = ("dx", "dt", "dtt", "dttt", "lap", "lap_dt", "lap_dtt")


@dataclass(frozen=True)
class ScalarField:
    """Complex field (t, x) -> value, vectorized over numpy ``x``.

    Optional derivative callables share the signature; ``lap`` is d^2/dx^2.
    """

    value: Callable
    dx: Optional[Callable] = None
    dt: Optional[Callable] = None
    dtt: Optional[Callable] = None
    dttt: Optional[Callable] = None
    lap: Optional[Callable] = None
    lap_dt: Optional[Callable] = None
    lap_dtt: Optional[Callable] = None

    def __call__(self, t, x):
        return self.value(t, x)

    def derivative(self, name: str) -> Callable:
        if name not in _DERIVS:
            raise ValueError(f"unknown derivative {name!r}")
        fn = getattr(self, name)
        if fn is None:
            raise MissingDerivative(f"field has no {name!r} derivative")
        return fn

    @classmethod
    def zero(cls):
        z = lambda t, x: np.zeros_like(np.asarray(x, dtype=float), dtype=complex)
        return cls(z, **{name: z for name in _DERIVS})


def _sample(fn, t, x) -> np.ndarray:
    vals = np.asarray(fn(t, x), dtype=complex)
    if vals.shape != x.shape:
        vals = np.broadcast_to(vals, x.shape).astype(complex)
    return vals


def _scatter(space: FeSpace, local: np.ndarray) -> BandedComplexMatrix:
    """Sum element matrices ``(m, p+1, p+1)`` into band storage over free DOFs."""
    p = space.degree
    n = space.n_dof
    dofs = space.dof_map
    data = np.zeros((2 * p + 1, n), dtype=complex)
    rows = np.broadcast_to(dofs[:, :, None], local.shape)
    cols = np.broadcast_to(dofs[:, None, :], local.shape)
    keep = (rows >= 0) & (cols >= 0)
    r, c, v = rows[keep], cols[keep], local[keep]
    # band layout with kl = ku = p: A[i, j] -> data[p + i - j, j]
    np.add.at(data, (p + r - c, c), v)
    return BandedComplexMatrix(n, p, p, data)


def _scatter_vector(space: FeSpace, local: np.ndarray) -> np.ndarray:
    dofs = space.dof_map
    out = np.zeros(space.n_dof, dtype=complex)
    keep = dofs >= 0
    np.add.at(out, dofs[keep], local[keep])
    return out


def weighted_mass_local(space: FeSpace, weight: np.ndarray) -> np.ndarray:
    """Element matrices of int weight*phi_i*phi_j for weights at quad points."""
    _, wts, phi, _ = space.quadrature()
    return np.einsum("eq,iq,jq->eij", wts * weight, phi, phi)


def assemble_mass(space: FeSpace) -> BandedComplexMatrix:
    key = ("mass",)
    if key not in space._cache:
        _, wts, _, _ = space.quadrature()
        space._cache[key] = _scatter(space, weighted_mass_local(space, np.ones_like(wts)))
    return space._cache[key]


def assemble_stiffness(space: FeSpace) -> BandedComplexMatrix:
    key = ("stiffness",)
    if key not in space._cache:
        _, wts, _, dphi = space.quadrature()
        local = np.einsum("eq,eiq,ejq->eij", wts, dphi, dphi)
        space._cache[key] = _scatter(space, local)
    return space._cache[key]


def assemble_weighted_mass(space: FeSpace, W, f: Nonlinearity) -> BandedComplexMatrix:
    """Matrix of ``int f(|W|^2) phi_k phi_j`` with W evaluated at quad points."""
    pts, _, _, _ = space.quadrature()
    vals, _ = space.evaluate(W)
    weight = f(np.abs(vals) ** 2)
    if not np.all(np.isfinite(weight)):
        bad = pts[~np.isfinite(weight)][0]
        raise NonFiniteWeight(f"f(|W|^2) is not finite at x={bad:.6g}")
    return _scatter(space, weighted_mass_local(space, weight))


def assemble_load(space: FeSpace, g, t: float) -> np.ndarray:
    """Load vector ``(g(t, .), phi_j)`` by quadrature of the callable g."""
    pts, wts, phi, _ = space.quadrature(space.data_quad_order)
    vals = _sample(g, t, pts)
    if not np.all(np.isfinite(vals)):
        bad = pts[~np.isfinite(vals)][0]
        raise NonFiniteWeight(f"g(t={t:.6g}, x) is not finite at x={bad:.6g}")
    local = np.einsum("eq,iq->ei", wts * vals, phi)
    return _scatter_vector(space, local)


def assemble_derivative_load(space: FeSpace, dv, t: float) -> np.ndarray:
    """Vector ``(dv(t, .), phi_j')`` used by the Ritz projection."""
    pts, wts, _, dphi = space.quadrature(space.data_quad_order)
    vals = _sample(dv, t, pts)
    local = np.einsum("eq,eiq->ei", wts * vals, dphi)
    return _scatter_vector(space, local)


def field_l2_norm(space: FeSpace, g, t: float, q: int | None = None) -> float:
    """L2 norm of a callable by the same Gauss rule used for load vectors."""
    pts, wts, _, _ = space.quadrature(space.data_quad_order if q is None else q)
    vals = _sample(g, t, pts)
    return float(np.sqrt(np.sum(wts * np.abs(vals) ** 2)))


def m_norm(M: BandedComplexMatrix, U) -> float:
    """sqrt(U^* M U); equals the L2 norm of the FE function for exact M."""
    return float(np.sqrt(max(np.real(np.vdot(U, M @ U)), 0.0)))
