"""Ritz (elliptic) projection, L2 projection and the discrete Laplacian."""
from __future__ import annotations

import numpy as np

from . import linalg
from .assembly import (ScalarField, assemble_derivative_load, assemble_load,
                       assemble_mass, assemble_stiffness)
from .errors import MissingDerivative
from .mesh import FeSpace


def ritz_project(space: FeSpace, v: ScalarField, t: float = 0.0) -> np.ndarray:
    """Solve ``(R v', chi') = (v', chi')`` for all chi in the space.

    The right-hand side uses the analytic x-derivative of ``v``.
    """
    if getattr(v, "dx", None) is None:
        raise MissingDerivative("Ritz projection needs the x-derivative of v")
    b = assemble_derivative_load(space, v.dx, t)
    return linalg.solve(assemble_stiffness(space), b)


def l2_project(space: FeSpace, v, t: float = 0.0) -> np.ndarray:
    b = assemble_load(space, v, t)
    return linalg.solve(assemble_mass(space), b)


def discrete_laplacian(space: FeSpace, phi) -> np.ndarray:
    """Coefficients of y with ``(y, chi) = -(phi', chi')``."""
    A = assemble_stiffness(space)
    M = assemble_mass(space)
    return linalg.solve(M, -(A @ np.asarray(phi, dtype=complex)))


def fe_field(space: FeSpace, coeffs) -> ScalarField:
    """Wrap FE coefficients as a time-independent ScalarField with its x-derivative.

    At element boundaries the derivative is taken from the right-hand element.
    """
    c = np.asarray(coeffs, dtype=complex)
    return ScalarField(
        value=lambda t, x: space.evaluate_at(c, x).reshape(np.shape(x)),
        dx=lambda t, x: space.evaluate_at(c, x, derivative=True).reshape(np.shape(x)),
    )
