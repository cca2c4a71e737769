"""Linearly implicit two-level Galerkin FE solver for the 1-D NLS equation."""
from .assembly import (Nonlinearity, ScalarField, assemble_load, assemble_mass,
                       assemble_stiffness, assemble_weighted_mass)
from .errors import (MissingDerivative, NlsError, NonFiniteWeight, SingularMatrix, StepError,
                     UnknownCase)
from .linalg import BandedComplexMatrix, BandedLU, band_lu, band_solve, matvec
from .mesh import (FeSpace, Mesh1D, QuadRule, build_perturbed_mesh, build_uniform_mesh,
                   eval_basis, gauss_rule)
from .projections import discrete_laplacian, fe_field, l2_project, ritz_project
from .timestepper import (NlsProblem, StepRecord, TimeGrid, advance, full_step, half_step,
                          initial_data)
from .verification import (ConsistencyReport, EocReport, ManufacturedCase, builtin_case,
                           consistency_residuals, convergence_study, error_h1, error_l2)

__version__ = "0.1.0"
