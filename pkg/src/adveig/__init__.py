"""Principal eigenvalues of advection-diffusion operators with large drift.

The package assembles L_A = -div(a grad) + A V.grad + c on structured
grids under Dirichlet, Robin or Neumann conditions, computes the principal
eigenpair of L_A and its adjoint, and checks the variational identities and
monotonicity properties of A -> lambda_1(A).
"""

from .eigen import EigenPair, principal_eigenpair
from .mesh import Grid, ScalarField, VectorField, build_grid
from .operator import BoundaryCondition, CoefficientSet, assemble, assemble_adjoint
from .problem import Problem, preset

__version__ = "0.1.0"

__all__ = [
    "EigenPair",
    "principal_eigenpair",
    "Grid",
    "ScalarField",
    "VectorField",
    "build_grid",
    "BoundaryCondition",
    "CoefficientSet",
    "assemble",
    "assemble_adjoint",
    "Problem",
    "preset",
]
