"""Velocity fields and the incompressibility / tangency diagnostics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from . import expr as ex
from .mesh import Grid, ScalarField, VectorField, grad

__all__ = [
    "DimensionMismatch",
    "StreamFunction",
    "Shear",
    "Constant",
    "Gradient",
    "Zero",
    "FlowSpec",
    "realize",
    "sample_expression",
    "divergence",
    "divergence_residual",
    "normal_flux_residual",
    "is_compliant",
]


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class StreamFunction:
    """V = (dψ/dy, -dψ/dx); 2D only."""

    psi: str


@dataclass(frozen=True)
class Shear:
    """V = alpha(cross variable) e_direction."""

    alpha: str
    direction: str = "x"


@dataclass(frozen=True)
class Constant:
    vector: tuple


@dataclass(frozen=True)
class Gradient:
    """V = grad m (compressible unless m is harmonic)."""

    m: str


@dataclass(frozen=True)
class Zero:
    pass


FlowSpec = Union[StreamFunction, Shear, Constant, Gradient, Zero]


def sample_expression(source: Union[str, ex.Node], grid: Grid) -> ScalarField:
    node = ex.compile_expr(source) if isinstance(source, str) else source
    if grid.dim == 1:
        if "y" in ex.variables(node):
            raise ex.MissingVariable("expression uses y on a 1D grid")
        return ScalarField(grid, ex.evaluate(node, grid.x))
    X, Y = grid.coordinates()
    return ScalarField(grid, ex.evaluate(node, X, Y))


def realize(spec: FlowSpec, grid: Grid) -> VectorField:
    """Sample a flow on ``grid``.

    Stream-function flows are differentiated with :func:`mesh.grad`, so the
    discrete divergence vanishes to rounding; the nodal stream function is
    kept on the result for the operator's flux assembly.
    """
    if isinstance(spec, Zero):
        return VectorField(grid, tuple(np.zeros(grid.shape) for _ in range(grid.dim)))
    if isinstance(spec, Constant):
        vec = tuple(float(v) for v in np.atleast_1d(spec.vector))
        if len(vec) != grid.dim:
            raise DimensionMismatch(f"constant flow has {len(vec)} components on a {grid.dim}D grid")
        return VectorField(grid, tuple(np.full(grid.shape, v) for v in vec))
    if isinstance(spec, Gradient):
        return grad(sample_expression(spec.m, grid))
    if isinstance(spec, StreamFunction):
        if grid.dim != 2:
            raise DimensionMismatch("stream-function flows need a 2D grid")
        psi = sample_expression(spec.psi, grid)
        gx, gy = grad(psi).components
        return VectorField(grid, (gy, -gx), stream=psi.values)
    if isinstance(spec, Shear):
        if grid.dim != 2:
            raise DimensionMismatch("shear flows need a 2D grid")
        node = ex.compile_expr(spec.alpha)
        X, Y = grid.coordinates()
        if spec.direction == "x":
            if "x" in ex.variables(node):
                raise DimensionMismatch("shear profile along x must depend on y only")
            return VectorField(grid, (ex.evaluate(node, Y, Y), np.zeros(grid.shape)))
        if spec.direction == "y":
            if "y" in ex.variables(node):
                raise DimensionMismatch("shear profile along y must depend on x only")
            return VectorField(grid, (np.zeros(grid.shape), ex.evaluate(node, X, X)))
        raise DimensionMismatch(f"shear direction must be 'x' or 'y', got {spec.direction!r}")
    raise TypeError(f"unknown flow spec {spec!r}")


def divergence(V: VectorField) -> np.ndarray:
    """Nodal divergence with the :func:`mesh.grad` stencils."""
    grid = V.grid
    out = np.zeros(grid.shape)
    for axis, (comp, h) in enumerate(zip(V.components, grid.spacings())):
        out += np.gradient(comp, h, axis=axis, edge_order=2) if grid.dim == 2 else np.gradient(comp, h, edge_order=2)
    return out


def divergence_residual(V: VectorField) -> float:
    """Max |div V| over interior nodes (central differences)."""
    div = divergence(V)
    interior = ~V.grid.boundary_mask()
    return float(np.max(np.abs(div[interior]))) if interior.any() else 0.0


def normal_flux_residual(V: VectorField) -> float:
    """Max |V.n| over boundary nodes; corners are checked against both normals."""
    grid = V.grid
    worst = 0.0
    for axis, pair in enumerate((("left", "right"), ("bottom", "top"))[: grid.dim]):
        comp = V.components[axis]
        for side in pair:
            mask = grid.side_mask(side)
            worst = max(worst, float(np.max(np.abs(comp[mask]))))
    return worst


def is_compliant(V: VectorField, b: float, tol: float = 1e-10) -> bool:
    """Divergence-free, and tangential unless the boundary is Dirichlet."""
    return divergence_residual(V) <= tol and (b >= 1.0 or normal_flux_residual(V) <= tol)
