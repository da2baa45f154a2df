"""A problem bundles grid, boundary condition, coefficients and flow.

It is the unit the analysis routines and the CLI pass around; the named
presets are the acceptance problems.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional

import numpy as np

from . import flows
from .eigen import EigenPair, principal_eigenpair
from .mesh import Grid, ScalarField, VectorField, build_grid
from .operator import BoundaryCondition, CoefficientSet, OperatorMatrix, assemble, assemble_adjoint

__all__ = ["Problem", "PRESETS", "preset"]


@dataclass(frozen=True)
class Problem:
    name: str
    grid: Grid
    b: float
    a: str = "1"
    c: str = "0"
    flow: flows.FlowSpec = field(default_factory=flows.Zero)
    amplitudes: tuple = ()
    tol: float = 1e-10
    max_iter: int = 500
    shift: Optional[float] = None

    @property
    def bc(self) -> BoundaryCondition:
        return BoundaryCondition(self.b)

    @cached_property
    def a_field(self) -> ScalarField:
        return flows.sample_expression(self.a, self.grid)

    @cached_property
    def c_field(self) -> ScalarField:
        return flows.sample_expression(self.c, self.grid)

    @cached_property
    def velocity(self) -> VectorField:
        return flows.realize(self.flow, self.grid)

    @cached_property
    def compliant(self) -> bool:
        return flows.is_compliant(self.velocity, self.b)

    def coefficients(self, A: float = 0.0) -> CoefficientSet:
        return CoefficientSet(self.a_field, self.c_field, self.velocity, A)

    def operators(self, A: float = 0.0) -> tuple[OperatorMatrix, OperatorMatrix]:
        co = self.coefficients(A)
        return assemble(co, self.bc), assemble_adjoint(co, self.bc)

    def solve(self, A: float = 0.0) -> EigenPair:
        M, Ms = self.operators(A)
        return principal_eigenpair(M, Ms, tol=self.tol, max_iter=self.max_iter, shift=self.shift)

    def refined(self, factor: int = 2) -> "Problem":
        """Same problem with each spacing divided by ``factor``."""
        g = self.grid
        nx = (g.nx - 1) * factor + 1
        if g.dim == 1:
            return replace(self, grid=build_grid((g.x0, g.x1), nx))
        ny = (g.ny - 1) * factor + 1
        return replace(self, grid=build_grid((g.x0, g.x1), nx, (g.y0, g.y1), ny))

    def with_grid(self, nx: Optional[int] = None, ny: Optional[int] = None) -> "Problem":
        g = self.grid
        if g.dim == 1:
            return replace(self, grid=build_grid((g.x0, g.x1), nx or g.nx))
        return replace(self, grid=build_grid((g.x0, g.x1), nx or g.nx, (g.y0, g.y1), ny or g.ny))

    def describe(self) -> dict:
        g = self.grid
        out = {
            "name": self.name,
            "dim": g.dim,
            "x": [g.x0, g.x1],
            "nx": g.nx,
            "b": self.b,
            "a": self.a,
            "c": self.c,
            "flow": _flow_dict(self.flow),
            "amplitudes": [float(A) for A in self.amplitudes],
            "tol": self.tol,
            "max_iter": self.max_iter,
            "shift": self.shift,
        }
        if g.dim == 2:
            out.update(y=[g.y0, g.y1], ny=g.ny)
        return out


def _flow_dict(spec) -> dict:
    if isinstance(spec, flows.StreamFunction):
        return {"kind": "stream", "expr": spec.psi}
    if isinstance(spec, flows.Shear):
        return {"kind": "shear", "expr": spec.alpha, "direction": spec.direction}
    if isinstance(spec, flows.Constant):
        return {"kind": "constant", "vector": [float(v) for v in np.atleast_1d(spec.vector)]}
    if isinstance(spec, flows.Gradient):
        return {"kind": "gradient", "expr": spec.m}
    return {"kind": "zero"}


CELLULAR = "sin(pi*x)*sin(pi*y)"
_UNIT = (0.0, 1.0)


def _p1():
    return Problem(
        "P1", build_grid(_UNIT, 513), 1.0, c="0", flow=flows.Constant((1.0,)), amplitudes=(0.0, 1.0, 2.0, 4.0)
    )


def _p2():
    return Problem(
        "P2",
        build_grid(_UNIT, 129, _UNIT, 129),
        0.0,
        c="0",
        flow=flows.StreamFunction(CELLULAR),
        amplitudes=(0.0, 2.0, 4.0, 8.0, 16.0),
    )


def _p3():
    return Problem(
        "P3",
        build_grid(_UNIT, 129, _UNIT, 129),
        0.0,
        c="cos(pi*x)",
        flow=flows.StreamFunction(CELLULAR),
        amplitudes=(0.0, 1.0, 2.0, 4.0, 8.0, 16.0),
    )


def _p4():
    return Problem(
        "P4",
        build_grid(_UNIT, 129, _UNIT, 129),
        0.5,
        c="cos(pi*x)",
        flow=flows.StreamFunction(CELLULAR),
        amplitudes=(0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0),
    )


def _p5():
    return Problem(
        "P5", build_grid(_UNIT, 8193), 0.0, c="x", flow=flows.Constant((1.0,)), amplitudes=(0.0, 5.0, 20.0, 80.0, 100.0)
    )


def _g1():
    return Problem("G1", build_grid(_UNIT, 4097), 1.0, flow=flows.Gradient("x"), amplitudes=(0.0, 1.0, 2.0))


def _g2():
    return Problem("G2", build_grid(_UNIT, 4097), 0.0, flow=flows.Gradient("cos(pi*x)"), amplitudes=(0.0, 1.0, 2.0))


PRESETS = {"P1": _p1, "P2": _p2, "P3": _p3, "P4": _p4, "P5": _p5, "G1": _g1, "G2": _g2}


def preset(name: str) -> Problem:
    """Fresh copy of a named preset (P1-P5, plus gradient-flow G1/G2)."""
    try:
        return PRESETS[name.upper()]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
