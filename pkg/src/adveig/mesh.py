"""Structured vertex grids on intervals and rectangles.

Nodal arrays have shape ``(nx,)`` in 1D and ``(nx, ny)`` in 2D; flattening
is C-order, so node ``(i, j)`` has linear index ``i * ny + j``.
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

__all__ = [
    "BadGridSpec",
    "FieldError",
    "Side",
    "Grid",
    "ScalarField",
    "VectorField",
    "build_grid",
    "integrate",
    "boundary_integrate",
    "grad",
    "inner",
    "write_field_csv",
]

SIDES = ("left", "right", "bottom", "top")


class BadGridSpec(ValueError):
    pass


class FieldError(ValueError):
    """A field violates its invariants (wrong size, non-finite values)."""


class Side(enum.IntFlag):
    INTERIOR = 0
    LEFT = 1
    RIGHT = 2
    BOTTOM = 4
    TOP = 8


@dataclass(frozen=True)
class Grid:
    dim: int
    x0: float
    x1: float
    nx: int
    y0: float = 0.0
    y1: float = 0.0
    ny: int = 1

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise BadGridSpec(f"dim must be 1 or 2, got {self.dim}")
        if self.nx < 3:
            raise BadGridSpec(f"nx must be >= 3, got {self.nx}")
        if not self.x1 > self.x0:
            raise BadGridSpec(f"degenerate x extent [{self.x0}, {self.x1}]")
        if self.dim == 2:
            if self.ny < 3:
                raise BadGridSpec(f"ny must be >= 3, got {self.ny}")
            if not self.y1 > self.y0:
                raise BadGridSpec(f"degenerate y extent [{self.y0}, {self.y1}]")
        elif self.ny != 1:
            raise BadGridSpec("a 1D grid has ny = 1")

    @property
    def hx(self) -> float:
        return (self.x1 - self.x0) / (self.nx - 1)

    @property
    def hy(self) -> float:
        return (self.y1 - self.y0) / (self.ny - 1) if self.dim == 2 else 0.0

    @property
    def h(self) -> float:
        return max(self.hx, self.hy)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.nx,) if self.dim == 1 else (self.nx, self.ny)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def volume(self) -> float:
        vol = self.x1 - self.x0
        return vol * (self.y1 - self.y0) if self.dim == 2 else vol

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.hx * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.y0 + self.hy * np.arange(self.ny)

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Nodal coordinate arrays, each of ``shape``."""
        if self.dim == 1:
            return (self.x,)
        return tuple(np.meshgrid(self.x, self.y, indexing="ij"))

    def spacings(self) -> tuple[float, ...]:
        return (self.hx,) if self.dim == 1 else (self.hx, self.hy)

    def tags(self) -> np.ndarray:
        """Per-node :class:`Side` bit mask (0 for interior nodes)."""
        t = np.zeros(self.shape, dtype=np.int8)
        if self.dim == 1:
            t[0] |= Side.LEFT
            t[-1] |= Side.RIGHT
        else:
            t[0, :] |= Side.LEFT
            t[-1, :] |= Side.RIGHT
            t[:, 0] |= Side.BOTTOM
            t[:, -1] |= Side.TOP
        return t

    def boundary_mask(self) -> np.ndarray:
        return self.tags() != 0

    def side_mask(self, side: str) -> np.ndarray:
        flag = Side[side.upper()]
        return (self.tags() & flag) != 0

    def weights(self) -> np.ndarray:
        """Trapezoidal quadrature weights per node."""
        wx = np.full(self.nx, self.hx)
        wx[[0, -1]] *= 0.5
        if self.dim == 1:
            return wx
        wy = np.full(self.ny, self.hy)
        wy[[0, -1]] *= 0.5
        return np.outer(wx, wy)

    def side_weights(self, side: str) -> np.ndarray:
        """Trapezoidal weights of one boundary side, zero off that side."""
        w = np.zeros(self.shape)
        if self.dim == 1:
            if side not in ("left", "right"):
                raise BadGridSpec(f"1D grids have no {side!r} side")
            w[0 if side == "left" else -1] = 1.0
            return w
        if side in ("left", "right"):
            wy = np.full(self.ny, self.hy)
            wy[[0, -1]] *= 0.5
            w[0 if side == "left" else -1, :] = wy
        elif side in ("bottom", "top"):
            wx = np.full(self.nx, self.hx)
            wx[[0, -1]] *= 0.5
            w[:, 0 if side == "bottom" else -1] = wx
        else:
            raise BadGridSpec(f"unknown side {side!r}")
        return w

    def sides(self) -> tuple[str, ...]:
        return SIDES[:2] if self.dim == 1 else SIDES

    def boundary_weights(self) -> np.ndarray:
        """Sum of the per-side trapezoidal weights (corners collect two)."""
        return sum(self.side_weights(s) for s in self.sides())

    def field(self, values) -> "ScalarField":
        return ScalarField(self, values)

    def sample(self, func) -> "ScalarField":
        """Sample ``func(x)`` (1D) or ``func(x, y)`` (2D) at the nodes."""
        return ScalarField(self, func(*self.coordinates()))


def build_grid(
    x: tuple[float, float],
    nx: int,
    y: Optional[tuple[float, float]] = None,
    ny: Optional[int] = None,
) -> Grid:
    """Build a 1D grid on ``x`` or, when ``y`` is given, a 2D tensor grid."""
    try:
        if y is None:
            if ny not in (None, 1):
                raise BadGridSpec("ny given without a y extent")
            return Grid(1, float(x[0]), float(x[1]), int(nx))
        if ny is None:
            raise BadGridSpec("ny is required for a 2D grid")
        return Grid(2, float(x[0]), float(x[1]), int(nx), float(y[0]), float(y[1]), int(ny))
    except (TypeError, IndexError) as exc:
        raise BadGridSpec(str(exc)) from exc


def _frozen(values, shape) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim == 0:
        arr = np.full(shape, float(arr))
    if arr.size != int(np.prod(shape)):
        raise FieldError(f"expected {int(np.prod(shape))} values, got {arr.size}")
    arr = arr.reshape(shape)
    if not np.all(np.isfinite(arr)):
        raise FieldError("field contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, self.grid.shape))

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


@dataclass(frozen=True, eq=False)
class VectorField:
    """Nodal vector samples, ``components[k]`` of grid shape.

    ``stream`` optionally carries the nodal stream function the field was
    derived from; the operator assembles conservative edge fluxes from it.
    """

    grid: Grid
    components: tuple
    stream: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        comps = tuple(_frozen(c, self.grid.shape) for c in self.components)
        if len(comps) != self.grid.dim:
            raise FieldError(f"expected {self.grid.dim} components, got {len(comps)}")
        object.__setattr__(self, "components", comps)
        if self.stream is not None:
            object.__setattr__(self, "stream", _frozen(self.stream, self.grid.shape))

    def dot(self, other: "VectorField") -> np.ndarray:
        return sum(a * b for a, b in zip(self.components, other.components))

    def norm_inf(self) -> float:
        return float(np.max(np.sqrt(sum(c**2 for c in self.components))))

    def scaled(self, factor: float) -> "VectorField":
        stream = None if self.stream is None else factor * self.stream
        return VectorField(self.grid, tuple(factor * c for c in self.components), stream)


def _values(f) -> np.ndarray:
    return f.values if isinstance(f, ScalarField) else np.asarray(f, dtype=float)


def integrate(f) -> float:
    """Trapezoidal (tensor-product) integral over the domain."""
    grid = f.grid
    return float(np.sum(grid.weights() * f.values))


def boundary_integrate(f, sides: Optional[Iterable[str]] = None) -> float:
    """Trapezoidal integral over the boundary (or the listed sides).

    In 1D the boundary integral is the sum of the two endpoint values.
    """
    grid = f.grid
    sides = grid.sides() if sides is None else tuple(sides)
    return float(sum(np.sum(grid.side_weights(s) * f.values) for s in sides))


def inner(grid: Grid, f, g) -> float:
    """Quadrature inner product of two nodal fields or arrays."""
    return float(np.sum(grid.weights().reshape(-1) * _values(f).reshape(-1) * _values(g).reshape(-1)))


def grad(f) -> VectorField:
    """Central differences inside, one-sided second-order at the boundary."""
    grid = f.grid
    if grid.dim == 1:
        return VectorField(grid, (np.gradient(f.values, grid.hx, edge_order=2),))
    gx, gy = np.gradient(f.values, grid.hx, grid.hy, edge_order=2)
    return VectorField(grid, (gx, gy))


def _g17(v: float) -> str:
    return format(float(v), ".17g")


def write_field_csv(path_or_buf, *fields, names: Optional[list[str]] = None) -> str:
    """Write nodal fields as CSV with columns ``x[,y],<names...>``.

    Accepts ScalarFields and VectorFields (expanded per component).  Returns
    the text and writes it when ``path_or_buf`` is a path or file object.
    """
    grid = fields[0].grid
    columns, labels = [], []
    for k, f in enumerate(fields):
        if isinstance(f, VectorField):
            for c, comp in enumerate(f.components):
                columns.append(comp.reshape(-1))
                labels.append(f"V{c + 1}" if names is None else f"{names[k]}{c + 1}")
        else:
            columns.append(f.values.reshape(-1))
            labels.append("value" if names is None else names[k])
    coords = [c.reshape(-1) for c in grid.coordinates()]
    header = ["x", "y"][: grid.dim] + labels
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in zip(*coords, *columns):
        buf.write(",".join(_g17(v) for v in row) + "\n")
    text = buf.getvalue()
    if path_or_buf is not None:
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w", newline="") as fh:
                fh.write(text)
    return text
