"""Finite-difference assembly of L_A = -div(a grad) + A V.grad + c.

The scheme is vertex centred.  Each node owns the dual cell of its
trapezoidal weight ``w``; the weighted matrix ``W M`` is assembled edge by
edge:

* diffusion: conductance ``a_e |face| / |edge|`` with ``a_e`` the arithmetic
  mean of the end values.  On boundary rows this is exactly the ghost-node
  elimination with a mirrored face coefficient, so ``W M_diff`` is symmetric.
* Robin: ``kappa * boundary_weight`` on the diagonal; Dirichlet boundary
  rows are replaced by identity rows.
* advection: ``T = S - diag(S 1)`` where ``W S`` is skew-symmetric with entry
  ``F_e / 2`` per edge and ``F_e`` the volumetric flux through the dual face.
  In the interior this is second-order central differencing of ``V.grad``.
  For a stream-function flow the fluxes are differences of the stream
  function at dual vertices, so ``S 1 = 0`` exactly when the stream function
  is constant on the boundary and ``T`` is exactly skew in the quadrature
  inner product.  In general the adjoint uses ``-(T + 2 diag(S 1))``, the
  exact quadrature transpose, which carries the ``div V`` term.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .mesh import Grid, ScalarField, VectorField, inner

__all__ = [
    "EllipticityViolated",
    "DimensionMismatch",
    "PecletWarning",
    "BoundaryCondition",
    "CoefficientSet",
    "OperatorMatrix",
    "assemble",
    "assemble_adjoint",
    "apply",
    "adjoint_consistency_check",
    "write_matrix_market",
]


class EllipticityViolated(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class PecletWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class BoundaryCondition:
    """b u + (1 - b) (a grad u).n = 0 with a single b for the whole boundary."""

    b: float

    def __post_init__(self):
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must lie in [0, 1], got {self.b}")

    @property
    def kappa(self) -> float:
        return math.inf if self.b == 1.0 else self.b / (1.0 - self.b)

    @property
    def dirichlet(self) -> bool:
        return self.b == 1.0

    @property
    def kind(self) -> str:
        if self.b == 1.0:
            return "dirichlet"
        return "neumann" if self.b == 0.0 else "robin"


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    a: ScalarField
    c: ScalarField
    V: VectorField
    A: float = 0.0

    def __post_init__(self):
        grid = self.a.grid
        if self.c.grid != grid or self.V.grid != grid:
            raise DimensionMismatch("coefficients live on different grids")
        if float(np.min(self.a.values)) <= 0.0:
            raise EllipticityViolated(f"min a = {float(np.min(self.a.values))} is not positive")
        object.__setattr__(self, "A", float(self.A))

    @property
    def grid(self) -> Grid:
        return self.a.grid

    def with_amplitude(self, A: float) -> "CoefficientSet":
        return CoefficientSet(self.a, self.c, self.V, A)

    def with_flow(self, V: VectorField) -> "CoefficientSet":
        return CoefficientSet(self.a, self.c, V, self.A)


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Assembled operator ``matrix = base + amplitude * advection``.

    ``amplitude`` is ``A`` for the forward operator and ``-A`` for the adjoint.
    ``free`` marks rows that are not Dirichlet identity rows.
    """

    matrix: sp.csr_matrix
    base: sp.csr_matrix
    advection: sp.csr_matrix
    coeffs: CoefficientSet
    bc: BoundaryCondition
    adjoint: bool
    free: np.ndarray
    peclet: float
    peclet_warning: bool
    transport_defect: float = field(default=0.0)

    @property
    def grid(self) -> Grid:
        return self.coeffs.grid

    @property
    def amplitude(self) -> float:
        return -self.coeffs.A if self.adjoint else self.coeffs.A

    @property
    def weights(self) -> np.ndarray:
        return self.grid.weights().reshape(-1)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


def _edges(grid: Grid):
    """Yield ``(k, l, face, length, axis)`` arrays for each edge family."""
    idx = np.arange(grid.size).reshape(grid.shape)
    if grid.dim == 1:
        n = grid.nx - 1
        yield idx[:-1], idx[1:], np.ones(n), grid.hx, 0
        return
    fy = np.ones(grid.ny)
    fy[[0, -1]] = 0.5
    fx = np.ones(grid.nx)
    fx[[0, -1]] = 0.5
    yield idx[:-1, :], idx[1:, :], np.broadcast_to(grid.hy * fy, (grid.nx - 1, grid.ny)), grid.hx, 0
    yield idx[:, :-1], idx[:, 1:], np.broadcast_to((grid.hx * fx)[:, None], (grid.nx, grid.ny - 1)), grid.hy, 1


def _dual_stream(psi: np.ndarray) -> np.ndarray:
    """Stream function at dual-cell vertices by averaging nodal values."""

    def averaging(n):
        P = np.zeros((n + 1, n))
        P[0, 0] = 1.0
        P[n, n - 1] = 1.0
        for p in range(1, n):
            P[p, p - 1] = P[p, p] = 0.5
        return P

    nx, ny = psi.shape
    return averaging(nx) @ psi @ averaging(ny).T


def _fluxes(V: VectorField):
    """Dual-face fluxes per edge family, matching :func:`_edges` order."""
    grid = V.grid
    if V.stream is not None and grid.dim == 2:
        psid = _dual_stream(V.stream)
        nx, ny = grid.shape
        fx = psid[1:nx, 1 : ny + 1] - psid[1:nx, 0:ny]
        fy = -(psid[1 : nx + 1, 1:ny] - psid[0:nx, 1:ny])
        return [fx, fy]
    out = []
    for k, l, face, _, axis in _edges(grid):
        comp = V.components[axis].reshape(-1)
        out.append(0.5 * (comp[k] + comp[l]) * face)
    return out


def _assemble_parts(coeffs: CoefficientSet, bc: BoundaryCondition):
    grid = coeffs.grid
    n = grid.size
    w = grid.weights().reshape(-1)
    a = coeffs.a.values.reshape(-1)

    rows, cols, diff_vals, adv_vals = [], [], [], []
    peclet = 0.0
    for (k, l, face, length, _), flux in zip(_edges(grid), _fluxes(coeffs.V)):
        k, l = k.reshape(-1), l.reshape(-1)
        face = np.asarray(face).reshape(-1)
        flux = np.asarray(flux).reshape(-1)
        a_e = 0.5 * (a[k] + a[l])
        g = a_e * face / length
        rows += [k, l]
        cols += [l, k]
        diff_vals += [-g, -g]
        adv_vals += [0.5 * flux, -0.5 * flux]
        with np.errstate(divide="ignore", invalid="ignore"):
            speed = np.where(face > 0, np.abs(flux) / face, 0.0)
        peclet = max(peclet, float(np.max(speed * length / (2.0 * a_e))))

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    w_diff = sp.coo_matrix((np.concatenate(diff_vals), (rows, cols)), shape=(n, n)).tocsr()
    w_skew = sp.coo_matrix((np.concatenate(adv_vals), (rows, cols)), shape=(n, n)).tocsr()

    # diagonal = -sum of off-diagonals keeps row sums zero to rounding
    diag = -np.asarray(w_diff.sum(axis=1)).ravel()
    diag = diag + w * coeffs.c.values.reshape(-1)
    if 0.0 < bc.b < 1.0:
        diag = diag + bc.kappa * grid.boundary_weights().reshape(-1)
    winv = sp.diags(1.0 / w)
    base = (winv @ (w_diff + sp.diags(diag))).tocsr()
    S = (winv @ w_skew).tocsr()
    s1 = np.asarray(S.sum(axis=1)).ravel()
    T = (S - sp.diags(s1)).tocsr()

    free = np.ones(n, dtype=bool)
    if bc.dirichlet:
        free = ~grid.boundary_mask().reshape(-1)
        keep = sp.diags(free.astype(float))
        base = (keep @ base + sp.diags((~free).astype(float))).tocsr()
        T = (keep @ T).tocsr()
        s1 = np.where(free, s1, 0.0)
    transport = float(np.max(np.abs(s1))) if free.any() else 0.0
    # W^-1 (W T)^T = -(T + 2 diag(S 1)); the diagonal is the discrete div V
    T_adj = (T + sp.diags(2.0 * s1)).tocsr()
    for mat in (base, T, T_adj):
        mat.eliminate_zeros()
    return base, T, T_adj, free, peclet, transport


def _build(coeffs: CoefficientSet, bc: BoundaryCondition, adjoint: bool) -> OperatorMatrix:
    base, T, T_adj, free, peclet_unit, transport = _assemble_parts(coeffs, bc)
    amp = -coeffs.A if adjoint else coeffs.A
    if adjoint:
        T = T_adj
    matrix = (base + amp * T).tocsr() if amp != 0.0 else base.copy()
    peclet = abs(coeffs.A) * peclet_unit
    warn = peclet > 1.0
    if warn:
        warnings.warn(f"grid Peclet number {peclet:.3g} > 1; positivity may fail", PecletWarning, stacklevel=3)
    return OperatorMatrix(
        matrix=matrix,
        base=base,
        advection=T,
        coeffs=coeffs,
        bc=bc,
        adjoint=adjoint,
        free=free,
        peclet=peclet,
        peclet_warning=warn,
        transport_defect=transport,
    )


def assemble(coeffs: CoefficientSet, bc: BoundaryCondition) -> OperatorMatrix:
    """Assemble L_A for ``coeffs`` under ``bc``."""
    return _build(coeffs, bc, adjoint=False)


def assemble_adjoint(coeffs: CoefficientSet, bc: BoundaryCondition) -> OperatorMatrix:
    """Assemble L*_A, the quadrature transpose of L_A.

    For divergence-free flows this is L_A with V replaced by -V.
    """
    return _build(coeffs, bc, adjoint=True)


def apply(M: OperatorMatrix, f) -> ScalarField:
    values = f.values if isinstance(f, ScalarField) else np.asarray(f, dtype=float)
    if values.size != M.shape[1]:
        raise DimensionMismatch(f"field has {values.size} values, operator expects {M.shape[1]}")
    return ScalarField(M.grid, M.matrix @ values.reshape(-1))


def _smooth_random_field(grid: Grid, rng: np.random.Generator, dirichlet: bool, modes: int = 4) -> np.ndarray:
    coords = grid.coordinates()
    lows = (grid.x0, grid.y0)
    lens = (grid.x1 - grid.x0, grid.y1 - grid.y0)
    basis = np.sin if dirichlet else np.cos
    out = np.zeros(grid.shape)
    ranges = [range(1 if dirichlet else 0, modes + 1)] * grid.dim
    for ks in np.ndindex(*[len(r) for r in ranges]):
        term = rng.standard_normal()
        for axis, kk in enumerate(ks):
            k = ranges[axis][kk]
            term = term * basis(k * np.pi * (coords[axis] - lows[axis]) / lens[axis])
        out += term
    return out


def adjoint_consistency_check(
    coeffs: CoefficientSet, bc: BoundaryCondition, pairs: int = 10, seed: int = 0
) -> float:
    """Max relative defect of <L f, g> = <f, L* g> over random smooth pairs.

    Fields are low-frequency cosines (sines for Dirichlet, which then vanish
    on the boundary rows).  The adjoint is assembled as the exact quadrature
    transpose, so anything above rounding points to an assembly bug.
    """
    M = assemble(coeffs, bc)
    Ms = assemble_adjoint(coeffs, bc)
    grid = coeffs.grid
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(pairs):
        f = _smooth_random_field(grid, rng, bc.dirichlet).reshape(-1)
        g = _smooth_random_field(grid, rng, bc.dirichlet).reshape(-1)
        if bc.dirichlet:
            f[~M.free] = 0.0
            g[~M.free] = 0.0
        lhs = inner(grid, M.matrix @ f, g)
        rhs = inner(grid, f, Ms.matrix @ g)
        scale = max(1.0, abs(lhs), abs(rhs))
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst


def write_matrix_market(M: OperatorMatrix, path_or_buf=None) -> str:
    """MatrixMarket coordinate text, entries in row-major order."""
    coo = M.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    buf = io.StringIO()
    buf.write("%%MatrixMarket matrix coordinate real general\n")
    buf.write(f"% {'adjoint' if M.adjoint else 'forward'} operator, A={format(M.coeffs.A, '.17g')}, b={format(M.bc.b, '.17g')}\n")
    buf.write(f"{M.shape[0]} {M.shape[1]} {coo.nnz}\n")
    for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
        buf.write(f"{r + 1} {c + 1} {format(float(v), '.17g')}\n")
    text = buf.getvalue()
    if path_or_buf is not None:
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w") as fh:
                fh.write(text)
    return text
