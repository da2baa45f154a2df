"""The functional J(ω) = ∫ u v (Lω/ω) and the identities built on it.

Everything here is evaluated with the same quadrature as the rest of the
package (trapezoidal weights) and gradients come from :func:`mesh.grad`, so
identity residuals measure discretisation error rather than solver error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .eigen import EigenPair
from .mesh import Grid, ScalarField, VectorField, boundary_integrate, grad, integrate
from .operator import BoundaryCondition, CoefficientSet, OperatorMatrix

__all__ = [
    "ConeViolation",
    "BorderedSolveFailure",
    "ConeElement",
    "SensitivityField",
    "cone_element",
    "eval_J",
    "log_ratio",
    "weighted_energy",
    "decomposition_residual",
    "antisymmetry_residual",
    "criticality_defect",
    "derivative_by_formula",
    "discrete_derivative",
    "solve_sensitivity",
    "second_derivative_at_zero",
    "cosine_direction",
    "random_directions",
    "perturb",
]


class ConeViolation(ValueError):
    pass


class BorderedSolveFailure(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ConeElement:
    """A positive trial function together with its boundary certificate.

    ``bc_residual`` is the relative defect of the boundary condition the
    element satisfies, measured with one-sided differences; for Dirichlet it
    is max |ω| on the boundary relative to max |ω|.
    """

    omega: ScalarField
    b: float
    bc_residual: float
    min_inward_slope: float = math.nan

    @property
    def grid(self) -> Grid:
        return self.omega.grid

    @property
    def cone(self) -> str:
        return BoundaryCondition(self.b).kind


def _normal_derivatives(f: ScalarField, a: Optional[np.ndarray] = None):
    """Yield ``(mask, a * df/dn)`` per side, outward normal, corners excluded."""
    grid = f.grid
    g = grad(f).components
    coef = np.ones(grid.shape) if a is None else a
    signs = {"left": (0, -1.0), "right": (0, 1.0), "bottom": (1, -1.0), "top": (1, 1.0)}
    corner = np.zeros(grid.shape, dtype=bool)
    if grid.dim == 2:
        corner[[0, 0, -1, -1], [0, -1, 0, -1]] = True
    for side in grid.sides():
        axis, sgn = signs[side]
        mask = grid.side_mask(side) & ~corner
        yield mask, sgn * (coef * g[axis])[mask]


def cone_element(omega, M: OperatorMatrix, bc_tol: float = 5e-2) -> ConeElement:
    """Check that ``omega`` lies in the cone of ``M``'s boundary condition.

    Raises :class:`ConeViolation` if positivity fails, if Dirichlet values or
    slopes are wrong, or if the Robin/Neumann defect exceeds ``bc_tol``.  The
    one-sided normal derivative is only second-order accurate, so the default
    tolerance is loose enough for smooth trial functions on coarse grids and
    still rejects ones that ignore the boundary condition.
    """
    grid = M.grid
    values = omega.values if isinstance(omega, ScalarField) else np.asarray(omega, dtype=float)
    field = ScalarField(grid, values)
    vals = field.values
    scale = float(np.max(np.abs(vals)))
    if scale == 0.0:
        raise ConeViolation("trial function vanishes identically")
    bmask = grid.boundary_mask()
    b = M.bc.b
    if M.bc.dirichlet:
        if not np.all(vals[~bmask] > 0):
            raise ConeViolation("trial function is not positive at interior nodes")
        res = float(np.max(np.abs(vals[bmask]))) / scale
        if res > 1e-12:
            raise ConeViolation(f"trial function does not vanish on the boundary (defect {res:.3e})")
        slopes = np.concatenate([-dn for _, dn in _normal_derivatives(field)])
        slope = float(np.min(slopes)) / scale
        if not slope > 0:
            raise ConeViolation("inward boundary slope is not positive")
        return ConeElement(field, b, res, slope)
    if not np.all(vals > 0):
        raise ConeViolation("trial function is not positive")
    a = M.coeffs.a.values
    flux = max(float(np.max(np.abs(dn))) for _, dn in _normal_derivatives(field, a))
    res = 0.0
    for mask, dn in _normal_derivatives(field, a):
        res = max(res, float(np.max(np.abs(b * vals[mask] + (1.0 - b) * dn))))
    res /= scale + flux
    if res > bc_tol:
        raise ConeViolation(f"boundary condition defect {res:.3e} exceeds {bc_tol:.1e}")
    return ConeElement(field, b, res)


def _as_cone(omega, M) -> ConeElement:
    return omega if isinstance(omega, ConeElement) else cone_element(omega, M)


def eval_J(omega, pair: EigenPair, M: OperatorMatrix) -> float:
    """Quadrature of u v (M ω)/ω; Dirichlet boundary nodes contribute zero."""
    el = _as_cone(omega, M)
    om = el.omega.flat
    free = M.free
    Mom = M.matrix @ om
    integrand = np.zeros_like(om)
    integrand[free] = pair.u.flat[free] * pair.v.flat[free] * Mom[free] / om[free]
    return float(np.dot(M.weights, integrand))


def _extrapolate_boundary(s: np.ndarray) -> np.ndarray:
    """Fill boundary values by quadratic extrapolation along the inward normal."""
    s = s.copy()
    if s.ndim == 1:
        s[0] = 3 * s[1] - 3 * s[2] + s[3]
        s[-1] = 3 * s[-2] - 3 * s[-3] + s[-4]
        return s
    s[0, 1:-1] = 3 * s[1, 1:-1] - 3 * s[2, 1:-1] + s[3, 1:-1]
    s[-1, 1:-1] = 3 * s[-2, 1:-1] - 3 * s[-3, 1:-1] + s[-4, 1:-1]
    s[:, 0] = 3 * s[:, 1] - 3 * s[:, 2] + s[:, 3]
    s[:, -1] = 3 * s[:, -2] - 3 * s[:, -3] + s[:, -4]
    return s


def log_ratio(f: ScalarField, u: ScalarField, dirichlet: bool) -> ScalarField:
    """log(f/u); on a Dirichlet boundary the 0/0 limit is extrapolated."""
    fv, uv = f.values, u.values
    if not dirichlet:
        return ScalarField(f.grid, np.log(fv / uv))
    interior = ~f.grid.boundary_mask()
    s = np.zeros(f.grid.shape)
    s[interior] = np.log(fv[interior] / uv[interior])
    return ScalarField(f.grid, _extrapolate_boundary(s))


def weighted_energy(pair: EigenPair, a: ScalarField, s: ScalarField) -> float:
    """∫ u v a |∇s|²."""
    g = grad(s).components
    dens = pair.u.values * pair.v.values * a.values * sum(c * c for c in g)
    return integrate(ScalarField(s.grid, dens))


def decomposition_residual(omega, pair: EigenPair, M: OperatorMatrix) -> float:
    """Relative defect of J(u) = J(ω) + ∫ u v a |∇log(ω/u)|²."""
    el = _as_cone(omega, M)
    Ju = eval_J(pair.u, pair, M)
    Jw = eval_J(el, pair, M)
    s = log_ratio(el.omega, pair.u, M.bc.dirichlet)
    E = weighted_energy(pair, M.coeffs.a, s)
    return abs(Ju - Jw - E) / (1.0 + abs(Ju))


def antisymmetry_residual(pair: EigenPair, M: OperatorMatrix) -> float:
    """Relative defect of ∫ v L u − ∫ u L v = ∫ u v a |∇log(v/u)|².

    Both terms use the forward operator ``M``.
    """
    w = M.weights
    free = M.free
    u, v = pair.u.flat, pair.v.flat
    vLu = float(np.dot(w[free], (v * (M.matrix @ u))[free]))
    uLv = float(np.dot(w[free], (u * (M.matrix @ v))[free]))
    s = log_ratio(pair.v, pair.u, M.bc.dirichlet)
    E = weighted_energy(pair, M.coeffs.a, s)
    return abs(vLu - uLv - E) / (1.0 + abs(vLu))


def perturb(u: ScalarField, phi, t: float) -> ScalarField:
    """ω = u e^{tφ}; stays in the cone when φ has zero normal derivative."""
    phi = phi.values if isinstance(phi, ScalarField) else np.asarray(phi, dtype=float).reshape(u.grid.shape)
    return ScalarField(u.grid, u.values * np.exp(t * phi))


def criticality_defect(pair: EigenPair, M: OperatorMatrix, phi, t: float = 1e-4) -> float:
    """Centred difference of t -> J(u e^{tφ}) at t = 0."""
    jp = eval_J(perturb(pair.u, phi, t).values, pair, M)
    jm = eval_J(perturb(pair.u, phi, -t).values, pair, M)
    return (jp - jm) / (2.0 * t)


def cosine_direction(grid: Grid, coeffs) -> np.ndarray:
    """Σ c_k Π cos(k π (x - x0)/L); zero normal derivative on every side."""
    coeffs = np.asarray(coeffs, dtype=float)
    coords = grid.coordinates()
    lows = (grid.x0, grid.y0)
    lens = (grid.x1 - grid.x0, grid.y1 - grid.y0)
    out = np.zeros(grid.shape)
    for ks in np.ndindex(*coeffs.shape):
        term = np.full(grid.shape, coeffs[ks])
        for axis, k in enumerate(ks):
            term = term * np.cos(k * np.pi * (coords[axis] - lows[axis]) / lens[axis])
        out += term
    return out


def random_directions(grid: Grid, count: int, seed: int = 0, modes: int = 3) -> list[np.ndarray]:
    """Seeded smooth directions with max |φ| = 1 and zero normal derivative."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        c = rng.standard_normal((modes + 1,) * grid.dim)
        c.flat[0] = 0.0
        phi = cosine_direction(grid, c)
        out.append(phi / np.max(np.abs(phi)))
    return out


def derivative_by_formula(pair: EigenPair, V: VectorField, A: Optional[float] = None) -> float:
    """dλ/dA = ∫ v V·∇u with ∫ u v = 1 (``A`` is informational)."""
    gu = grad(pair.u)
    return integrate(ScalarField(pair.grid, pair.v.values * V.dot(gu)))


def discrete_derivative(pair: EigenPair, M: OperatorMatrix) -> float:
    """Exact derivative of the discrete eigenvalue: <v, T u> / <v, u>."""
    if M.adjoint:
        raise ValueError("pass the forward operator")
    w = M.weights
    u, v = pair.u.flat, pair.v.flat
    return float(np.dot(w, v * (M.advection @ u)) / np.dot(w, v * u))


@dataclass(frozen=True, eq=False)
class SensitivityField:
    """∂u/∂A with the diagnostics of its bordered solve.

    ``multiplier`` is the Lagrange multiplier of the side constraint; it
    equals the gap between the supplied λ' and the discrete one.
    """

    u_prime: ScalarField
    orthogonality: float
    residual: float
    multiplier: float
    lam_prime: float


def solve_sensitivity(
    pair: EigenPair,
    M: OperatorMatrix,
    lam_prime: Optional[float] = None,
    tol: float = 1e-8,
) -> SensitivityField:
    """Solve (M - λ) u' = λ' u - T u with ∫ u' u = 0 by one bordered LU.

    ``lam_prime`` defaults to :func:`derivative_by_formula`.  Dirichlet nodes
    are eliminated (u' = 0 there).
    """
    if M.adjoint:
        raise BorderedSolveFailure("pass the forward operator")
    if lam_prime is None:
        lam_prime = derivative_by_formula(pair, M.coeffs.V)
    free = M.free
    w = M.weights[free]
    u = pair.u.flat[free]
    K = M.matrix[free][:, free]
    T = M.advection[free][:, free]
    n = K.shape[0]
    B = (K - pair.lam * sp.identity(n, format="csr")).tocsr()
    big = sp.bmat(
        [[B, sp.csr_matrix(u.reshape(-1, 1))], [sp.csr_matrix((w * u).reshape(1, -1)), None]],
        format="csc",
    )
    rhs = np.concatenate([lam_prime * u - T @ u, [0.0]])
    try:
        sol = spla.splu(big).solve(rhs)
    except RuntimeError as exc:
        raise BorderedSolveFailure(str(exc)) from exc
    if not np.all(np.isfinite(sol)):
        raise BorderedSolveFailure("bordered solve produced non-finite values")
    up, mu = sol[:-1], float(sol[-1])
    eq = B @ up + mu * u - rhs[:-1]
    res = math.sqrt(float(np.dot(w, eq * eq))) / max(1.0, math.sqrt(float(np.dot(w, rhs[:-1] ** 2))))
    orth = float(np.dot(w, up * u))
    if res > tol or abs(orth) > 1e-9:
        raise BorderedSolveFailure(f"bordered solve inaccurate: residual {res:.3e}, orthogonality {orth:.3e}")
    full = np.zeros(M.grid.size)
    full[free] = up
    return SensitivityField(ScalarField(M.grid, full), orth, res, mu, float(lam_prime))


def second_derivative_at_zero(
    pair0: EigenPair, sens: SensitivityField, coeffs: CoefficientSet, bc: BoundaryCondition
) -> float:
    """λ''(0) = 2 [κ ∮ u'² + ∫ a|∇u'|² + ∫ c u'² − λ(0) ∫ u'²].

    The boundary term is dropped for Dirichlet conditions (u' vanishes there).
    """
    up = sens.u_prime
    grid = up.grid
    sq = ScalarField(grid, up.values**2)
    g = grad(up).components
    energy = integrate(ScalarField(grid, coeffs.a.values * sum(c * c for c in g)))
    pot = integrate(ScalarField(grid, coeffs.c.values * up.values**2))
    mass = integrate(sq)
    bnd = 0.0 if bc.dirichlet or bc.b == 0.0 else bc.kappa * boundary_integrate(sq)
    return 2.0 * (bnd + energy + pot - pair0.lam * mass)
