"""Principal eigenpairs by shifted inverse power iteration."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import ScalarField
from .operator import OperatorMatrix

__all__ = [
    "EigenError",
    "NoConvergence",
    "PositivityFailure",
    "SingularShift",
    "DegeneratePair",
    "EigenPair",
    "principal_eigenpair",
    "normalize_pair",
    "eigen_residual",
    "gershgorin_lower_bound",
]


class EigenError(RuntimeError):
    pass


class NoConvergence(EigenError):
    pass


class PositivityFailure(EigenError):
    pass


class SingularShift(EigenError):
    pass


class DegeneratePair(EigenError):
    pass


@dataclass(frozen=True, eq=False)
class EigenPair:
    lam: float
    u: ScalarField
    v: ScalarField
    residual_u: float
    residual_v: float
    iterations: int
    positivity_ok: bool
    peclet_warning: bool
    lam_forward: float = math.nan
    lam_adjoint: float = math.nan
    shift: float = math.nan

    @property
    def grid(self):
        return self.u.grid

    def summary(self) -> dict:
        return {
            "lambda": self.lam,
            "lambda_forward": self.lam_forward,
            "lambda_adjoint": self.lam_adjoint,
            "residual_u": self.residual_u,
            "residual_v": self.residual_v,
            "iterations": self.iterations,
            "positivity_ok": self.positivity_ok,
            "peclet_warning": self.peclet_warning,
            "shift": self.shift,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True)


def gershgorin_lower_bound(K) -> float:
    K = sp.csr_matrix(K)
    d = K.diagonal()
    off = np.asarray(abs(K).sum(axis=1)).ravel() - np.abs(d)
    return float(np.min(d - off))


def _wnorm(w, z) -> float:
    return math.sqrt(float(np.dot(w, z * z)))


def _factor(K, sigma):
    n = K.shape[0]
    for attempt in range(4):
        try:
            return spla.splu((K - sigma * sp.identity(n, format="csc")).tocsc()), sigma
        except RuntimeError:
            sigma -= 1e-3 * (1.0 + abs(sigma)) * 10**attempt
    raise SingularShift(f"shifted matrix is singular near sigma={sigma}")


def _residual_floor(K) -> float:
    # rounding floor for ||K z - lam z|| with ||z|| = 1
    return 100.0 * np.finfo(float).eps * float(abs(K).sum(axis=1).max())


_POLISH = 10


def _inverse_iteration(K, w, sigma, tol, max_iter):
    lu, sigma = _factor(K, sigma)
    z = np.ones(K.shape[0])
    z /= _wnorm(w, z)
    lam_old = math.inf
    floor = _residual_floor(K)
    converged_at = None
    best = (math.inf, z, math.nan)
    for it in range(1, max_iter + 1):
        z = lu.solve(z)
        nz = _wnorm(w, z)
        if not np.isfinite(nz) or nz == 0.0:
            raise SingularShift("inverse iteration produced a non-finite vector")
        z /= nz
        Kz = K @ z
        lam = float(np.dot(w, z * Kz))
        res = _wnorm(w, Kz - lam * z)
        if converged_at is None:
            if abs(lam - lam_old) <= tol * (1.0 + abs(lam)) and res <= max(100.0 * tol * (1.0 + abs(lam)), floor):
                converged_at = it
                best = (res, z, lam)
        else:
            # polish: keep iterating while the residual still halves
            if res > 0.5 * best[0] or it - converged_at >= _POLISH:
                if res < best[0]:
                    best = (res, z, lam)
                break
            best = (res, z, lam)
        lam_old = lam
    if converged_at is None:
        raise NoConvergence(f"no convergence in {max_iter} iterations (last residual {res:.3e})")
    res, z, lam = best
    if np.sum(w * z) < 0:
        z = -z
    return z, lam, res, it, sigma


def normalize_pair(u, v):
    """Scale so that int u^2 = 1 and int u v = 1."""
    grid = u.grid
    w = grid.weights()
    uu = np.asarray(u.values, dtype=float)
    vv = np.asarray(v.values, dtype=float)
    uu = uu / math.sqrt(float(np.sum(w * uu * uu)))
    uv = float(np.sum(w * uu * vv))
    if not uv > 0.0:
        raise DegeneratePair(f"int u v = {uv} is not positive")
    return ScalarField(grid, uu), ScalarField(grid, vv / uv)


def principal_eigenpair(
    M: OperatorMatrix,
    M_adj: OperatorMatrix,
    tol: float = 1e-10,
    max_iter: int = 500,
    shift: float | None = None,
    check_positivity: bool = True,
) -> EigenPair:
    """Principal eigenvalue with forward and adjoint eigenfunctions.

    Dirichlet identity rows are dropped before factoring (their unit
    eigenvalue would otherwise attract the iteration whenever lambda > 1);
    eigenfunctions are zero on those nodes.  The reported eigenvalue is the
    two-sided Rayleigh quotient <v, M u> / <v, u>.
    """
    free = M.free
    w = M.weights[free]
    K = M.matrix[free][:, free].tocsr()
    Ka = M_adj.matrix[free][:, free].tocsr()
    sigma = gershgorin_lower_bound(K) - 1.0 if shift is None else float(shift)

    zu, lam_u, res_u, it_u, sigma_u = _inverse_iteration(K, w, sigma, tol, max_iter)
    zv, lam_v, res_v, it_v, _ = _inverse_iteration(Ka, w, sigma, tol, max_iter)
    if abs(lam_u - lam_v) > 10.0 * tol * (1.0 + abs(lam_u)) + 10.0 * max(res_u, res_v):
        raise NoConvergence(f"forward/adjoint eigenvalues disagree: {lam_u!r} vs {lam_v!r}")

    positive = bool(np.all(zu > 0) and np.all(zv > 0))
    if check_positivity and not positive:
        raise PositivityFailure(
            "principal eigenvector changes sign"
            + (" (grid Peclet number exceeds 1; refine the grid)" if M.peclet_warning else "")
        )

    grid = M.grid
    u = np.zeros(grid.size)
    v = np.zeros(grid.size)
    u[free] = zu
    v[free] = zv
    u_f, v_f = normalize_pair(ScalarField(grid, u), ScalarField(grid, v))
    uf, vf = u_f.flat[free], v_f.flat[free]
    lam = float(np.dot(w, vf * (K @ uf)) / np.dot(w, vf * uf))
    ru = _wnorm(w, K @ uf - lam * uf) / _wnorm(w, uf)
    rv = _wnorm(w, Ka @ vf - lam * vf) / _wnorm(w, vf)
    return EigenPair(
        lam=lam,
        u=u_f,
        v=v_f,
        residual_u=ru,
        residual_v=rv,
        iterations=max(it_u, it_v),
        positivity_ok=positive,
        peclet_warning=M.peclet_warning,
        lam_forward=lam_u,
        lam_adjoint=lam_v,
        shift=sigma_u,
    )


def eigen_residual(M: OperatorMatrix, M_adj: OperatorMatrix, pair: EigenPair) -> float:
    """Max of the forward and adjoint relative residuals (weighted norm)."""
    w = M.weights
    free = M.free
    out = 0.0
    for op, f in ((M, pair.u.flat), (M_adj, pair.v.flat)):
        r = (op.matrix @ f - pair.lam * f)[free]
        out = max(out, _wnorm(w[free], r) / _wnorm(w[free], f[free]))
    return out
