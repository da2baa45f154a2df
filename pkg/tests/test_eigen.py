import math
from dataclasses import replace

import numpy as np
import pytest
import scipy.sparse as sp

from adveig import flows
from adveig.eigen import (
    NoConvergence,
    PositivityFailure,
    eigen_residual,
    gershgorin_lower_bound,
    normalize_pair,
    principal_eigenpair,
)
from adveig.mesh import ScalarField, build_grid, inner
from adveig.operator import BoundaryCondition, CoefficientSet, assemble, assemble_adjoint


def operators(grid, b, a="1", c="0", flow=None, A=0.0):
    co = CoefficientSet(
        flows.sample_expression(a, grid),
        flows.sample_expression(c, grid),
        flows.realize(flow or flows.Zero(), grid),
        A,
    )
    bc = BoundaryCondition(b)
    return assemble(co, bc), assemble_adjoint(co, bc)


def discrete_dirichlet_1d(n, A):
    # -u'' + A u' by central differences: lambda = (2 - 2 sqrt(1 - (Ah/2)^2) cos(pi h)) / h^2
    h = 1.0 / (n - 1)
    return (2.0 - 2.0 * math.sqrt(1.0 - (A * h / 2) ** 2) * math.cos(math.pi * h)) / h**2


@pytest.mark.parametrize("A", [0.0, 1.0, 3.0, 10.0])
def test_matches_discrete_closed_form(A):
    g = build_grid((0, 1), 129)
    M, Ms = operators(g, 1.0, flow=flows.Constant((1.0,)), A=A)
    pair = principal_eigenpair(M, Ms)
    assert pair.lam == pytest.approx(discrete_dirichlet_1d(129, A), rel=1e-11)
    assert pair.positivity_ok
    assert np.all(pair.u.values[1:-1] > 0) and pair.u.values[0] == 0.0


def test_large_lambda_dirichlet_is_not_trapped_by_boundary_rows():
    g = build_grid((0, 0.1), 65)
    M, Ms = operators(g, 1.0)
    assert principal_eigenpair(M, Ms).lam == pytest.approx(100 * math.pi**2, rel=1e-3)


def test_normalisation():
    g = build_grid((0, 1), 33, (0, 1), 33)
    M, Ms = operators(g, 0.0, c="cos(pi*x)", flow=flows.StreamFunction("sin(pi*x)*sin(pi*y)"), A=3.0)
    pair = principal_eigenpair(M, Ms)
    assert inner(g, pair.u, pair.u) == pytest.approx(1.0, abs=1e-12)
    assert inner(g, pair.u, pair.v) == pytest.approx(1.0, abs=1e-12)
    assert eigen_residual(M, Ms, pair) < 1e-9
    assert abs(pair.lam_forward - pair.lam_adjoint) < 1e-9


def test_neumann_zero_potential_gives_zero():
    g = build_grid((0, 1), 17, (0, 1), 17)
    M, Ms = operators(g, 0.0, flow=flows.StreamFunction("sin(pi*x)*sin(pi*y)"), A=8.0)
    pair = principal_eigenpair(M, Ms)
    assert abs(pair.lam) < 1e-10
    assert np.ptp(pair.u.values) < 1e-10


def test_robin_between_neumann_and_dirichlet():
    g = build_grid((0, 1), 65)
    lams = [principal_eigenpair(*operators(g, b)).lam for b in (0.0, 0.5, 1.0)]
    assert lams[0] < lams[1] < lams[2]
    # kappa = 1: tan(k/2) = 1/k, lambda = k^2
    assert lams[1] == pytest.approx(1.7071, rel=2e-3)


def test_unresolved_layer_fails_loudly():
    g = build_grid((0, 1), 9)
    with pytest.warns(Warning):
        M, Ms = operators(g, 1.0, flow=flows.Constant((1.0,)), A=20.0)
    with pytest.raises((PositivityFailure, NoConvergence)):
        principal_eigenpair(M, Ms)


def test_sign_changing_vector_is_rejected():
    g = build_grid((0, 1), 3)
    M, Ms = operators(g, 0.0)
    K = sp.csr_matrix(np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]))
    M, Ms = replace(M, matrix=K), replace(Ms, matrix=K)
    with pytest.raises(PositivityFailure):
        principal_eigenpair(M, Ms)
    pair = principal_eigenpair(M, Ms, check_positivity=False)
    assert not pair.positivity_ok
    assert pair.lam == pytest.approx(-math.sqrt(2.0))


def test_iteration_limit():
    g = build_grid((0, 1), 65)
    M, Ms = operators(g, 0.0, c="x")
    with pytest.raises(NoConvergence):
        principal_eigenpair(M, Ms, max_iter=1)


def test_gershgorin_bound_is_below_spectrum():
    g = build_grid((0, 1), 33)
    M, Ms = operators(g, 0.5, c="x")
    lam = principal_eigenpair(M, Ms).lam
    assert gershgorin_lower_bound(M.matrix) <= lam


def test_normalize_pair_and_json():
    g = build_grid((0, 1), 5)
    u, v = normalize_pair(ScalarField(g, 2 * np.ones(5)), ScalarField(g, 3 * np.ones(5)))
    assert inner(g, u, u) == pytest.approx(1.0)
    assert inner(g, u, v) == pytest.approx(1.0)
    M, Ms = operators(build_grid((0, 1), 17), 1.0)
    pair = principal_eigenpair(M, Ms)
    assert '"lambda"' in pair.to_json()
    assert pair.summary()["positivity_ok"] is True


def test_deterministic():
    g = build_grid((0, 1), 33, (0, 1), 33)
    M, Ms = operators(g, 0.5, c="cos(pi*x)", flow=flows.StreamFunction("sin(pi*x)*sin(pi*y)"), A=5.0)
    a, b = principal_eigenpair(M, Ms), principal_eigenpair(M, Ms)
    assert a.lam == b.lam
    np.testing.assert_array_equal(a.u.values, b.u.values)
