import numpy as np
import pytest

from adveig import expr as ex
from adveig import flows
from adveig.mesh import build_grid

CELL = "sin(pi*x)*sin(pi*y)"


@pytest.mark.parametrize("n", [17, 33, 65])
def test_stream_flow_is_discretely_divergence_free_and_tangent(n):
    g = build_grid((0, 1), n, (0, 1), n)
    V = flows.realize(flows.StreamFunction(CELL), g)
    assert flows.divergence_residual(V) < 1e-11
    assert flows.normal_flux_residual(V) < 1e-12
    assert flows.is_compliant(V, 0.0)
    assert V.stream is not None


def test_stream_flow_velocity_matches_analytic():
    g = build_grid((0, 1), 129, (0, 1), 129)
    V = flows.realize(flows.StreamFunction(CELL), g)
    X, Y = g.coordinates()
    err = np.max(np.abs(V.components[0] - np.pi * np.sin(np.pi * X) * np.cos(np.pi * Y)))
    assert err < 1e-3


def test_shear_flow_crosses_the_side_walls():
    g = build_grid((0, 1), 9, (0, 1), 9)
    V = flows.realize(flows.Shear("y*(1-y)"), g)
    assert flows.divergence_residual(V) == 0.0
    assert flows.normal_flux_residual(V) == pytest.approx(0.25)
    assert flows.is_compliant(V, 1.0)
    assert not flows.is_compliant(V, 0.0)
    with pytest.raises(flows.DimensionMismatch):
        flows.realize(flows.Shear("x"), g)
    with pytest.raises(flows.DimensionMismatch):
        flows.realize(flows.Shear("y", "z"), g)


def test_constant_flow_in_1d_is_not_tangential():
    g = build_grid((0, 1), 9)
    V = flows.realize(flows.Constant((1.0,)), g)
    assert flows.normal_flux_residual(V) == 1.0
    assert not flows.is_compliant(V, 0.0)
    assert flows.is_compliant(V, 1.0)


def test_gradient_flow_divergence():
    g = build_grid((0, 1), 257)
    V = flows.realize(flows.Gradient("cos(pi*x)"), g)
    div = flows.divergence(V)
    X = g.x
    assert np.max(np.abs(div - (-np.pi**2 * np.cos(np.pi * X)))[2:-2]) < 1e-3
    assert not flows.is_compliant(V, 0.0)


def test_dimension_checks():
    g1 = build_grid((0, 1), 9)
    with pytest.raises(flows.DimensionMismatch):
        flows.realize(flows.StreamFunction(CELL), g1)
    with pytest.raises(flows.DimensionMismatch):
        flows.realize(flows.Constant((1.0, 0.0)), g1)
    with pytest.raises(ex.MissingVariable):
        flows.sample_expression("x + y", g1)


def test_zero_flow():
    g = build_grid((0, 1), 5, (0, 1), 5)
    V = flows.realize(flows.Zero(), g)
    assert V.norm_inf() == 0.0
    assert flows.is_compliant(V, 0.5)
