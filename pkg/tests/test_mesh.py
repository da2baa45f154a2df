import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adveig.mesh import (
    BadGridSpec,
    FieldError,
    ScalarField,
    Side,
    VectorField,
    boundary_integrate,
    build_grid,
    grad,
    inner,
    integrate,
    write_field_csv,
)


@pytest.mark.parametrize(
    "args",
    [((0, 1), 2), ((1, 0), 5), ((0, 1), 5, (0, 1), 2), ((0, 1), 5, (1, 1), 5), ((0, 1), 5, None, 4), ((0,), 5)],
)
def test_bad_grids(args):
    with pytest.raises(BadGridSpec):
        build_grid(*args)


def test_grid_geometry_1d():
    g = build_grid((0.0, 2.0), 5)
    assert g.dim == 1 and g.shape == (5,) and g.size == 5
    assert g.hx == 0.5 and g.h == 0.5
    np.testing.assert_allclose(g.x, [0, 0.5, 1, 1.5, 2])
    np.testing.assert_allclose(g.weights(), [0.25, 0.5, 0.5, 0.5, 0.25])
    assert g.weights().sum() == pytest.approx(g.volume)
    assert g.sides() == ("left", "right")


def test_tags_and_masks_2d():
    g = build_grid((0, 1), 4, (0, 2), 5)
    t = g.tags()
    assert t[0, 0] == Side.LEFT | Side.BOTTOM
    assert t[-1, -1] == Side.RIGHT | Side.TOP
    assert t[1, 2] == 0
    assert g.boundary_mask().sum() == 2 * 4 + 2 * 5 - 4
    assert g.side_mask("top").sum() == 4


def test_boundary_weights_give_perimeter():
    g = build_grid((0, 1), 9, (0, 3), 13)
    assert g.boundary_weights().sum() == pytest.approx(8.0)
    assert g.side_weights("left").sum() == pytest.approx(3.0)
    with pytest.raises(BadGridSpec):
        build_grid((0, 1), 5).side_weights("top")


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 40), st.integers(3, 40), st.floats(0.1, 5), st.floats(0.1, 5))
def test_trapezoid_exact_for_bilinear(nx, ny, lx, ly):
    g = build_grid((0, lx), nx, (0, ly), ny)
    f = g.sample(lambda x, y: 1 + 2 * x + 3 * y + x * y)
    exact = lx * ly + lx**2 * ly + 1.5 * lx * ly**2 + lx**2 * ly**2 / 4
    assert integrate(f) == pytest.approx(exact, rel=1e-12)


def test_trapezoid_second_order():
    errs = []
    for n in (17, 33, 65):
        g = build_grid((0, 1), n, (0, 1), n)
        errs.append(abs(integrate(g.sample(lambda x, y: np.exp(x + y))) - (np.e - 1) ** 2))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 1.95)


def test_boundary_integral_1d_is_endpoint_sum():
    g = build_grid((0, 1), 7)
    assert boundary_integrate(g.sample(lambda x: 2 + x)) == pytest.approx(5.0)


def test_grad_exact_for_quadratics():
    g = build_grid((0, 1), 11, (0, 2), 9)
    gx, gy = grad(g.sample(lambda x, y: x**2 + 3 * x * y - y**2)).components
    X, Y = g.coordinates()
    np.testing.assert_allclose(gx, 2 * X + 3 * Y, atol=1e-12)
    np.testing.assert_allclose(gy, 3 * X - 2 * Y, atol=1e-12)


def test_inner_flattens():
    g = build_grid((0, 1), 5, (0, 1), 5)
    f = g.sample(lambda x, y: x + 0 * y)
    assert inner(g, f, np.ones(g.size)) == pytest.approx(0.5)


def test_fields_are_frozen_and_validated():
    g = build_grid((0, 1), 5)
    f = ScalarField(g, np.arange(5.0))
    with pytest.raises(ValueError):
        f.values[0] = 1.0
    with pytest.raises(FieldError):
        ScalarField(g, np.ones(4))
    with pytest.raises(FieldError):
        ScalarField(g, [0, 1, np.nan, 3, 4])
    with pytest.raises(FieldError):
        VectorField(g, (np.ones(5), np.ones(5)))
    assert ScalarField(g, 2.0).values.tolist() == [2.0] * 5


def test_vector_field_ops():
    g = build_grid((0, 1), 3, (0, 1), 3)
    V = VectorField(g, (np.full((3, 3), 3.0), np.full((3, 3), 4.0)))
    assert V.norm_inf() == pytest.approx(5.0)
    assert np.all(V.dot(V) == 25.0)
    assert V.scaled(2.0).norm_inf() == pytest.approx(10.0)


def test_write_field_csv_round_trip(tmp_path):
    g = build_grid((0, 1), 3, (0, 1), 3)
    f = g.sample(lambda x, y: np.pi * x + y / 3)
    path = tmp_path / "f.csv"
    text = write_field_csv(str(path), f, names=["f"])
    assert path.read_text() == text
    lines = text.splitlines()
    assert lines[0] == "x,y,f"
    assert len(lines) == 1 + g.size
    vals = np.array([float(l.split(",")[2]) for l in lines[1:]])
    np.testing.assert_array_equal(vals, f.flat)
    buf = io.StringIO()
    write_field_csv(buf, f)
    assert buf.getvalue().splitlines()[0] == "x,y,value"
