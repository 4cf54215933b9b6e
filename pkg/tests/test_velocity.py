import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hilbertkin.velocity import (
    build_velocity_grid,
    equilibrium_from_table,
    equilibrium_uniform,
    moment,
)


def test_circle_eight_nodes():
    g = build_velocity_grid(2, 1.0, 8)
    phi = 2 * np.pi * np.arange(8) / 8
    np.testing.assert_allclose(g.nodes, np.column_stack([np.cos(phi), np.sin(phi)]), atol=1e-15)
    np.testing.assert_allclose(g.weights, 2 * np.pi / 8, rtol=1e-15)


def test_second_moment_is_pi_identity():
    g = build_velocity_grid(2, 1.0, 8)
    vv = np.einsum("k,ka,kb->ab", g.weights, g.nodes, g.nodes)
    np.testing.assert_allclose(vv, np.pi * np.eye(2), atol=1e-12)


def test_measure_radius_two():
    g = build_velocity_grid(2, 2.0, 16)
    assert abs(g.weights.sum() - 4 * np.pi) < 1e-12 * 4 * np.pi
    assert g.measure == pytest.approx(4 * np.pi, rel=1e-15)


@pytest.mark.parametrize("N", [6, 12, 20])
def test_polyhedra(N):
    g = build_velocity_grid(3, 1.5, N)
    assert np.allclose(np.linalg.norm(g.nodes, axis=1), 1.5, rtol=1e-12)
    assert np.allclose(g.weights @ g.nodes, 0, atol=1e-12)
    # antipodal closure
    assert np.allclose(g.nodes[g.antipode], -g.nodes, atol=1e-12)
    M = equilibrium_uniform(g)
    # all three solids integrate v (x) v exactly: <v v M> = R^2/3 I
    np.testing.assert_allclose(moment(g, M.values, "vv"), 1.5**2 / 3 * np.eye(3), atol=1e-12)


@pytest.mark.parametrize("d,N", [(1, 8), (4, 8), (2, 2), (2, 7), (3, 8)])
def test_bad_grids(d, N):
    with pytest.raises(ValueError):
        build_velocity_grid(d, 1.0, N)


def test_bad_radius():
    with pytest.raises(ValueError):
        build_velocity_grid(2, 0.0, 8)


def test_uniform_moments(circle, uniform):
    assert moment(circle, uniform.values) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(moment(circle, uniform.values, "v"), 0, atol=1e-12)
    np.testing.assert_allclose(moment(circle, uniform.values, "vv"), 0.5 * np.eye(2), atol=1e-12)


def test_uniform_values():
    assert np.allclose(equilibrium_uniform(build_velocity_grid(2, 1.0, 8)).values, 1 / (2 * np.pi))
    assert np.allclose(equilibrium_uniform(build_velocity_grid(2, 2.0, 8)).values, 1 / (4 * np.pi))


def test_moment_length_mismatch(circle):
    with pytest.raises(ValueError):
        moment(circle, np.ones(5))


def test_moment_keeps_leading_axes(circle, rng):
    f = rng.random((3, 4, circle.size))
    assert moment(circle, f).shape == (3, 4)
    assert moment(circle, f, "v").shape == (3, 4, 2)
    assert moment(circle, f, "vv").shape == (3, 4, 2, 2)
    np.testing.assert_allclose(moment(circle, f, lambda v: v[:, 0]), moment(circle, f, "v")[..., 0])


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**32 - 1))
def test_moment_linear(a, b, seed):
    g = build_velocity_grid(2, 1.0, 12)
    r = np.random.default_rng(seed)
    f, h = r.normal(size=12), r.normal(size=12)
    lhs = moment(g, a * f + b * h, "v")
    rhs = a * moment(g, f, "v") + b * moment(g, h, "v")
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_odd_moments_vanish(circle, uniform):
    for p in (1, 3, 5):
        assert np.allclose(moment(circle, uniform.values, lambda v: v[:, 0] ** p), 0, atol=1e-14)


def test_table_equilibrium(circle):
    phi = np.arctan2(circle.nodes[:, 1], circle.nodes[:, 0])
    vals = (1 + 0.3 * np.cos(2 * phi)) / (2 * np.pi)
    eq = equilibrium_from_table(circle, vals)
    assert not eq.is_uniform
    with pytest.raises(ValueError, match="flux"):
        equilibrium_from_table(circle, (1 + 0.3 * np.cos(phi)) / (2 * np.pi))
    with pytest.raises(ValueError, match="normalized"):
        equilibrium_from_table(circle, 2 * vals)
    bad = vals.copy()
    bad[0] = -bad[0]
    with pytest.raises(ValueError, match="positive"):
        equilibrium_from_table(circle, bad)
    with pytest.raises(ValueError, match="1e-6"):
        tiny = np.where(np.arange(16) % 2 == 0, 1e-9, 1.0)
        equilibrium_from_table(circle, tiny / moment(circle, tiny))
