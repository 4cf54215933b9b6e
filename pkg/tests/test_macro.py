import numpy as np
import pytest

from hilbertkin.grid import SpaceGrid
from hilbertkin.macro import (
    MacroCFLError,
    MacroError,
    MacroState,
    rhs,
    run_macro,
    stable_dt,
    step_macro,
)
from hilbertkin.model import MacroModel, SpeciesTerms, TaxisTerm
from hilbertkin.presets import make_scenario

from helpers import heat_exact, ode_oracle, without_sources


def _uniform(sc, grid):
    x = grid.centers()
    return np.repeat(sc.initial(np.zeros(1)), grid.cells[0], axis=1) + 0 * x


def test_heat_fourier_decay():
    sc = make_scenario("heat", {"D": 1.0})
    g = SpaceGrid((256,), (1.0,))
    x = g.centers()
    T = 0.02
    u = run_macro(sc.derived(), g, sc.initial(x), [T])[-1].u[0]
    assert np.max(np.abs(u - heat_exact(x, T, 1.0))) < 1e-3


def test_heat_refinement():
    sc = make_scenario("heat")
    errs = []
    for n in (32, 64, 128):
        g = SpaceGrid((n,), (1.0,))
        x = g.centers()
        u = run_macro(sc.derived(), g, sc.initial(x), [0.1])[-1].u[0]
        errs.append(np.abs(u - heat_exact(x, 0.1, 0.25)).sum() / n)
    assert errs[0] / errs[1] >= 1.8 and errs[1] / errs[2] >= 1.8


def test_heat_2d():
    sc = make_scenario("heat")
    g = SpaceGrid((48, 48), (1.0, 1.0))
    X, Y = g.mesh()
    u0 = 1 + 0.5 * np.cos(2 * np.pi * X) * np.cos(2 * np.pi * Y)
    u = run_macro(sc.derived(), g, u0[None], [0.05])[-1].u[0]
    exact = 1 + 0.5 * np.exp(-8 * np.pi**2 * 0.25 * 0.05) * np.cos(2 * np.pi * X) * np.cos(2 * np.pi * Y)
    assert np.max(np.abs(u - exact)) < 2e-3


@pytest.mark.parametrize("boundary", ["periodic", "reflecting"])
@pytest.mark.parametrize("name", ["ks_virus", "forager", "flux_limited"])
def test_mass_per_step(name, boundary):
    sc = without_sources(make_scenario(name))
    model = sc.derived()
    g = SpaceGrid((64,), (1.0,), boundary)
    state = MacroState(0.0, sc.initial(g.centers()))
    m0 = g.total(state.u)
    for _ in range(50):
        dt = 0.9 * stable_dt(model, g, state.u)
        new = step_macro(state, model, g, dt)
        assert np.all(np.abs(g.total(new.u) - g.total(state.u)) <= 1e-12 * np.abs(m0))
        state = new


def test_uniform_constant_without_sources():
    sc = without_sources(make_scenario("ks_virus"))
    g = SpaceGrid((16,), (1.0,))
    u0 = np.ones((3, 16)) * np.array([[0.3], [0.7], [1.1]])
    out = run_macro(sc.derived(), g, u0, [0.5])
    np.testing.assert_array_equal(out[-1].u, u0)


def test_zero_data_oncolytic():
    sc = make_scenario("oncolytic")
    g = SpaceGrid((16,), (1.0,))
    out = run_macro(sc.derived(), g, np.zeros((4, 16)), [0.5, 1.0])
    assert all(np.all(s.u == 0) for s in out)


def test_ks_zero_data_growth():
    sc = make_scenario("ks_virus", {"r": 2.0, "d1": 0.5})
    g = SpaceGrid((8,), (1.0,))
    out = run_macro(sc.derived(), g, np.zeros((3, 8)), [1.0, 3.0], max_dt=1e-3)
    for s in out:
        np.testing.assert_allclose(s.u[0], 4.0 * (1 - np.exp(-0.5 * s.t)), atol=1e-9)
        assert np.all(s.u[1:] == 0)


def test_ks_beta_zero_equilibrium():
    sc = make_scenario("ks_virus", {"beta": 0.0, "d1": 2.0, "r": 3.0})
    g = SpaceGrid((4,), (1.0,))
    u0 = np.ones((3, 4)) * 0.7
    u = run_macro(sc.derived(), g, u0, [25.0], max_dt=1e-2)[-1].u
    np.testing.assert_allclose(u[:, 0], [1.5, 0.0, 0.0], atol=1e-6)


@pytest.mark.parametrize("name", ["ks_virus", "oncolytic", "invasion", "forager"])
def test_ode_reduction(name):
    sc = make_scenario(name)
    g = SpaceGrid((4,), (1.0,))
    u0 = sc.initial(np.array([0.1]))[:, 0]
    times = [1.0, 2.5, 5.0]
    out = run_macro(sc.derived(), g, np.repeat(u0[:, None], 4, axis=1), times, max_dt=2e-3)
    ref = ode_oracle(sc.closed_form, u0, times)
    for s, r in zip(out, ref):
        assert np.max(np.abs(s.u - r[:, None])) < 1e-6


@pytest.mark.parametrize("name", ["oncolytic", "invasion", "forager", "flux_limited"])
def test_preset_equivalence(name):
    sc = make_scenario(name)
    g = SpaceGrid((32,), (1.0,), "reflecting")
    u0 = sc.initial(g.centers())
    a = run_macro(sc.derived(), g, u0, [0.1, 0.2])
    b = run_macro(sc.hand_model(), g, u0, [0.1, 0.2])
    for sa, sb in zip(a, b):
        assert np.max(np.abs(sa.u - sb.u)) <= 1e-12


def test_cfl_violation():
    sc = make_scenario("heat")
    g = SpaceGrid((64,), (1.0,))
    st = MacroState(0.0, sc.initial(g.centers()))
    with pytest.raises(MacroCFLError):
        step_macro(st, sc.derived(), g, 10 * stable_dt(sc.derived(), g, st.u))


def test_negative_abort():
    sc = make_scenario("heat")
    g = SpaceGrid((8,), (1.0,))
    with pytest.raises(MacroError, match="fell"):
        run_macro(sc.derived(), g, -np.ones((1, 8)), [0.1])


def test_roundoff_negatives_snapped():
    sc = make_scenario("heat")
    g = SpaceGrid((8,), (1.0,))
    u0 = np.ones((1, 8))
    u0[0, 3] = -1e-13
    out = run_macro(sc.derived(), g, u0, [0.0])
    assert out[0].u.min() == 0.0


def test_offdiagonal_rejected():
    m = MacroModel((SpeciesTerms(np.array([[1.0, 0.2], [0.2, 1.0]])),), lambda u: 0 * u)
    with pytest.raises(ValueError, match="off-diagonal"):
        run_macro(m, SpaceGrid((8,), (1.0,)), np.ones((1, 8)), [0.1])


def test_upwind_taxis_positive():
    # strong taxis toward a sharp attractant: density must stay nonnegative
    I = np.eye(2)
    m = MacroModel((SpeciesTerms(0.01 * I, (TaxisTerm(1, 2.0 * I),)), SpeciesTerms(None)),
                   lambda u: 0 * u)
    g = SpaceGrid((64,), (1.0,), "reflecting")
    x = g.centers()
    u0 = np.stack([np.full(64, 0.5), np.exp(-200 * (x - 0.5) ** 2)])
    out = run_macro(m, g, u0, [0.2])
    assert out[-1].u.min() >= 0
    assert out[-1].u[0, 32] > 0.5
    np.testing.assert_allclose(g.total(out[-1].u)[0], 0.5, rtol=1e-12)


def test_rhs_shape_and_determinism():
    sc = make_scenario("forager")
    g = SpaceGrid((16, 12), (1.0, 1.0))
    X, _ = g.mesh()
    u0 = sc.initial(X)
    r1 = rhs(sc.derived(), g, u0)
    r2 = rhs(sc.derived(), g, u0)
    assert r1.shape == (3, 16, 12)
    np.testing.assert_array_equal(r1, r2)
