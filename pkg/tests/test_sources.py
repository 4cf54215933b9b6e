import numpy as np
import pytest

from hilbertkin import sources as S
from hilbertkin.presets import SCENARIOS, make_scenario
from hilbertkin.sources import SourceError, SourceSpec, source_projection


def test_oncolytic_psi1_value():
    sc = make_scenario("oncolytic", {"mu1": 1, "r": 1, "rho": 1, "k": 1, "theta_sat": 1})
    u = np.array([0.5, 0.2, 0.3, 0.4])
    expected = 0.25 - 0.2 / 1.5
    assert source_projection(sc.sources, sc.equilibria, u)[0] == pytest.approx(expected, abs=1e-14)
    assert sc.closed_form(u)[0] == pytest.approx(expected, abs=1e-14)


def test_invasion_psi3_value():
    sc = make_scenario("invasion", {"eta": 2.0})
    u = np.array([0.2, 0.1, 0.5])
    assert source_projection(sc.sources, sc.equilibria, u)[2] == pytest.approx(0.25, abs=1e-14)


@pytest.mark.parametrize("name", SCENARIOS)
def test_zero_state(name):
    sc = make_scenario(name)
    psi = source_projection(sc.sources, sc.equilibria, np.zeros(sc.n))
    for i, ts in enumerate(sc.sources.terms):
        supply = sum(t.value for t in ts if isinstance(t, S.Constant))
        assert psi[i] == pytest.approx(supply, abs=1e-15)


@pytest.mark.parametrize("name", SCENARIOS)
def test_duality_random(name, rng):
    sc = make_scenario(name)
    U = rng.uniform(0, 2, size=(sc.n, 200))
    q = source_projection(sc.sources, sc.equilibria, U)
    np.testing.assert_allclose(q, sc.closed_form(U), atol=1e-10)


def test_G_is_velocity_independent(uniform):
    spec = SourceSpec(((S.Logistic(1.0, 0), S.MassAction(-2.0, (0, 1))), (S.Constant(0.5),)))
    f = np.stack([uniform.values * 0.4, uniform.values * 1.2])
    G = spec.G(f, [uniform, uniform])
    assert np.allclose(G, G[:, :1])
    np.testing.assert_allclose(G[:, 0] * uniform.grid.measure, [0.4 * 0.6 - 2 * 0.48, 0.5])


def test_saturation_denominator(uniform):
    spec = SourceSpec(((S.Saturation(1.0, 0, 0, k=1.0, theta_sat=1.0),),))
    with pytest.raises(SourceError, match="denominator"):
        source_projection(spec, [uniform], np.array([-1.5]))


def test_nonfinite_state(uniform):
    spec = SourceSpec(((S.Logistic(1.0, 0),),))
    with pytest.raises(SourceError):
        source_projection(spec, [uniform], np.array([np.nan]))


def test_hook_and_describe(uniform):
    spec = SourceSpec(((S.Hook(lambda r: 1 + r[0] ** 2, "1 + u_1^2"), S.linear(-3.0, 0)),))
    assert spec.has_supply
    assert source_projection(spec, [uniform], np.array([2.0]))[0] == pytest.approx(5.0 - 6.0)
    assert spec.describe(0) == "1 + u_1^2 - 3 u_1"
