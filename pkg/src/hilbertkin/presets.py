"""Built-in scenarios: kinetic specifications and hand-entered macro models.

Each scenario is parameterized by the macroscopic coefficients. The kinetic
relaxation rates follow from sigma_i = R^2 / (d D_i), so that the derived
model and the hand-entered one share every coefficient.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import sources as S
from .hilbert import derive_macro_model
from .model import BetaRate, MacroModel, SpeciesTerms, TaxisTerm
from .turning import (
    BetaLaw,
    FluxLimited,
    GradientTaxis,
    ScalingExponents,
    relaxation_kernel,
)
from .velocity import build_velocity_grid, equilibrium_uniform

# name -> {parameter: (default, constraint)}
PARAMETERS = {
    "heat": {"D": (0.25, "positive")},
    "ks_virus": {
        "D1": (0.25, "positive"), "D2": (0.25, "positive"), "D3": (0.25, "positive"),
        "chi": (0.1, "any"), "d1": (1.0, "nonnegative"), "d2": (1.0, "nonnegative"),
        "d3": (1.0, "nonnegative"), "beta": (1.0, "nonnegative"), "k": (1.0, "nonnegative"),
        "r": (1.0, "nonnegative"),
    },
    "oncolytic": {
        "D1": (0.25, "positive"), "D2": (0.25, "positive"), "D4": (0.25, "positive"),
        "xi1": (0.1, "nonnegative"), "xi2": (0.1, "nonnegative"), "xi4": (0.1, "nonnegative"),
        "mu1": (1.0, "nonnegative"), "r": (1.0, "positive"), "rho": (1.0, "nonnegative"),
        "k": (1.0, "positive"), "theta_sat": (1.0, "positive"), "delta2": (1.0, "nonnegative"),
        "alpha1": (1.0, "nonnegative"), "alpha2": (1.0, "nonnegative"), "mu3": (1.0, "nonnegative"),
        "beta": (1.0, "nonnegative"), "delta4": (1.0, "nonnegative"), "sigma3": (1.0, "positive"),
    },
    "invasion": {
        "chi": (0.1, "any"), "xi": (0.1, "any"), "mu": (1.0, "nonnegative"),
        "r": (1.0, "nonnegative"), "sigma": (1.0, "positive"), "eta": (1.0, "nonnegative"),
        "sigma3": (1.0, "positive"),
    },
    "forager": {
        "xi1": (0.1, "any"), "xi2": (0.1, "any"), "D": (0.25, "positive"),
        "lam": (1.0, "nonnegative"), "mu": (0.5, "nonnegative"), "gamma1": (1.0, "nonnegative"),
        "gamma2": (1.0, "nonnegative"), "m1": (0.5, "nonnegative"), "m2": (0.5, "nonnegative"),
        "supply": (0.5, "nonnegative"),
    },
    "flux_limited": {
        "eta": (0.25, "positive"), "h": (1.0, "nonnegative"), "kappa": (0.5, "nonnegative"),
        "beta1_offset": (1.0, "positive"), "beta1_slope": (1.0, "nonnegative"),
        "beta2_offset": (1.0, "positive"), "beta2_slope": (1.0, "nonnegative"),
    },
}

SCENARIOS = tuple(PARAMETERS)


class ParameterError(ValueError):
    pass


def resolve_params(name: str, overrides: dict | None = None) -> dict:
    if name not in PARAMETERS:
        raise ParameterError(f"unknown scenario {name!r}")
    table = PARAMETERS[name]
    params = {k: v[0] for k, v in table.items()}
    for key, value in (overrides or {}).items():
        if key not in table:
            raise ParameterError(f"unknown parameter {key!r} for scenario {name}")
        params[key] = float(value)
    for key, (_, rule) in table.items():
        v = params[key]
        if not np.isfinite(v):
            raise ParameterError(f"{key} must be finite")
        if rule == "positive" and not v > 0:
            raise ParameterError(f"{key} must be positive (got {v:g})")
        if rule == "nonnegative" and v < 0:
            raise ParameterError(f"{key} must be nonnegative (got {v:g})")
    return params


@dataclass
class Scenario:
    name: str
    params: dict
    kernels: list
    scaling: ScalingExponents
    sources: S.SourceSpec
    initial: Callable
    closed_form: Callable
    hand_model: Callable
    extra: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.kernels)

    @property
    def grid(self):
        return self.kernels[0].grid

    @property
    def equilibria(self):
        return [k.equilibrium for k in self.kernels]

    def derived(self) -> MacroModel:
        return derive_macro_model(self.kernels, self.scaling, self.sources, name=self.name)


def _iso(grid, value):
    return value * np.eye(grid.dim)


def _c(x):
    return np.cos(2 * np.pi * np.asarray(x, dtype=float))


def _s(x):
    return np.sin(2 * np.pi * np.asarray(x, dtype=float))


def sigma_for(grid, D: float) -> float:
    """Relaxation rate giving diffusion D I for a uniform equilibrium."""
    return grid.radius**2 / (grid.dim * D)


def taxis_weight(grid, chi: float, sigma: float) -> float:
    """Coupling c of T1 = -c v*.grad u (uniform M) giving alpha = chi grad u."""
    return chi * grid.dim * sigma / (grid.measure * grid.radius**2)


def ecm_weight(grid, xi: float, sigma: float) -> float:
    """Coupling of the ECM-taxis kernel -xi sigma d / (|V|^2 R^2 M(v*)) v*.grad u."""
    return xi * sigma * grid.dim / (grid.measure**2 * grid.radius**2)


# --- closed-form reaction terms ---------------------------------------------

def psi_heat(u, p):
    return np.zeros_like(np.asarray(u, dtype=float))


def psi_ks_virus(u, p):
    u1, u2, u3 = u
    return np.array([
        -p["d1"] * u1 - p["beta"] * u1 * u3 + p["r"],
        -p["d2"] * u2 + p["beta"] * u1 * u3,
        -p["d3"] * u3 + p["k"] * u2,
    ])


def psi_oncolytic(u, p):
    u1, u2, u3, u4 = u
    inf = p["rho"] * u1 * u4 / (p["k"] + p["theta_sat"] * u1)
    return np.array([
        p["mu1"] * u1 * (1 - u1 ** p["r"]) - inf,
        inf - p["delta2"] * u2,
        -u3 * (p["alpha1"] * u1 + p["alpha2"] * u2) + p["mu3"] * u3 * (1 - u3),
        p["beta"] * u2 - p["delta4"] * u4 - inf,
    ])


def psi_invasion(u, p):
    u1, u2, u3 = u
    return np.array([
        p["mu"] * u1 * (p["r"] - u1 - u3),
        -(u2 - u1) / p["sigma"],
        -u2 * u3 + p["eta"] * u3 * (1 - u1 - u3),
    ])


def psi_forager(u, p):
    u1, u2, u3 = u
    return np.array([
        p["gamma1"] * u1 * u3 - p["m1"] * u1,
        p["gamma2"] * u2 * u3 - p["m2"] * u2,
        -p["lam"] * (u1 + u2) * u3 - p["mu"] * u3 + p["supply"] * np.ones_like(u3),
    ])


def psi_flux_limited(u, p):
    u1, u2 = u
    return np.array([
        -u1 * u2 + p["h"] * u1,
        -u2 + u1 * u2 + p["kappa"] * np.ones_like(u2),
    ])


CLOSED_FORMS = {
    "heat": psi_heat,
    "ks_virus": psi_ks_virus,
    "oncolytic": psi_oncolytic,
    "invasion": psi_invasion,
    "forager": psi_forager,
    "flux_limited": psi_flux_limited,
}


def _reaction(name, p):
    f = CLOSED_FORMS[name]

    def reaction(u):
        return f(np.asarray(u, dtype=float), p)

    return reaction


def _beta_laws(p, dim):
    e1 = tuple(1.0 if i == 0 else 0.0 for i in range(dim))
    return (BetaLaw(p["beta1_offset"], p["beta1_slope"], e1),
            BetaLaw(p["beta2_offset"], p["beta2_slope"], e1))


# --- hand-entered macroscopic systems ---------------------------------------

def hand_model(name: str, p: dict, dim: int = 2, radius: float = 1.0) -> MacroModel:
    """Macroscopic system entered by hand in its textbook form, with closed-form psi."""
    I = np.eye(dim)
    sp = SpeciesTerms
    tx = TaxisTerm
    if name == "heat":
        species = (sp(p["D"] * I),)
    elif name == "ks_virus":
        species = (
            sp(p["D1"] * I, (tx(1, p["chi"] * I),)),
            sp(p["D2"] * I),
            sp(p["D3"] * I),
        )
    elif name == "oncolytic":
        species = (
            sp(p["D1"] * I, (tx(2, p["xi1"] * I),)),
            sp(p["D2"] * I, (tx(2, p["xi2"] * I),)),
            sp(None),
            sp(p["D4"] * I, (tx(2, p["xi4"] * I),)),
        )
    elif name == "invasion":
        species = (
            sp(I.copy(), (tx(1, p["chi"] * I), tx(2, p["xi"] * I))),
            sp(I / p["sigma"]),
            sp(None),
        )
    elif name == "forager":
        species = (
            sp(I.copy(), (tx(2, p["xi1"] * I),)),
            sp(I.copy(), (tx(0, p["xi2"] * I),)),
            sp(p["D"] * I),
        )
    elif name == "flux_limited":
        b1, b2 = _beta_laws(p, dim)
        species = (
            sp(radius**2 / dim * I, (tx(1, I.copy(), "inverse_target"),), BetaRate(0, 1, b1, b2)),
            sp(p["eta"] * I),
        )
    else:
        raise ParameterError(f"unknown scenario {name!r}")
    return MacroModel(species, _reaction(name, p), name=f"{name} (hand-entered)", dim=dim)


# --- kinetic specifications --------------------------------------------------

def make_scenario(name: str, params: dict | None = None, dim: int = 2, radius: float = 1.0,
                  nodes: int = 16) -> Scenario:
    p = resolve_params(name, params)
    grid = build_velocity_grid(dim, radius, nodes)
    M = equilibrium_uniform(grid)
    rk = relaxation_kernel
    L, Mass, Const, Sat, Log = S.linear, S.MassAction, S.Constant, S.Saturation, S.Logistic

    if name == "heat":
        kernels = [rk(M, sigma_for(grid, p["D"]))]
        scaling = ScalingExponents(1, (1,))
        terms = ((),)

        def initial(x):
            return np.array([1 + 0.5 * _c(x)])

    elif name == "ks_virus":
        s1 = sigma_for(grid, p["D1"])
        kernels = [
            rk(M, s1, perturbation=GradientTaxis(((1, taxis_weight(grid, p["chi"], s1)),)), species=0),
            rk(M, sigma_for(grid, p["D2"]), species=1),
            rk(M, sigma_for(grid, p["D3"]), species=2),
        ]
        scaling = ScalingExponents(1, (1, 2, None))
        terms = (
            (L(-p["d1"], 0), Mass(-p["beta"], (0, 2)), Const(p["r"])),
            (L(-p["d2"], 1), Mass(p["beta"], (0, 2))),
            (L(-p["d3"], 2), L(p["k"], 1)),
        )

        def initial(x):
            return np.array([1 + 0.5 * _c(x), 0.5 + 0.25 * _s(x), 0.5 - 0.25 * _c(x)])

    elif name == "oncolytic":
        kernels = []
        for i, (D, xi) in enumerate([(p["D1"], p["xi1"]), (p["D2"], p["xi2"])]):
            s = sigma_for(grid, D)
            kernels.append(rk(M, s, species=i, perturbation=GradientTaxis(
                ((2, ecm_weight(grid, xi, s)),), divide_by_equilibrium=True)))
        kernels.append(rk(M, p["sigma3"], species=2))
        s4 = sigma_for(grid, p["D4"])
        kernels.append(rk(M, s4, species=3, perturbation=GradientTaxis(
            ((2, ecm_weight(grid, p["xi4"], s4)),), divide_by_equilibrium=True)))
        scaling = ScalingExponents(2, (1, 1, None, 1))
        sat = dict(rate=p["rho"], prey=0, carrier=3, k=p["k"], theta_sat=p["theta_sat"])
        terms = (
            (Log(p["mu1"], 0, p["r"]), Sat(sign=-1.0, **sat)),
            (Sat(sign=1.0, **sat), L(-p["delta2"], 1)),
            (Mass(-p["alpha1"], (0, 2)), Mass(-p["alpha2"], (1, 2)), Log(p["mu3"], 2, 1.0)),
            (L(p["beta"], 1), L(-p["delta4"], 3), Sat(sign=-1.0, **sat)),
        )

        def initial(x):
            return np.array([0.5 + 0.25 * _c(x), 0.2 + 0.1 * _c(x), 0.5 + 0.25 * _s(x),
                             0.3 + 0.1 * _s(x)])

    elif name == "invasion":
        s1 = grid.radius**2 / grid.dim
        V = grid.measure
        kernels = [
            rk(M, s1, species=0, perturbation=GradientTaxis(((1, p["chi"] / V), (2, p["xi"] / V)))),
            rk(M, p["sigma"] * grid.radius**2 / grid.dim, species=1),
            rk(M, p["sigma3"], species=2),
        ]
        scaling = ScalingExponents(2, (1, 2, None))
        terms = (
            (Mass(p["mu"] * p["r"], (0,)), Mass(-p["mu"], (0, 0)), Mass(-p["mu"], (0, 2))),
            (L(-1.0 / p["sigma"], 1), L(1.0 / p["sigma"], 0)),
            (Mass(-1.0, (1, 2)), L(p["eta"], 2), Mass(-p["eta"], (0, 2)), Mass(-p["eta"], (2, 2))),
        )

        def initial(x):
            return np.array([0.5 + 0.25 * _c(x), 0.5 + 0.25 * _s(x), 0.5 - 0.25 * _c(x)])

    elif name == "forager":
        s = grid.radius**2 / grid.dim
        V = grid.measure
        kernels = [
            rk(M, s, species=0, perturbation=GradientTaxis(((2, p["xi1"] / V),))),
            rk(M, s, species=1, perturbation=GradientTaxis(((0, p["xi2"] / V),))),
            rk(M, sigma_for(grid, p["D"]), species=2),
        ]
        scaling = ScalingExponents(1, (1, 1, None))
        terms = (
            (Mass(p["gamma1"], (0, 2)), L(-p["m1"], 0)),
            (Mass(p["gamma2"], (1, 2)), L(-p["m2"], 1)),
            (Mass(-p["lam"], (0, 2)), Mass(-p["lam"], (1, 2)), L(-p["mu"], 2), Const(p["supply"])),
        )

        def initial(x):
            return np.array([0.5 + 0.25 * _c(x), 0.5 + 0.25 * _s(x),
                             1 + 0.5 * np.cos(2 * np.pi * np.asarray(x) + 0.5)])

    elif name == "flux_limited":
        b1, b2 = _beta_laws(p, grid.dim)
        pert = FluxLimited(1, b1, b2)
        nominal = float(abs(np.dot(b1(1.0), b2(1.0))))
        kernels = [
            rk(M, nominal, species=0, perturbation=pert),
            rk(M, sigma_for(grid, p["eta"]), species=1),
        ]
        scaling = ScalingExponents(1, (1, 2))
        terms = (
            (Mass(-1.0, (0, 1)), L(p["h"], 0)),
            (L(-1.0, 1), Mass(1.0, (0, 1)), Const(p["kappa"])),
        )

        def initial(x):
            return np.array([0.5 + 0.25 * _c(x), 1 + 0.5 * _s(x)])

    else:
        raise ParameterError(f"unknown scenario {name!r}")

    sources = S.SourceSpec(terms)

    def closed_form(u, _f=CLOSED_FORMS[name], _p=p):
        return _f(np.asarray(u, dtype=float), _p)

    def hand(_n=name, _p=p, _d=dim, _r=radius):
        return hand_model(_n, _p, _d, _r)

    return Scenario(name, p, kernels, scaling, sources, initial, closed_form, hand)
