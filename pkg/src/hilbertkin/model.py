"""Machine-readable macroscopic cross-diffusion/reaction models."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import sources as src
from .turning import BetaLaw


@dataclass(frozen=True)
class BetaRate:
    """State-dependent rate |beta_self(u_self) . beta_target(u_target)|."""

    species: int
    target: int
    beta_self: Callable = field(default_factory=BetaLaw)
    beta_target: Callable = field(default_factory=BetaLaw)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        b1 = self.beta_self(u[self.species])
        b2 = self.beta_target(u[self.target])
        return np.abs(np.sum(b1 * b2, axis=-1))


@dataclass(frozen=True, eq=False)
class TaxisTerm:
    """Flux contribution -u chi grad(u_target).

    With law "inverse_target" the matrix is divided by u_target.
    """

    target: int
    chi: np.ndarray
    law: str = "linear"


@dataclass(frozen=True, eq=False)
class SpeciesTerms:
    """Transport terms of one species.

    `diffusion` is None when the species has no spatial term. With a
    `rate_law` the stored tensor is the unit-rate tensor and the actual
    diffusion is diffusion / rate_law(u).
    """

    diffusion: Optional[np.ndarray] = None
    taxis: tuple = ()
    rate_law: Optional[Callable] = None

    @property
    def is_ode(self) -> bool:
        return self.diffusion is None and not self.taxis


@dataclass(frozen=True, eq=False)
class MacroModel:
    species: tuple
    reaction: Callable
    name: str = "custom"
    sources: Optional[src.SourceSpec] = None
    dim: int = 2

    @property
    def n(self) -> int:
        return len(self.species)


DerivedModel = MacroModel


# --- model file -------------------------------------------------------------

def _term_to_dict(t):
    if isinstance(t, src.Logistic):
        return {"kind": "logistic", "rate": t.rate, "species": t.species, "power": t.power}
    if isinstance(t, src.Saturation):
        return {"kind": "saturation", "rate": t.rate, "prey": t.prey, "carrier": t.carrier,
                "k": t.k, "theta_sat": t.theta_sat, "sign": t.sign}
    if isinstance(t, src.MassAction):
        return {"kind": "mass_action", "coef": t.coef, "species": list(t.species)}
    if isinstance(t, src.Constant):
        return {"kind": "constant", "value": t.value}
    raise TypeError(f"source term {t!r} cannot be written to a model file")


def _term_from_dict(d):
    d = dict(d)
    kind = d.pop("kind")
    if kind == "logistic":
        return src.Logistic(**d)
    if kind == "saturation":
        return src.Saturation(**d)
    if kind == "mass_action":
        return src.MassAction(d["coef"], tuple(d["species"]))
    if kind == "constant":
        return src.Constant(**d)
    raise ValueError(f"unknown source term kind {kind!r}")


def _beta_to_dict(b):
    if not isinstance(b, BetaLaw):
        raise TypeError("only affine beta laws can be written to a model file")
    return {"offset": b.offset, "slope": b.slope, "direction": list(b.direction)}


def model_to_dict(model: MacroModel) -> dict:
    if model.sources is None:
        raise TypeError("model without a source specification cannot be serialized")
    species = []
    for s in model.species:
        entry = {
            "diffusion": None if s.diffusion is None else np.asarray(s.diffusion).tolist(),
            "taxis": [{"target": t.target, "chi": np.asarray(t.chi).tolist(), "law": t.law}
                      for t in s.taxis],
            "rate_law": None,
        }
        if s.rate_law is not None:
            r = s.rate_law
            entry["rate_law"] = {"species": r.species, "target": r.target,
                                 "beta_self": _beta_to_dict(r.beta_self),
                                 "beta_target": _beta_to_dict(r.beta_target)}
        species.append(entry)
    return {
        "name": model.name,
        "dim": model.dim,
        "species": species,
        "sources": [[_term_to_dict(t) for t in ts] for ts in model.sources.terms],
    }


def model_from_dict(d: dict) -> MacroModel:
    spec = src.SourceSpec(tuple(tuple(_term_from_dict(t) for t in ts) for ts in d["sources"]))
    species = []
    for e in d["species"]:
        rl = None
        if e.get("rate_law"):
            r = e["rate_law"]
            rl = BetaRate(r["species"], r["target"],
                          BetaLaw(r["beta_self"]["offset"], r["beta_self"]["slope"], tuple(r["beta_self"]["direction"])),
                          BetaLaw(r["beta_target"]["offset"], r["beta_target"]["slope"], tuple(r["beta_target"]["direction"])))
        species.append(SpeciesTerms(
            diffusion=None if e["diffusion"] is None else np.array(e["diffusion"], dtype=float),
            taxis=tuple(TaxisTerm(t["target"], np.array(t["chi"], dtype=float), t.get("law", "linear"))
                        for t in e["taxis"]),
            rate_law=rl,
        ))
    return MacroModel(tuple(species), spec.phi, name=d.get("name", "custom"), sources=spec,
                      dim=d.get("dim", 2))


def save_model(model: MacroModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> MacroModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
