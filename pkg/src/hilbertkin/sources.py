"""Microscopic interaction terms G_i and their velocity projections.

Every built-in G_i has the form phi_i(f_1/M_1, ..., f_n/M_n) / |V|, so its
integral over V evaluated on f_j = M_j u_j is phi_i(u). Terms take the array
of ratios r_j = f_j/M_j (species axis first) and return phi contributions.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .velocity import moment


class SourceError(ValueError):
    pass


@dataclass(frozen=True)
class Logistic:
    """rate * u_s (1 - u_s**power)"""

    rate: float
    species: int
    power: float = 1.0

    def __call__(self, r):
        s = r[self.species]
        return self.rate * s * (1.0 - s**self.power)

    def describe(self):
        return f"{self.rate:g} u_{self.species + 1} (1 - u_{self.species + 1}^{self.power:g})"


@dataclass(frozen=True)
class Saturation:
    """sign * rate * u_a u_b / (k + theta_sat u_a)  (Beddington-deAngelis)."""

    rate: float
    prey: int
    carrier: int
    k: float
    theta_sat: float
    sign: float = 1.0

    def __call__(self, r):
        a = r[self.prey]
        den = self.k + self.theta_sat * a
        if np.any(den <= 0):
            raise SourceError("saturation denominator k + theta_sat u must stay positive")
        return self.sign * self.rate * a * r[self.carrier] / den

    def describe(self):
        sgn = "+" if self.sign > 0 else "-"
        a, b = self.prey + 1, self.carrier + 1
        return f"{sgn}{self.rate:g} u_{a} u_{b} / ({self.k:g} + {self.theta_sat:g} u_{a})"


@dataclass(frozen=True)
class MassAction:
    """coef * prod_j u_j over `species` (repeats allowed)."""

    coef: float
    species: tuple

    def __call__(self, r):
        out = self.coef
        for j in self.species:
            out = out * r[j]
        return out * np.ones_like(r[0])

    def describe(self):
        return f"{self.coef:g} " + " ".join(f"u_{j + 1}" for j in self.species)


@dataclass(frozen=True)
class Constant:
    """Constant supply."""

    value: float

    def __call__(self, r):
        return self.value * np.ones_like(r[0])

    def describe(self):
        return f"{self.value:g}"


@dataclass(frozen=True)
class Hook:
    """User function of the macroscopic state; smooth in u by construction."""

    func: Callable
    label: str = "hook(u)"

    def __call__(self, r):
        return np.asarray(self.func(r), dtype=float) * np.ones_like(r[0])

    def describe(self):
        return self.label


def linear(coef: float, j: int) -> MassAction:
    return MassAction(coef, (j,))


@dataclass(frozen=True)
class SourceSpec:
    """One tuple of terms per species."""

    terms: tuple

    @property
    def n(self) -> int:
        return len(self.terms)

    def phi(self, r):
        """Closure phi_i evaluated on ratios/densities r (species first)."""
        r = np.asarray(r, dtype=float)
        out = np.zeros((self.n,) + r.shape[1:])
        for i, ts in enumerate(self.terms):
            for t in ts:
                out[i] = out[i] + t(r)
        return out

    def G(self, f, equilibria):
        """Microscopic G_i(f, v) at every node; f has shape (n, ..., N)."""
        f = np.asarray(f, dtype=float)
        M = np.stack([e.values for e in equilibria])
        M = M.reshape((len(equilibria),) + (1,) * (f.ndim - 2) + (M.shape[-1],))
        measure = equilibria[0].grid.measure
        return self.phi(f / M) / measure

    def describe(self, i: int) -> str:
        ts = self.terms[i]
        if not ts:
            return "0"
        return " + ".join(t.describe() for t in ts).replace("+ -", "- ")

    @property
    def has_supply(self) -> bool:
        return any(isinstance(t, (Constant, Hook)) for ts in self.terms for t in ts)


def source_projection(spec: SourceSpec, equilibria, u):
    """psi_i(u) = int_V G_i(M_1 u_1, ..., M_n u_n, v) dv by quadrature.

    `u` has shape (n, ...); the result has the same shape.
    """
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise SourceError("non-finite state")
    M = np.stack([e.values for e in equilibria])
    f = u[..., None] * M.reshape((len(equilibria),) + (1,) * (u.ndim - 1) + (M.shape[-1],))
    G = spec.G(f, equilibria)
    return moment(equilibria[0].grid, G)
