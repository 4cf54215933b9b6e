"""Leading-order macroscopic limit of the kinetic system.

Given the turning kernels, the scaling exponents and the interaction terms,
assemble the cross-diffusion/reaction system

    d_t u_l = div(D_l grad u_l - [b_l == 1] u_l alpha_l(u)) + psi_l(u)
    d_t u_3 = [q == 1] div(D_3 grad u_3) + psi_3(u)

with D_i = -int v (x) theta_i, alpha_l = -int theta_l / M_l T1_l[M u](M_l)
and psi_i = int G_i(M u, v).
"""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from .model import BetaRate, MacroModel, SpeciesTerms, TaxisTerm
from .sources import SourceSpec, source_projection
from .turning import (
    FluxLimited,
    GradientTaxis,
    KernelError,
    ScalingExponents,
    TurningKernel,
    apply_T1,
    solve_theta,
)


class DerivationError(ValueError):
    pass


def diffusion_tensor(kernel: TurningKernel) -> np.ndarray:
    """D = -sum_k w_k v_k (x) theta(v_k)."""
    grid = kernel.grid
    theta = solve_theta(kernel)
    return -(grid.weights[:, None] * grid.nodes).T @ theta


def _probe_targets(kernel):
    p = kernel.perturbation
    if isinstance(p, GradientTaxis):
        return [t for t, _ in p.targets]
    return [p.target]


def taxis_coefficient(kernel: TurningKernel, n_fields: int | None = None) -> dict:
    """Matrix chi per target field with alpha = chi grad(u_target).

    Each column comes from a unit-gradient probe pushed through
    alpha = -int theta/M T1(M) dv. For the flux-limited kind the returned
    matrix is the coefficient of grad(u_t)/u_t, evaluated at unit state.
    """
    p = kernel.perturbation
    if p is None:
        return {}
    if kernel.order >= 2:
        raise DerivationError("taxis is absent at leading order when b >= 2")
    grid = kernel.grid
    targets = _probe_targets(kernel)
    n_fields = n_fields or (max(targets + [kernel.species]) + 1)
    fields = np.ones(n_fields)
    k = kernel
    if isinstance(p, FluxLimited):
        k = kernel.at_rate(float(kernel.rate(fields)))
    theta = solve_theta(k)
    weight = grid.weights[:, None] * theta / k.M[:, None]
    out = {}
    for t in targets:
        chi = np.zeros((grid.dim, grid.dim))
        for ax in range(grid.dim):
            grads = np.zeros((n_fields, grid.dim))
            grads[t, ax] = 1.0
            T1M = apply_T1(k, k.M, fields, grads)
            chi[:, ax] = -(weight.T @ T1M)
        out[t] = out.get(t, 0.0) + chi
    return out


def derive_macro_model(kernels, scaling: ScalingExponents, sources: SourceSpec,
                       name: str = "derived") -> MacroModel:
    """Assemble the macroscopic model with explicit coefficients.

    Term presence follows the Kronecker-delta rules: taxis only when
    b_l = 1, diffusion of species 3 only when q = 1.
    """
    kernels = list(kernels)
    n = len(kernels)
    if sources.n != n:
        raise DerivationError(f"{n} kernels but {sources.n} source species")
    if len(scaling.b) != n:
        raise DerivationError(f"{n} kernels but {len(scaling.b)} perturbation orders")
    grids = {id(k.grid) for k in kernels}
    if len(grids) != 1:
        raise DerivationError("all kernels must share one velocity grid")
    species = []
    for i, k in enumerate(kernels):
        if k.species != i:
            k = replace(k, species=i)
        if i == 2 and n >= 3:
            if k.perturbation is not None:
                raise DerivationError("species 3 kernel carries no perturbation")
            D = diffusion_tensor(k) if scaling.q == 1 else None
            species.append(SpeciesTerms(diffusion=D))
            continue
        b = scaling.order(i)
        k = replace(k, order=b)
        p = k.perturbation
        rate_law = None
        if isinstance(p, FluxLimited):
            rate_law = BetaRate(i, p.target, p.beta_self, p.beta_target)
            D = diffusion_tensor(k.at_rate(1.0))
        else:
            D = diffusion_tensor(k)
        taxis = ()
        if p is not None and b == 1:
            law = "inverse_target" if isinstance(p, FluxLimited) else "linear"
            taxis = tuple(TaxisTerm(t, chi, law) for t, chi in taxis_coefficient(k, n).items())
        species.append(SpeciesTerms(diffusion=D, taxis=taxis, rate_law=rate_law))
    eqs = [k.equilibrium for k in kernels]

    def reaction(u, _spec=sources, _eqs=eqs):
        return source_projection(_spec, _eqs, u)

    return MacroModel(tuple(species), reaction, name=name, sources=sources,
                      dim=kernels[0].grid.dim)


def _fmt(x: float) -> str:
    return f"{x:.12e}"


def _matrix_text(A) -> str:
    A = np.asarray(A)
    if np.allclose(A, A[0, 0] * np.eye(len(A)), rtol=0, atol=1e-12 * max(abs(A[0, 0]), 1e-300)):
        return f"{_fmt(A[0, 0])} I"
    rows = ["[" + ", ".join(_fmt(x) for x in r) + "]" for r in A]
    return "[" + ", ".join(rows) + "]"


def derivation_report(model: MacroModel, scaling: ScalingExponents | None = None) -> str:
    """Plain-text listing of every species equation with numeric coefficients."""
    lines = [f"macroscopic model: {model.name}", f"species: {model.n}"]
    if scaling is not None:
        bs = ", ".join(f"b_{i + 1}={b}" for i, b in enumerate(scaling.b) if b is not None)
        lines.append(f"scaling: q={scaling.q}" + (f", {bs}" if bs else ""))
    lines.append("")
    for i, s in enumerate(model.species):
        u = f"u_{i + 1}"
        parts = []
        if s.diffusion is not None:
            if s.rate_law is not None:
                parts.append(f"div( D_{i + 1}(u) grad {u} )")
            else:
                parts.append(f"div( D_{i + 1} grad {u} )")
        for t in s.taxis:
            if t.law == "inverse_target":
                parts.append(f"- div( {u} chi_{i + 1},{t.target + 1} grad u_{t.target + 1} / u_{t.target + 1} )")
            else:
                parts.append(f"- div( {u} chi_{i + 1},{t.target + 1} grad u_{t.target + 1} )")
        parts.append(f"+ psi_{i + 1}(u)")
        lines.append(f"d_t {u} = " + " ".join(parts).lstrip("+ "))
        if s.diffusion is not None:
            if s.rate_law is not None:
                lines.append(f"    D_{i + 1}(u) = {_matrix_text(s.diffusion)} / |beta_{i + 1}(u_{i + 1}).beta(u_{s.rate_law.target + 1})|")
            else:
                lines.append(f"    D_{i + 1} = {_matrix_text(s.diffusion)}")
        else:
            lines.append("    no spatial transport (ODE)")
        for t in s.taxis:
            lines.append(f"    chi_{i + 1},{t.target + 1} = {_matrix_text(t.chi)}")
        if model.sources is not None:
            lines.append(f"    psi_{i + 1}(u) = {model.sources.describe(i)}")
    return "\n".join(lines) + "\n"


__all__ = [
    "DerivationError",
    "KernelError",
    "derivation_report",
    "derive_macro_model",
    "diffusion_tensor",
    "source_projection",
    "taxis_coefficient",
]
