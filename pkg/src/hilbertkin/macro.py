"""Finite-volume solver for the macroscopic cross-diffusion/reaction system.

Fluxes live on cell faces: central differences for diffusion, first-order
upwinding of the density for the taxis drift. Time integration is the
three-stage strong-stability-preserving Runge-Kutta scheme, with a step
bounded by the parabolic and advective CFL limits.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import SpaceGrid
from .model import MacroModel
from .turning import FLUX_LIMIT_FLOOR

SAFETY = 0.9
NEG_TOL = 1e-12
DEFAULT_MAX_DT = 1e-2


class MacroError(RuntimeError):
    """Numerical failure of the macroscopic solver."""


class MacroCFLError(MacroError):
    pass


@dataclass(frozen=True)
class MacroState:
    t: float
    u: np.ndarray


def _faces(u, axis, periodic):
    """Left/right cell values at every face that carries a flux."""
    if periodic:
        return u, np.roll(u, -1, axis=axis)
    n = u.shape[axis]
    return np.take(u, range(n - 1), axis=axis), np.take(u, range(1, n), axis=axis)


def _divergence(F, axis, h, periodic):
    """(F_{i+1/2} - F_{i-1/2}) / h with zero flux through the walls."""
    if periodic:
        return (F - np.roll(F, 1, axis=axis)) / h
    pad = [(0, 0)] * F.ndim
    pad[axis] = (1, 1)
    Fp = np.pad(F, pad)
    return np.diff(Fp, axis=axis) / h


def _check_diagonal(A, what):
    A = np.asarray(A, dtype=float)
    off = A - np.diag(np.diag(A))
    if np.max(np.abs(off)) > 1e-12 * max(np.max(np.abs(A)), 1e-300):
        raise ValueError(f"{what} has off-diagonal entries; the finite-volume solver needs diagonal tensors")
    return np.diag(A)


def _validate(model: MacroModel, grid: SpaceGrid, u):
    if u.shape[0] != model.n or u.shape[1:] != grid.cells:
        raise ValueError(f"state shape {u.shape} does not match {model.n} species on {grid.cells}")
    for i, s in enumerate(model.species):
        if s.diffusion is not None:
            _check_diagonal(s.diffusion, f"D_{i + 1}")
        for t in s.taxis:
            _check_diagonal(t.chi, f"chi_{i + 1},{t.target + 1}")


def _face_terms(model, grid, u, axis):
    """Per species: (diffusivity at faces, drift velocity at faces)."""
    h = grid.dx[axis]
    uL, uR = _faces(u, axis + 1, grid.periodic)
    ubar = 0.5 * (uL + uR)
    grad = (uR - uL) / h
    out = []
    for s in model.species:
        D = None
        if s.diffusion is not None:
            D = np.diag(s.diffusion)[axis]
            if s.rate_law is not None:
                D = D / s.rate_law(ubar)
        V = 0.0
        for t in s.taxis:
            c = np.diag(t.chi)[axis] * grad[t.target]
            if t.law == "inverse_target":
                ut = ubar[t.target]
                if np.any(ut < FLUX_LIMIT_FLOOR):
                    raise MacroError(f"u_{t.target + 1} fell below {FLUX_LIMIT_FLOOR:g} in the flux-limited drift")
                c = c / ut
            V = V + c
        out.append((D, V))
    return uL, uR, grad, out


def rhs(model: MacroModel, grid: SpaceGrid, u) -> np.ndarray:
    """Semi-discrete right-hand side du/dt."""
    u = np.asarray(u, dtype=float)
    du = np.asarray(model.reaction(u), dtype=float).copy()
    for axis in range(grid.ndim):
        uL, uR, grad, terms = _face_terms(model, grid, u, axis)
        for i, (D, V) in enumerate(terms):
            if D is None and not model.species[i].taxis:
                continue
            F = 0.0
            if D is not None:
                F = D * grad[i]
            if model.species[i].taxis:
                up = np.where(V > 0, uL[i], uR[i])
                F = F - V * up
            du[i] += _divergence(np.broadcast_to(F, grad[i].shape), axis, grid.dx[axis], grid.periodic)
    return du


def stable_dt(model: MacroModel, grid: SpaceGrid, u) -> float:
    """Largest step allowed by the parabolic and advective limits (before safety)."""
    u = np.asarray(u, dtype=float)
    dt = np.inf
    for axis in range(grid.ndim):
        h = grid.dx[axis]
        _, _, _, terms = _face_terms(model, grid, u, axis)
        for D, V in terms:
            if D is not None:
                dmax = float(np.max(D))
                if dmax > 0:
                    dt = min(dt, h * h / (2 * grid.ndim * dmax))
            vmax = float(np.max(np.abs(V)))
            if vmax > 0:
                dt = min(dt, h / (2 * vmax))
    return dt


def _clean(u, t):
    if not np.all(np.isfinite(u)):
        raise MacroError(f"non-finite values at t={t:.6g}")
    lo = float(u.min())
    if lo < -NEG_TOL:
        raise MacroError(f"density fell to {lo:.3e} at t={t:.6g}")
    if lo < 0:
        u = np.where(u < 0, 0.0, u)
    return u


def step_macro(state: MacroState, model: MacroModel, grid: SpaceGrid, dt: float) -> MacroState:
    """One SSP-RK3 step; raises MacroCFLError when dt exceeds the stability bound."""
    u = np.asarray(state.u, dtype=float)
    lim = SAFETY * stable_dt(model, grid, u)
    if dt > lim * (1 + 1e-12):
        raise MacroCFLError(f"dt={dt:.3e} exceeds the stability bound {lim:.3e}")
    L = lambda w: rhs(model, grid, w)  # noqa: E731
    u1 = u + dt * L(u)
    u2 = 0.75 * u + 0.25 * (u1 + dt * L(u1))
    un = u / 3.0 + 2.0 / 3.0 * (u2 + dt * L(u2))
    t = state.t + dt
    return MacroState(t, _clean(un, t))


def run_macro(model: MacroModel, grid: SpaceGrid, u0, output_times, dt=None,
              max_dt: float = DEFAULT_MAX_DT, callback=None):
    """Integrate from t=0 and return snapshots at `output_times`.

    With dt=None each step takes min(0.9 * stable_dt, max_dt) and lands
    exactly on the next output time.
    """
    u0 = np.asarray(u0, dtype=float)
    _validate(model, grid, u0)
    times = sorted(float(t) for t in output_times)
    if times and times[0] < 0:
        raise ValueError("output times must be nonnegative")
    state = MacroState(0.0, _clean(u0.copy(), 0.0))
    out = []
    nsteps = 0
    for T in times:
        while state.t < T - 1e-14 * max(1.0, T):
            h = dt if dt is not None else min(SAFETY * stable_dt(model, grid, state.u), max_dt)
            h = min(h, T - state.t)
            state = step_macro(state, model, grid, h)
            nsteps += 1
            if callback is not None:
                callback(state)
        state = MacroState(T, state.u)
        out.append(MacroState(T, state.u.copy()))
    return out
