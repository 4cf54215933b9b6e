"""Kinetic solver in one space dimension, uniformly stable in eps.

Each density is split as f_i = M_i u_i + g_i with <g_i> = 0. The moments
u_i sit at cell centers, the fluctuations g_i on cell faces (staggered
micro-macro decomposition). With p_i the relaxation power (2, or q+1 for
species 3) the rescaled kinetic equation

    d_t f + (1/eps) v.grad f = eps^-p T0(f) + eps^(b-2) T1[u](f) + G(f)

becomes

    d_t g = eps^-p T0(g) + S,
    S = -(1/eps)(I - P)(v d_x g) - (1/eps) v M d_x u + eps^(b-2) T1[u](M u + g) + (I - P) G
    d_t u = -(1/eps) d_x <v g> + <G>

where P is the projection onto M. The relaxation part of the g equation is
integrated exactly over one step (the exponential of the turning matrix),
everything else is explicit. When eps -> 0 the update for u collapses to an
explicit finite-volume scheme for the macroscopic equation.

Space is 1D (x along the first velocity component); velocities live on the
full d-dimensional grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .grid import SpaceGrid
from .hilbert import diffusion_tensor
from .turning import (
    FluxLimited,
    TurningKernel,
    apply_T1_weight,
    perturbation_weight,
    solve_mean_zero,
)
from .velocity import moment

SAFETY = 0.9
NEG_TOL = 1e-13


class KineticError(RuntimeError):
    """Numerical failure of the kinetic solver."""


class KineticCFLError(KineticError):
    pass


@dataclass(frozen=True)
class KineticState:
    """u: (n, nx) cell moments; g: (n, faces, N) mean-zero face fluctuations."""

    t: float
    u: np.ndarray
    g: np.ndarray
    grid: SpaceGrid = field(repr=False)
    M: np.ndarray = field(repr=False)

    def cell_g(self) -> np.ndarray:
        return _cell_average(self.g, self.grid.periodic)

    def f(self) -> np.ndarray:
        """Cell-centered densities M u + g, shape (n, nx, N)."""
        return self.M[:, None, :] * self.u[..., None] + self.cell_g()


def relaxation_substep(kernel: TurningKernel, f, dt: float, eps: float, power: int = 2):
    """Exact solution of d_t f = eps^-p T0(f) over dt for the relaxation kind.

    f -> M<f> + (f - M<f>) exp(-sigma dt / eps^p); velocity axis last.
    """
    if not kernel.is_relaxation:
        raise ValueError("closed-form relaxation only for the relaxation kernel")
    f = np.asarray(f, dtype=float)
    rho = moment(kernel.grid, f)[..., None]
    return kernel.M * rho + (f - kernel.M * rho) * np.exp(-kernel.sigma * dt / eps**power)


# --- staggered grid helpers ----------------------------------------------------
# Face j sits between cells j-1 and j. Periodic grids have nx faces; walled
# grids have nx+1 faces, the two wall faces carry g = 0 (no flux).

def n_faces(grid: SpaceGrid) -> int:
    return grid.cells[0] + (0 if grid.periodic else 1)


def _face_neighbors(u, periodic):
    """Cell values left/right of every interior face (last axis is space)."""
    if periodic:
        return np.roll(u, 1, axis=-1), u
    return u[..., :-1], u[..., 1:]


def _interior(periodic):
    return slice(None) if periodic else slice(1, -1)


def _cell_average(g, periodic):
    """Face values (n, F, N) -> cell values (n, nx, N)."""
    if periodic:
        return 0.5 * (g + np.roll(g, -1, axis=1))
    return 0.5 * (g[:, :-1] + g[:, 1:])


def _cell_divergence(J, h, periodic):
    """Face fluxes (n, F) -> cell divergence (n, nx)."""
    if periodic:
        return (np.roll(J, -1, axis=-1) - J) / h
    return (J[:, 1:] - J[:, :-1]) / h


def _upwind_transport(g, vx, h, periodic):
    """v_x d_x g on interior faces, first-order upwind. g has shape (F, N)."""
    if periodic:
        gl, gc, gr = np.roll(g, 1, axis=0), g, np.roll(g, -1, axis=0)
    else:
        gl, gc, gr = g[:-2], g[1:-1], g[2:]
    vp = np.maximum(vx, 0.0)
    vm = np.minimum(vx, 0.0)
    return (vp * (gc - gl) + vm * (gr - gc)) / h


# --- the solver -----------------------------------------------------------------

class KineticSolver:
    """Holds kernels, scaling and sources for a fixed eps and space grid."""

    def __init__(self, kernels, scaling, sources, grid: SpaceGrid, eps: float):
        if grid.ndim != 1:
            raise ValueError("the kinetic solver is one-dimensional in space")
        if not eps > 0:
            raise ValueError("eps must be positive")
        self.kernels = list(kernels)
        self.n = len(self.kernels)
        if sources is not None and sources.n != self.n:
            raise ValueError(f"{self.n} kernels but {sources.n} source species")
        self.scaling = scaling
        self.sources = sources
        self.grid = grid
        self.eps = float(eps)
        self.vgrid = self.kernels[0].grid
        self.vx = self.vgrid.nodes[:, 0]
        self.M = np.stack([k.M for k in self.kernels])
        self.equilibria = [k.equilibrium for k in self.kernels]
        self.power = [scaling.relaxation_power(i, self.n) for i in range(self.n)]
        self.order = [scaling.order(i) if i < len(scaling.b) else None for i in range(self.n)]
        for i, k in enumerate(self.kernels):
            if k.perturbation is not None and self.order[i] is None:
                raise ValueError(f"species {i + 1} has a perturbation but no order b")
        self._pinv = [None if k.is_relaxation else self._pseudo_inverse(k) for k in self.kernels]
        self._expm_cache = {}

    # -- turning-matrix helpers
    def _pseudo_inverse(self, kernel):
        """Matrix of L0^-1 restricted to mean-zero vectors (and killing M)."""
        N = self.vgrid.size
        P = np.eye(N) - np.outer(kernel.M, self.vgrid.weights)
        return solve_mean_zero(kernel, P)

    def _propagators(self, i, dt):
        key = (i, float(dt))
        if key not in self._expm_cache:
            if len(self._expm_cache) > 64:
                self._expm_cache.clear()
            k = self.kernels[i]
            ep = self.eps ** self.power[i]
            L = k.matrix()
            E = expm(dt * L / ep)
            Phi = ep * (E - np.eye(len(E))) @ self._pinv[i]
            self._expm_cache[key] = (E, Phi)
        return self._expm_cache[key]

    def _project(self, i, h):
        return h - self.M[i] * moment(self.vgrid, h)[..., None]

    # -- face quantities
    def _face_fields(self, u):
        h = self.grid.dx[0]
        uL, uR = _face_neighbors(u, self.grid.periodic)
        ubar = 0.5 * (uL + uR)
        du = (uR - uL) / h
        grads = np.zeros(du.shape + (self.vgrid.dim,))
        grads[..., 0] = du
        return uL, uR, ubar, du, grads

    def _rate(self, i, ubar):
        k = self.kernels[i]
        if isinstance(k.perturbation, FluxLimited):
            return np.asarray(k.rate(ubar), dtype=float)
        return float(k.sigma)

    def _drift(self, i, ubar, grads, rate):
        """T1[u](M_i) on faces and the sign/speed of the induced drift."""
        k = self.kernels[i]
        a = perturbation_weight(k, ubar, grads)
        T1M = apply_T1_weight(k, a, np.broadcast_to(k.M, a.shape))
        if self._pinv[i] is None:
            resp = T1M / np.reshape(rate, np.shape(rate) + (1,))
        else:
            resp = -(T1M @ self._pinv[i].T)
        b = self.order[i]
        scale = self.eps ** (self.power[i] + b - 3)
        speed = scale * moment(self.vgrid, resp, "v")[..., 0]
        return a, T1M, speed

    # -- step size
    def stable_dt(self, u) -> float:
        """Largest admissible step: transport CFL, diffusive and drift limits."""
        u = np.asarray(u, dtype=float)
        h = self.grid.dx[0]
        R = self.vgrid.radius
        eps = self.eps
        dt = eps * h / R
        _, _, ubar, _, grads = self._face_fields(u)
        for i, k in enumerate(self.kernels):
            rate = self._rate(i, ubar)
            sig_min = float(np.min(rate))
            D0 = float(np.max(np.diag(diffusion_tensor(k.at_rate(sig_min) if k.is_relaxation else k))))
            D = D0 * eps ** (self.power[i] - 2)
            dt = min(dt, 0.5 * (h * h / (2 * D) + eps * h / R))
            if k.perturbation is not None:
                _, _, speed = self._drift(i, ubar, grads, rate)
                vmax = float(np.max(np.abs(speed)))
                if vmax > 0:
                    dt = min(dt, h / vmax)
        return dt

    def transport_cfl(self) -> float:
        return self.eps * self.grid.dx[0] / self.vgrid.radius

    # -- one step
    def initial_state(self, u0, g0=None) -> KineticState:
        u0 = np.array(u0, dtype=float)
        if u0.shape != (self.n, self.grid.cells[0]):
            raise ValueError(f"initial data must have shape {(self.n, self.grid.cells[0])}")
        if g0 is None:
            g0 = np.zeros((self.n, n_faces(self.grid), self.vgrid.size))
        return KineticState(0.0, u0, np.array(g0, dtype=float), self.grid, self.M)

    def step(self, state: KineticState, dt: float) -> KineticState:
        lim = SAFETY * self.transport_cfl()
        if dt > lim * (1 + 1e-12):
            raise KineticCFLError(f"dt={dt:.3e} exceeds the transport bound {lim:.3e}")
        eps = self.eps
        h = self.grid.dx[0]
        per = self.grid.periodic
        inner = _interior(per)
        u, g = state.u, state.g
        uL, uR, ubar, du, grads = self._face_fields(u)

        Gface = Gcell = None
        if self.sources is not None:
            f_face = self.M[:, None, :] * ubar[..., None] + g[:, inner]
            Gface = self.sources.G(f_face, self.equilibria)
            f_cell = self.M[:, None, :] * u[..., None] + _cell_average(g, per)
            Gcell = self.sources.G(f_cell, self.equilibria)

        g_new = np.zeros_like(g)
        for i, k in enumerate(self.kernels):
            gi = g[i]
            gin = gi[inner]
            tr = _upwind_transport(gi, self.vx, h, per)
            S = -self._project(i, tr) / eps - (self.vx * k.M)[None, :] * du[i][:, None] / eps
            rate = self._rate(i, ubar)
            if k.perturbation is not None:
                a, T1M, speed = self._drift(i, ubar, grads, rate)
                u_up = np.where(speed > 0, uL[i], uR[i])
                T1 = u_up[:, None] * T1M + apply_T1_weight(k, a, gin)
                S = S + eps ** (self.order[i] - 2) * T1
            if Gface is not None:
                S = S + self._project(i, Gface[i])
            if k.is_relaxation:
                ep = eps ** self.power[i]
                lam = np.asarray(rate) * dt / ep
                decay = np.exp(-lam)
                if np.ndim(decay):
                    decay = decay[:, None]
                    rate_b = np.asarray(rate)[:, None]
                else:
                    rate_b = rate
                new = decay * gin + (1.0 - decay) * (ep / rate_b) * S
            else:
                E, Phi = self._propagators(i, dt)
                new = gin @ E.T + S @ Phi.T
            g_new[i, inner] = self._project(i, new)

        J = moment(self.vgrid, g_new, "v")[..., 0]
        u_new = u - dt / eps * _cell_divergence(J, h, per)
        if Gcell is not None:
            u_new = u_new + dt * moment(self.vgrid, Gcell)
        t = state.t + dt
        out = KineticState(t, u_new, g_new, self.grid, self.M)
        self._check(out)
        return out

    def _check(self, state: KineticState):
        if not (np.all(np.isfinite(state.u)) and np.all(np.isfinite(state.g))):
            raise KineticError(f"non-finite values at t={state.t:.6g}")
        fmin = float(state.f().min())
        if fmin < -NEG_TOL:
            raise KineticError(f"distribution fell to {fmin:.3e} at t={state.t:.6g}")

    def run(self, u0, output_times, dt=None, callback=None):
        """Integrate from well-prepared data (g = 0) and return snapshots."""
        state = self.initial_state(u0)
        times = sorted(float(t) for t in output_times)
        out = []
        for T in times:
            while state.t < T - 1e-14 * max(1.0, T):
                h = dt if dt is not None else SAFETY * self.stable_dt(state.u)
                # round to a uniform step inside the segment to keep the expm cache small
                nleft = int(np.ceil((T - state.t) / h - 1e-9))
                h = (T - state.t) / max(nleft, 1)
                state = self.step(state, h)
                if callback is not None:
                    callback(state)
            state = KineticState(T, state.u, state.g, self.grid, self.M)
            out.append(state)
        return out


def run_kinetic(kernels, scaling, sources, grid: SpaceGrid, eps: float, u0, output_times, dt=None):
    """Convenience wrapper: build a solver and return the snapshot list."""
    return KineticSolver(kernels, scaling, sources, grid, eps).run(u0, output_times, dt=dt)
