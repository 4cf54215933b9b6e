"""Discrete velocity sphere V = R S^{d-1}, its quadrature, and equilibria."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TOL = 1e-12
# smallest admissible ratio min(M)/max(M) for tabulated equilibria
MIN_EQUILIBRIUM_RATIO = 1e-6


def _frozen(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class VelocityGrid:
    """Nodes on the sphere of radius `radius` with equal quadrature weights.

    The weights carry the surface measure, so they sum to |V| (2 pi R in
    two dimensions, 4 pi R^2 in three).
    """

    dim: int
    radius: float
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def measure(self) -> float:
        if self.dim == 2:
            return 2.0 * np.pi * self.radius
        return 4.0 * np.pi * self.radius**2

    @property
    def antipode(self) -> np.ndarray:
        """Index of -v_k for every node k."""
        d = np.linalg.norm(self.nodes[:, None, :] + self.nodes[None, :, :], axis=-1)
        return np.argmin(d, axis=1)

    def check(self) -> None:
        R = self.radius
        norms = np.linalg.norm(self.nodes, axis=1)
        if np.max(np.abs(norms - R)) > TOL * R:
            raise ValueError("velocity node off the sphere")
        if abs(self.weights.sum() - self.measure) > TOL * self.measure:
            raise ValueError("weights do not sum to |V|")
        odd = self.weights @ self.nodes
        if np.max(np.abs(odd)) > TOL * R * self.measure:
            raise ValueError("first discrete moment of the weights is not zero")


def _polyhedron(n: int) -> np.ndarray:
    if n == 6:
        return np.vstack([np.eye(3), -np.eye(3)])
    g = (1.0 + np.sqrt(5.0)) / 2.0
    if n == 12:
        pts = []
        for a in (-1.0, 1.0):
            for b in (-g, g):
                pts += [(0.0, a, b), (a, b, 0.0), (b, 0.0, a)]
        return np.array(pts)
    if n == 20:
        pts = [(a, b, c) for a in (-1.0, 1.0) for b in (-1.0, 1.0) for c in (-1.0, 1.0)]
        for a in (-1.0, 1.0):
            for b in (-1.0, 1.0):
                pts += [(0.0, a / g, b * g), (a / g, b * g, 0.0), (b * g, 0.0, a / g)]
        return np.array(pts)
    raise ValueError(f"d=3 supports N in (6, 12, 20), got {n}")


SUPPORTED_3D = (6, 12, 20)


def build_velocity_grid(d: int = 2, R: float = 1.0, N: int = 16) -> VelocityGrid:
    """Equal-weight, antipodally symmetric nodes on the sphere of radius R.

    d=2 uses N equally spaced points on the circle (N even, N >= 4, so the
    set is closed under v -> -v and integrates v (x) v exactly). d=3 uses the
    vertices of the octahedron (6), icosahedron (12) or dodecahedron (20).
    """
    if d not in (2, 3):
        raise ValueError(f"unsupported velocity dimension d={d}")
    if not R > 0:
        raise ValueError("radius must be positive")
    N = int(N)
    if d == 2:
        if N < 4:
            raise ValueError("d=2 needs N >= 4 to integrate v (x) v exactly")
        if N % 2:
            raise ValueError("d=2 needs an even N for antipodal closure")
        phi = 2.0 * np.pi * np.arange(N) / N
        nodes = R * np.column_stack([np.cos(phi), np.sin(phi)])
        measure = 2.0 * np.pi * R
    else:
        if N < 4:
            raise ValueError("N too small")
        unit = _polyhedron(N)
        nodes = R * unit / np.linalg.norm(unit, axis=1)[:, None]
        measure = 4.0 * np.pi * R**2
    # exact zeros keep the odd moments identically zero
    nodes[np.abs(nodes) < 1e-15 * R] = 0.0
    grid = VelocityGrid(d, float(R), _frozen(nodes), _frozen(np.full(N, measure / N)))
    grid.check()
    return grid


def _weight_values(grid: VelocityGrid, weight):
    if weight is None or (np.isscalar(weight) and weight == 1):
        return None
    if isinstance(weight, str):
        v = grid.nodes
        if weight == "v":
            return v
        if weight == "vv":
            return v[:, :, None] * v[:, None, :]
        raise ValueError(f"unknown moment weight {weight!r}")
    if callable(weight):
        return np.asarray(weight(grid.nodes), dtype=float)
    w = np.asarray(weight, dtype=float)
    if w.shape[0] != grid.size:
        raise ValueError("weight table length does not match the grid")
    return w


def moment(grid: VelocityGrid, f, weight=None):
    """Quadrature sum_k w_k weight(v_k) f(v_k).

    `f` has the velocity index last, any leading axes are kept. `weight` is
    None (plain integral), "v", "vv", a callable of the node array returning
    shape (N, ...), or such an array directly. Tensor axes of the weight are
    appended after the leading axes of `f`.
    """
    f = np.asarray(f, dtype=float)
    if f.shape[-1] != grid.size:
        raise ValueError(f"f has {f.shape[-1]} velocity values, grid has {grid.size}")
    wv = _weight_values(grid, weight)
    fw = f * grid.weights
    if wv is None:
        return fw.sum(axis=-1)
    return np.tensordot(fw, wv, axes=([-1], [0]))


@dataclass(frozen=True, eq=False)
class Equilibrium:
    """Equilibrium distribution M(v_k), tied to the grid it was checked on."""

    grid: VelocityGrid
    values: np.ndarray

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.values == self.values[0]))


def check_equilibrium(grid: VelocityGrid, values) -> None:
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.size,):
        raise ValueError("equilibrium table length does not match the grid")
    if not np.all(values > 0):
        raise ValueError("equilibrium must be positive at every node")
    if values.min() < MIN_EQUILIBRIUM_RATIO * values.max():
        raise ValueError("equilibrium min/max ratio below 1e-6")
    if abs(moment(grid, values) - 1.0) > TOL:
        raise ValueError("equilibrium is not normalized (<M> != 1)")
    flux = moment(grid, values, "v")
    if np.max(np.abs(flux)) > TOL * max(grid.radius, 1.0):
        raise ValueError("equilibrium carries a nonzero flux <vM>")


def equilibrium_uniform(grid: VelocityGrid) -> Equilibrium:
    values = np.full(grid.size, 1.0 / grid.measure)
    return Equilibrium(grid, _frozen(values))


def equilibrium_from_table(grid: VelocityGrid, values) -> Equilibrium:
    """User-supplied equilibrium; any failed invariant is a hard error."""
    check_equilibrium(grid, values)
    return Equilibrium(grid, _frozen(values))
