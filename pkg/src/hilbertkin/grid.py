"""Uniform space grids shared by the kinetic and macroscopic solvers."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BOUNDARIES = ("periodic", "reflecting")


@dataclass(frozen=True)
class SpaceGrid:
    """Cell-centered uniform grid on [0, L_1] x ... with one boundary type.

    "reflecting" means zero normal flux at the walls for both solvers.
    """

    cells: tuple = (128,)
    lengths: tuple = (1.0,)
    boundary: str = "periodic"

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(int(c) for c in self.cells))
        object.__setattr__(self, "lengths", tuple(float(x) for x in self.lengths))
        if len(self.cells) not in (1, 2) or len(self.cells) != len(self.lengths):
            raise ValueError("space grid must be 1D or 2D with one length per axis")
        if min(self.cells) < 3:
            raise ValueError("need at least 3 cells per axis")
        if min(self.lengths) <= 0:
            raise ValueError("domain lengths must be positive")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}")

    @property
    def ndim(self) -> int:
        return len(self.cells)

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    @property
    def dx(self) -> tuple:
        return tuple(L / n for L, n in zip(self.lengths, self.cells))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.dx))

    def centers(self, axis: int = 0) -> np.ndarray:
        h = self.dx[axis]
        return (np.arange(self.cells[axis]) + 0.5) * h

    def mesh(self):
        """Coordinate arrays of shape `cells`, one per axis."""
        return np.meshgrid(*[self.centers(a) for a in range(self.ndim)], indexing="ij")

    def total(self, u) -> np.ndarray:
        """Integral of each field over the domain (species axis first)."""
        u = np.asarray(u)
        axes = tuple(range(u.ndim - self.ndim, u.ndim))
        return u.sum(axis=axes) * self.cell_volume
