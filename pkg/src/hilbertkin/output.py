"""CSV writers. Every number is written in scientific notation, 12 significant digits."""
from __future__ import annotations

import os

import numpy as np


def fmt(x) -> str:
    return f"{float(x):.11e}"


def snapshot_name(prefix: str, t: float) -> str:
    return f"{prefix}_t{t:.6f}.csv"


def write_snapshot(path, grid, u) -> None:
    """Header `x,u_1,...,u_n` (and `y` for 2D grids), one row per cell."""
    u = np.asarray(u, dtype=float)
    n = u.shape[0]
    coords = [c.ravel() for c in grid.mesh()]
    names = ["x", "y"][: grid.ndim]
    header = ",".join(names + [f"u_{i + 1}" for i in range(n)])
    flat = u.reshape(n, -1)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for k in range(flat.shape[1]):
            row = [fmt(c[k]) for c in coords] + [fmt(v) for v in flat[:, k]]
            fh.write(",".join(row) + "\n")


def write_snapshots(outdir, prefix, grid, snapshots) -> list:
    os.makedirs(outdir, exist_ok=True)
    paths = []
    for s in snapshots:
        p = os.path.join(outdir, snapshot_name(prefix, s.t))
        write_snapshot(p, grid, s.u)
        paths.append(p)
    return paths


def read_snapshot(path):
    """Inverse of write_snapshot for 1D files: (x, u) arrays."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1:].T
