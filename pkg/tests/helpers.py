"""Shared oracles for the solver tests."""
import numpy as np
from scipy.integrate import solve_ivp

from hilbertkin.sources import SourceSpec


def ode_oracle(psi, u0, times):
    """High-accuracy reference for du/dt = psi(u)."""
    sol = solve_ivp(lambda t, u: psi(u), (0.0, max(times)), np.asarray(u0, dtype=float),
                    method="DOP853", rtol=1e-12, atol=1e-14, t_eval=sorted(times))
    assert sol.success
    return sol.y.T


def heat_exact(x, t, D, amp=0.5):
    return 1 + amp * np.exp(-4 * np.pi**2 * D * t) * np.cos(2 * np.pi * x)


def without_sources(sc):
    sc.sources = SourceSpec(tuple(() for _ in range(sc.n)))
    return sc
