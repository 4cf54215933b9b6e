"""Kinetic velocity-jump models, their diffusive limits, and solvers for both.

Modules:
  velocity  discrete velocity grids, moments, equilibria
  turning   turning operators, linear solves, structural checks
  sources   interaction terms G_i and their projections psi_i
  hilbert   derivation of the macroscopic cross-diffusion system
  kinetic   eps-uniform kinetic solver (1D space)
  macro     finite-volume solver for the macroscopic system (1D/2D)
  harness   eps sweeps and convergence orders
  cli       configuration and command-line entry point
"""
from .grid import SpaceGrid
from .harness import ConvergenceReport, epsilon_sweep, estimate_order
from .hilbert import derivation_report, derive_macro_model, diffusion_tensor, taxis_coefficient
from .kinetic import KineticSolver, KineticState, relaxation_substep, run_kinetic
from .macro import MacroState, run_macro, step_macro
from .model import MacroModel, load_model, save_model
from .presets import SCENARIOS, make_scenario
from .sources import SourceSpec, source_projection
from .turning import (
    ScalingExponents,
    TurningKernel,
    apply_T0,
    apply_T1,
    solve_mean_zero,
    solve_theta,
    validate_assumptions,
)
from .velocity import VelocityGrid, build_velocity_grid, equilibrium_uniform, moment

__version__ = "0.1.0"
