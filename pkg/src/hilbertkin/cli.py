"""Command-line entry point.

    hilbertkin derive      --config run.ini --out dir
    hilbertkin validate    --config run.ini --out dir
    hilbertkin run-macro   --config run.ini --out dir
    hilbertkin run-kinetic --config run.ini --out dir [--eps 0.1,0.05]
    hilbertkin sweep       --config run.ini --out dir [--eps 0.2,0.1,0.05]

Exit status: 0 success, 1 configuration or validation failure, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from .config import ConfigError, RunConfig, emit_config, parse_config, parse_eps
from .grid import SpaceGrid
from .harness import SweepError, epsilon_sweep
from .hilbert import DerivationError, derivation_report
from .kinetic import KineticError, KineticSolver
from .macro import MacroError, run_macro
from .model import load_model, save_model
from .output import fmt, write_snapshots
from .presets import ParameterError, make_scenario
from .sources import SourceError
from .turning import KernelError, validate_assumptions

log = logging.getLogger("hilbertkin")

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2
COMMANDS = ("derive", "run-kinetic", "run-macro", "sweep", "validate")


def build_scenario(cfg: RunConfig):
    sc = make_scenario(cfg.scenario, dict(cfg.params), dim=cfg.velocity_dim,
                       radius=cfg.radius, nodes=cfg.nodes)
    sc.scaling = cfg.scaling(sc.scaling)
    return sc


def space_grid(cfg: RunConfig, dim: int | None = None) -> SpaceGrid:
    dim = dim or cfg.space_dim
    return SpaceGrid((cfg.cells,) * dim, (cfg.length,) * dim, cfg.boundary)


def _macro_model(cfg, sc):
    if cfg.model == "derived":
        return sc.derived()
    if cfg.model == "hand":
        return sc.hand_model()
    if not os.path.exists(cfg.model):
        raise ConfigError(f"[scenario] model: no such model file {cfg.model!r}")
    return load_model(cfg.model)


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_derive(cfg, sc, out):
    model = sc.derived()
    _write(os.path.join(out, "derivation.txt"), derivation_report(model, sc.scaling))
    save_model(model, os.path.join(out, "model.json"))
    return EXIT_OK


def cmd_validate(cfg, sc, out):
    rep = validate_assumptions(sc.kernels, sc.n)
    _write(os.path.join(out, "validation.txt"), rep.to_text())
    if not rep.passed:
        for c in rep.failures():
            log.error("check failed: %s", c.name)
        return EXIT_INVALID
    return EXIT_OK


def cmd_run_macro(cfg, sc, out):
    grid = space_grid(cfg)
    model = _macro_model(cfg, sc)
    x = grid.mesh()[0]
    u0 = np.asarray(sc.initial(x), dtype=float)
    snaps = run_macro(model, grid, u0, cfg.output_times)
    write_snapshots(out, "macro", grid, snaps)
    return EXIT_OK


def cmd_run_kinetic(cfg, sc, out):
    if cfg.space_dim != 1:
        raise ConfigError("[grid] dim: the kinetic solver runs in one space dimension")
    grid = space_grid(cfg, 1)
    u0 = np.asarray(sc.initial(grid.centers()), dtype=float)
    for eps in cfg.eps:
        solver = KineticSolver(sc.kernels, sc.scaling, sc.sources, grid, eps)
        snaps = solver.run(u0, cfg.output_times)
        write_snapshots(out, f"kinetic_eps{fmt(eps)}", grid, snaps)
    return EXIT_OK


def cmd_sweep(cfg, sc, out):
    if cfg.space_dim != 1:
        raise ConfigError("[grid] dim: sweeps run in one space dimension")
    rep = epsilon_sweep(sc, cfg.eps, space_grid(cfg, 1), cfg.T)
    rep.write(out)
    sys.stdout.write(rep.summary())
    return EXIT_OK if rep.passed else EXIT_INVALID


HANDLERS = {
    "derive": cmd_derive,
    "validate": cmd_validate,
    "run-macro": cmd_run_macro,
    "run-kinetic": cmd_run_kinetic,
    "sweep": cmd_sweep,
}


def dispatch(command: str, cfg: RunConfig, out: str | None = None) -> int:
    """Run one subcommand; returns the exit status."""
    if command not in HANDLERS:
        log.error("unknown command %r", command)
        return EXIT_INVALID
    out = out or cfg.out
    try:
        sc = build_scenario(cfg)
        os.makedirs(out, exist_ok=True)
        _write(os.path.join(out, "config.ini"), emit_config(replace(cfg, out=out)))
        return HANDLERS[command](cfg, sc, out)
    except (ConfigError, ParameterError, DerivationError, ValueError) as exc:
        if isinstance(exc, (KernelError, SourceError)):
            log.error("numerical failure: %s", exc)
            return EXIT_NUMERIC
        log.error("%s", exc)
        return EXIT_INVALID
    except (MacroError, KineticError, SweepError, FloatingPointError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hilbertkin", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="run configuration (INI); defaults to the heat scenario")
    ap.add_argument("--out", help="output directory (overrides [output] dir)")
    ap.add_argument("--eps", help="comma-separated eps list (overrides [sweep] eps)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        text = ""
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        cfg = parse_config(text)
        if args.eps:
            cfg = cfg.with_eps(parse_eps(args.eps))
    except (OSError, ConfigError) as exc:
        log.error("%s", exc)
        return EXIT_INVALID
    return dispatch(args.command, cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
