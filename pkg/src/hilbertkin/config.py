"""Sectioned key-value run configuration (INI syntax).

    [scenario]   name, model (derived | hand | path to a model file)
    [parameters] scenario parameters, see presets.PARAMETERS
    [velocity]   dim, radius, nodes
    [scaling]    q, b1, b2, b4 (override the scenario's scaling)
    [grid]       dim, cells, length, boundary
    [time]       T, outputs
    [sweep]      eps
    [output]     dir

Unknown sections and keys are rejected.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace

from .presets import PARAMETERS, ParameterError, resolve_params
from .turning import ScalingExponents


class ConfigError(ValueError):
    pass


DEFAULT_EPS = (0.2, 0.1, 0.05, 0.025)


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "heat"
    model: str = "derived"
    params: tuple = ()              # sorted (key, value) overrides
    velocity_dim: int = 2
    radius: float = 1.0
    nodes: int = 16
    q: int | None = None
    b: tuple = ()                   # sorted (species index, order) overrides
    space_dim: int = 1
    cells: int = 128
    length: float = 1.0
    boundary: str = "periodic"
    T: float = 0.1
    outputs: tuple = ()
    eps: tuple = DEFAULT_EPS
    out: str = "out"
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def dx(self) -> float:
        return self.length / self.cells

    @property
    def output_times(self) -> tuple:
        return self.outputs or (self.T,)

    def parameters(self) -> dict:
        return resolve_params(self.scenario, dict(self.params))

    def scaling(self, base: ScalingExponents) -> ScalingExponents:
        b = list(base.b)
        for i, bi in self.b:
            if i >= len(b):
                raise ConfigError(f"b{i + 1}: scenario {self.scenario} has only {len(b)} species")
            b[i] = bi
        q = base.q if self.q is None else self.q
        return ScalingExponents(q, tuple(b))

    def with_eps(self, eps) -> "RunConfig":
        return replace(self, eps=tuple(float(e) for e in eps))


_KEYS = {
    "scenario": {"name", "model"},
    "velocity": {"dim", "radius", "nodes"},
    "scaling": {"q", "b1", "b2", "b3", "b4"},
    "grid": {"dim", "cells", "dx", "length", "boundary"},
    "time": {"T", "outputs"},
    "sweep": {"eps"},
    "output": {"dir"},
}


def _float(section, key, text):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected a number, got {text!r}") from None


def _int(section, key, text):
    try:
        v = float(text)
    except ValueError:
        v = None
    if v is None or v != int(v):
        raise ConfigError(f"[{section}] {key}: expected an integer, got {text!r}")
    return int(v)


def _floats(section, key, text):
    items = [s.strip() for s in text.split(",") if s.strip()]
    if not items:
        raise ConfigError(f"[{section}] {key}: empty list")
    return tuple(_float(section, key, s) for s in items)


def parse_eps(text) -> tuple:
    eps = _floats("sweep", "eps", text)
    if any(e <= 0 for e in eps):
        raise ConfigError("[sweep] eps: values must be positive")
    return eps


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keep key case (T)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    sections = set(cp.sections())
    unknown = sections - set(_KEYS) - {"parameters"}
    if unknown:
        raise ConfigError(f"unknown section [{sorted(unknown)[0]}]")
    for sec in sections - {"parameters"}:
        for key in cp[sec]:
            if key not in _KEYS[sec]:
                raise ConfigError(f"[{sec}] unknown key {key!r}")

    kw = {}
    get = lambda s, k: cp[s][k] if s in cp and k in cp[s] else None  # noqa: E731
    name = get("scenario", "name") or "heat"
    if name not in PARAMETERS:
        raise ConfigError(f"[scenario] name: unknown scenario {name!r}")
    kw["scenario"] = name
    if get("scenario", "model") is not None:
        kw["model"] = get("scenario", "model").strip()

    params = {}
    if "parameters" in cp:
        for key, val in cp["parameters"].items():
            params[key] = _float("parameters", key, val)
    try:
        resolve_params(name, params)
    except ParameterError as exc:
        raise ConfigError(f"[parameters] {exc}") from None
    kw["params"] = tuple(sorted(params.items()))

    if get("velocity", "dim") is not None:
        kw["velocity_dim"] = _int("velocity", "dim", get("velocity", "dim"))
    if get("velocity", "radius") is not None:
        kw["radius"] = _float("velocity", "radius", get("velocity", "radius"))
        if not kw["radius"] > 0:
            raise ConfigError("[velocity] radius must be positive")
    if get("velocity", "nodes") is not None:
        kw["nodes"] = _int("velocity", "nodes", get("velocity", "nodes"))

    if get("scaling", "b3") is not None:
        raise ConfigError("[scaling] b3: species 3 admits no perturbation order")
    if get("scaling", "q") is not None:
        q = _int("scaling", "q", get("scaling", "q"))
        if q < 1:
            raise ConfigError("[scaling] q must be an integer >= 1")
        kw["q"] = q
    b = []
    for i in (0, 1, 3):
        v = get("scaling", f"b{i + 1}")
        if v is not None:
            bi = _int("scaling", f"b{i + 1}", v)
            if bi < 1:
                raise ConfigError(f"[scaling] b{i + 1} must be an integer >= 1")
            b.append((i, bi))
    kw["b"] = tuple(b)

    if get("grid", "dim") is not None:
        kw["space_dim"] = _int("grid", "dim", get("grid", "dim"))
        if kw["space_dim"] not in (1, 2):
            raise ConfigError("[grid] dim must be 1 or 2")
    length = _float("grid", "length", get("grid", "length")) if get("grid", "length") else 1.0
    if not length > 0:
        raise ConfigError("[grid] length must be positive")
    kw["length"] = length
    if get("grid", "cells") is not None and get("grid", "dx") is not None:
        raise ConfigError("[grid] give either cells or dx, not both")
    if get("grid", "cells") is not None:
        kw["cells"] = _int("grid", "cells", get("grid", "cells"))
    elif get("grid", "dx") is not None:
        dx = _float("grid", "dx", get("grid", "dx"))
        if not dx > 0:
            raise ConfigError("[grid] dx must be positive")
        n = length / dx
        if abs(n - round(n)) > 1e-9 * n:
            raise ConfigError("[grid] dx must divide the domain length")
        kw["cells"] = int(round(n))
    if kw.get("cells", 128) < 3:
        raise ConfigError("[grid] cells must be at least 3")
    if get("grid", "boundary") is not None:
        bc = get("grid", "boundary").strip()
        if bc not in ("periodic", "reflecting"):
            raise ConfigError("[grid] boundary must be periodic or reflecting")
        kw["boundary"] = bc

    if get("time", "T") is not None:
        kw["T"] = _float("time", "T", get("time", "T"))
    T = kw.get("T", 0.1)
    if not T > 0:
        raise ConfigError("[time] T must be positive")
    if get("time", "outputs") is not None:
        outs = _floats("time", "outputs", get("time", "outputs"))
        if any(t < 0 or t > T for t in outs):
            raise ConfigError("[time] outputs must lie in [0, T]")
        kw["outputs"] = tuple(sorted(outs))

    if get("sweep", "eps") is not None:
        kw["eps"] = parse_eps(get("sweep", "eps"))
    if get("output", "dir") is not None:
        kw["out"] = get("output", "dir").strip()
    return RunConfig(**kw)


def emit_config(cfg: RunConfig) -> str:
    """Inverse of parse_config; floats are written with repr so parsing is exact."""
    r = repr
    lines = ["[scenario]", f"name = {cfg.scenario}", f"model = {cfg.model}", ""]
    if cfg.params:
        lines.append("[parameters]")
        lines += [f"{k} = {r(float(v))}" for k, v in cfg.params]
        lines.append("")
    lines += ["[velocity]", f"dim = {cfg.velocity_dim}", f"radius = {r(float(cfg.radius))}",
              f"nodes = {cfg.nodes}", ""]
    sc = []
    if cfg.q is not None:
        sc.append(f"q = {cfg.q}")
    sc += [f"b{i + 1} = {bi}" for i, bi in cfg.b]
    if sc:
        lines += ["[scaling]"] + sc + [""]
    lines += ["[grid]", f"dim = {cfg.space_dim}", f"cells = {cfg.cells}",
              f"length = {r(float(cfg.length))}", f"boundary = {cfg.boundary}", ""]
    lines += ["[time]", f"T = {r(float(cfg.T))}"]
    if cfg.outputs:
        lines.append("outputs = " + ", ".join(r(float(t)) for t in cfg.outputs))
    lines += ["", "[sweep]", "eps = " + ", ".join(r(float(e)) for e in cfg.eps), ""]
    lines += ["[output]", f"dir = {cfg.out}", ""]
    return "\n".join(lines)
