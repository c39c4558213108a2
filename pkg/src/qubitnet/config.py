"""Experiment configuration: flat key=value files, flag overrides, presets.

Angles in configs are written in units of pi ("0.5" means pi/2) to avoid
decimal-radian transcription errors. Graphs are either an edge-list file path
or a generator spec complete:N | ring:N | path:N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

from .errors import ConfigError
from .graph import NetworkGraph, complete_graph, path_graph, read_edge_list, ring_graph
from .planner import DEFAULT_BUDGET, DEFAULT_MAX_ITERS, DEFAULT_VI_TOL
from .qstate import canonicalize_state

MODES = ("simulate", "plan-finite", "plan-infinite", "density", "spectrum", "verify")


@dataclass
class ExperimentConfig:
    mode: str
    graph: str | None = None
    init: str | None = None  # comma list, units of pi
    horizon: int = 1000
    trials: int = 1
    seed: int = 1
    eps: float = 1e-9
    k: int | None = None
    t: int | None = None
    power: int = 2
    budget: int = DEFAULT_BUDGET
    vi_tol: float = DEFAULT_VI_TOL
    max_iters: int = DEFAULT_MAX_ITERS
    out: str = "out"
    save_trajectories: bool = True
    workers: int = 1
    init_angles: tuple[float, ...] = field(default=(), repr=False)

    def build_graph(self) -> NetworkGraph:
        if self.graph is None:
            raise ConfigError(f"mode {self.mode} requires a graph")
        return parse_graph_spec(self.graph)


# keys accepted in config files and their parsers
def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_KEY_TYPES = {
    "mode": str,
    "graph": str,
    "init": str,
    "horizon": int,
    "trials": int,
    "seed": int,
    "eps": float,
    "k": int,
    "t": int,
    "power": int,
    "budget": int,
    "vi_tol": float,
    "max_iters": int,
    "out": str,
    "save_trajectories": _parse_bool,
    "workers": int,
}

# built-in experiment presets (six-node complete graph, half the qubits at 0
# and half at pi/2; plus the matching expected-density run)
PRESETS: dict[str, dict] = {
    "k6-sample": {
        "mode": "simulate",
        "graph": "complete:6",
        "init": "0,0,0,0.5,0.5,0.5",
        "horizon": 2000,
        "trials": 1,
        "seed": 1,
        "eps": 1e-9,
    },
    "k6-mean": {
        "mode": "simulate",
        "graph": "complete:6",
        "init": "0,0,0,0.5,0.5,0.5",
        "horizon": 150,
        "trials": 10000,
        "seed": 1,
        "eps": 1e-9,
        "save_trajectories": False,
    },
    "k6-deviation": {
        "mode": "density",
        "graph": "complete:6",
        "init": "0,0,0,0.5,0.5,0.5",
        "horizon": 50,
    },
    "verify": {"mode": "verify"},
}


def parse_init(text: str) -> tuple[float, ...]:
    """Parse a comma list of angles in units of pi into canonical radians."""
    angles = []
    for pos, token in enumerate(text.split(","), start=1):
        token = token.strip()
        try:
            value = float(token)
        except ValueError:
            raise ConfigError(f"malformed angle {token!r} at position {pos} in init")
        if not math.isfinite(value):
            raise ConfigError(f"non-finite angle {token!r} at position {pos} in init")
        angles.append(canonicalize_state(value * math.pi))
    return tuple(angles)


def parse_graph_spec(spec: str) -> NetworkGraph:
    """Build a graph from complete:N | ring:N | path:N or an edge-list path."""
    if ":" in spec:
        kind, _, count = spec.partition(":")
        if kind in ("complete", "ring", "path"):
            try:
                n = int(count)
            except ValueError:
                raise ConfigError(f"bad node count in graph spec {spec!r}")
            maker = {"complete": complete_graph, "ring": ring_graph, "path": path_graph}[kind]
            return maker(n)
        raise ConfigError(f"unknown graph generator {kind!r} (use complete/ring/path or a file)")
    return read_edge_list(spec)


def load_config_file(path: str) -> dict:
    """Read a flat key=value file; '#' comments; unknown keys rejected."""
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, text = line.partition("=")
            key = key.strip()
            text = text.strip()
            if key not in _KEY_TYPES:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            try:
                values[key] = _KEY_TYPES[key](text)
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: bad value {text!r} for key {key!r}")
    return values


_REQUIRED = {
    "simulate": ("graph", "init"),
    "density": ("graph", "init"),
    "plan-finite": ("init", "k", "t"),
    "plan-infinite": ("init", "k"),
    "spectrum": ("graph",),
    "verify": (),
}


def build_config(mode: str, file_values: dict | None = None, flag_values: dict | None = None) -> ExperimentConfig:
    """Merge preset/file values with flag overrides and validate per mode."""
    merged: dict = {}
    for source in (file_values or {}, flag_values or {}):
        for key, value in source.items():
            if value is not None:
                merged[key] = value
    merged["mode"] = mode
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")

    known = {f.name for f in fields(ExperimentConfig)}
    for key in merged:
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
    cfg = ExperimentConfig(**merged)

    for name in _REQUIRED[mode]:
        if getattr(cfg, name) is None:
            raise ConfigError(f"mode {mode} requires {name!r}")
    if cfg.trials < 1:
        raise ConfigError(f"trials must be >= 1, got {cfg.trials}")
    if cfg.horizon < 0:
        raise ConfigError(f"horizon must be >= 0, got {cfg.horizon}")
    if cfg.eps <= 0:
        raise ConfigError(f"eps must be positive, got {cfg.eps}")
    if cfg.power not in (1, 2):
        raise ConfigError(f"power must be 1 or 2, got {cfg.power}")
    if cfg.workers < 1:
        raise ConfigError(f"workers must be >= 1, got {cfg.workers}")
    if not (0 <= cfg.seed < 2**64):
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {cfg.seed}")

    if cfg.init is not None:
        cfg.init_angles = parse_init(cfg.init)
        if cfg.graph is not None:
            n = cfg.build_graph().node_count
            if len(cfg.init_angles) != n:
                raise ConfigError(
                    f"initial state has {len(cfg.init_angles)} angles but graph has {n} nodes"
                )
    return cfg
