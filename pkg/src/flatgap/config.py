"""Experiment configuration documents (YAML).

Grammar (every key optional unless noted; unknown keys are rejected)::

    problem:
      n: 3                 # integer >= 2
      epsilon: 0.01        # (0, 1/4); used by solve and ode
      a: 1.0               # > 0
      r0: 0.25             # [0, 1/2); 0 selects the convex control case
      gamma: 0.5           # (0, 1)
      remainder: 0.0       # coefficient of (r - r0)_+^(2 + gamma)
    mode:
      k: 1                 # >= 0
      i: 1                 # 1 <= i <= N(k)
    grid:
      nt: 17               # vertical nodes, >= 16
      h_max: 0.02          # (0, 0.25]
      ratio: 1.1           # [1, 2]
      h_min: null          # (0, h_max]; null means sqrt(eps)/8
      refine: 0            # 0..4 uniform halvings
    sweep:
      epsilons: [1.0e-2, 1.0e-3, 1.0e-4]   # distinct, strictly decreasing, each in (0, 1/4)
    output:
      dir: flatgap-out
      binary: false        # also write the field as a binary block
      timing: false        # record wall times (off keeps outputs byte-identical)
    oracles:
      three_d: false       # voxel check of single-mode preservation (n = 3, k = 1)
      manufactured: false  # manufactured-solution convergence study
    seed: 0                # probe jitter seed
    probe_jitter: 0.0      # [0, 0.5)
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from .geometry import ProblemConfig
from .harmonics import mode_count

__all__ = [
    "ConfigError",
    "GridSettings",
    "OutputSettings",
    "OracleSettings",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "dump_config",
]


class ConfigError(ValueError):
    """Malformed or out-of-range configuration; ``line`` is 1-based when known."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key, self.line = key, line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class GridSettings:
    nt: int = 17
    h_max: float = 0.02
    ratio: float = 1.1
    h_min: float | None = None
    refine: int = 0

    def radial_kw(self) -> dict:
        kw = {"h_max": self.h_max, "ratio": self.ratio}
        if self.h_min is not None:
            kw["h_min"] = self.h_min
        return kw


@dataclass(frozen=True)
class OutputSettings:
    dir: str = "flatgap-out"
    binary: bool = False
    timing: bool = False


@dataclass(frozen=True)
class OracleSettings:
    three_d: bool = False
    manufactured: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    problem: ProblemConfig
    remainder: float = 0.0
    grid: GridSettings = field(default_factory=GridSettings)
    epsilons: tuple = ()
    output: OutputSettings = field(default_factory=OutputSettings)
    oracles: OracleSettings = field(default_factory=OracleSettings)
    seed: int = 0
    probe_jitter: float = 0.0

    def to_dict(self) -> dict:
        p = self.problem
        return {
            "problem": {"n": p.n, "epsilon": p.epsilon, "a": p.a, "r0": p.r0,
                        "gamma": p.gamma, "remainder": self.remainder},
            "mode": {"k": p.mode_k, "i": p.mode_i},
            "grid": asdict(self.grid),
            "sweep": {"epsilons": list(self.epsilons)},
            "output": asdict(self.output),
            "oracles": asdict(self.oracles),
            "seed": self.seed,
            "probe_jitter": self.probe_jitter,
        }


_SCHEMA = {
    "problem": {"n", "epsilon", "a", "r0", "gamma", "remainder"},
    "mode": {"k", "i"},
    "grid": {f.name for f in fields(GridSettings)},
    "sweep": {"epsilons"},
    "output": {f.name for f in fields(OutputSettings)},
    "oracles": {f.name for f in fields(OracleSettings)},
    "seed": None,
    "probe_jitter": None,
}


def _line_map(text: str) -> dict:
    """Key path -> 1-based line, rejecting duplicate keys on the way."""
    lines = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"invalid YAML: {getattr(exc, 'problem', exc)}",
                          line=mark.line + 1 if mark else None) from exc

    def walk(node, prefix):
        if not isinstance(node, yaml.MappingNode):
            return
        seen = set()
        for knode, vnode in node.value:
            key = f"{prefix}{knode.value}"
            if key in seen:
                raise ConfigError("duplicate key", key, knode.start_mark.line + 1)
            seen.add(key)
            lines[key] = knode.start_mark.line + 1
            walk(vnode, key + ".")

    if root is not None:
        walk(root, "")
    return lines


def _num(sec: dict, key: str, path: str, lines: dict, default, kind=float, check=None, msg=""):
    if key not in sec or sec[key] is None and default is None:
        return default
    val = sec[key]
    line = lines.get(path)
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"expected a number, got {val!r}", path, line)
    if kind is int:
        if isinstance(val, float) and not val.is_integer():
            raise ConfigError(f"expected an integer, got {val!r}", path, line)
        val = int(val)
    else:
        val = float(val)
        if not math.isfinite(val):
            raise ConfigError("must be finite", path, line)
    if check is not None and not check(val):
        raise ConfigError(msg, path, line)
    return val


def _flag(sec: dict, key: str, path: str, lines: dict, default: bool) -> bool:
    if key not in sec:
        return default
    if not isinstance(sec[key], bool):
        raise ConfigError(f"expected true/false, got {sec[key]!r}", path, lines.get(path))
    return sec[key]


def _epsilon_check(path: str, lines: dict, e: float):
    if not e > 0.0:
        raise ConfigError("epsilon must be > 0", path, lines.get(path))
    if not e < 0.25:
        raise ConfigError("epsilon must be < 1/4", path, lines.get(path))


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a configuration document."""
    lines = _line_map(text)
    doc = yaml.safe_load(text) or {}
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a mapping", line=1)
    for key, val in doc.items():
        if key not in _SCHEMA:
            raise ConfigError("unknown key", str(key), lines.get(str(key)))
        allowed = _SCHEMA[key]
        if allowed is None:
            continue
        if val is None:
            doc[key] = {}
            continue
        if not isinstance(val, dict):
            raise ConfigError("expected a mapping", key, lines.get(key))
        for sub in val:
            if sub not in allowed:
                path = f"{key}.{sub}"
                raise ConfigError("unknown key", path, lines.get(path))

    P, M, G = doc.get("problem", {}), doc.get("mode", {}), doc.get("grid", {})
    O, X, S = doc.get("output", {}), doc.get("oracles", {}), doc.get("sweep", {})

    n = _num(P, "n", "problem.n", lines, 3, int, lambda v: v >= 2, "n must be >= 2")
    eps = _num(P, "epsilon", "problem.epsilon", lines, 1e-2)
    _epsilon_check("problem.epsilon", lines, eps)
    a = _num(P, "a", "problem.a", lines, 1.0, float, lambda v: v > 0, "a must be > 0")
    r0 = _num(P, "r0", "problem.r0", lines, 0.25, float, lambda v: 0 <= v < 0.5,
              "r0 must be in [0, 1/2)")
    gamma = _num(P, "gamma", "problem.gamma", lines, 0.5, float, lambda v: 0 < v < 1,
                 "gamma must be in (0, 1)")
    rem = _num(P, "remainder", "problem.remainder", lines, 0.0)
    k = _num(M, "k", "mode.k", lines, 1, int, lambda v: v >= 0, "k must be >= 0")
    nk = mode_count(k, n)
    i = _num(M, "i", "mode.i", lines, 1, int, lambda v: 1 <= v <= nk,
             f"i must be in [1, {nk}] for k={k}, n={n}")
    problem = ProblemConfig(n=n, epsilon=eps, a=a, r0=r0, gamma=gamma, mode_k=k, mode_i=i)

    grid = GridSettings(
        nt=_num(G, "nt", "grid.nt", lines, 17, int, lambda v: v >= 16, "nt must be >= 16"),
        h_max=_num(G, "h_max", "grid.h_max", lines, 0.02, float, lambda v: 0 < v <= 0.25,
                   "h_max must be in (0, 1/4]"),
        ratio=_num(G, "ratio", "grid.ratio", lines, 1.1, float, lambda v: 1 <= v <= 2,
                   "ratio must be in [1, 2]"),
        h_min=_num(G, "h_min", "grid.h_min", lines, None, float, lambda v: v > 0,
                   "h_min must be > 0"),
        refine=_num(G, "refine", "grid.refine", lines, 0, int, lambda v: 0 <= v <= 4,
                    "refine must be in 0..4"),
    )

    eps_list = S.get("epsilons", [])
    if eps_list is None:
        eps_list = []
    if not isinstance(eps_list, list):
        raise ConfigError("expected a list", "sweep.epsilons", lines.get("sweep.epsilons"))
    vals = []
    for j, e in enumerate(eps_list):
        path = f"sweep.epsilons[{j}]"
        if isinstance(e, bool) or not isinstance(e, (int, float)):
            raise ConfigError(f"expected a number, got {e!r}", path, lines.get("sweep.epsilons"))
        _epsilon_check(path, {path: lines.get("sweep.epsilons")}, float(e))
        vals.append(float(e))
    if len(set(vals)) != len(vals):
        raise ConfigError("duplicate epsilon values", "sweep.epsilons", lines.get("sweep.epsilons"))
    if any(b >= a_ for a_, b in zip(vals, vals[1:])):
        raise ConfigError("epsilons must be strictly decreasing", "sweep.epsilons",
                          lines.get("sweep.epsilons"))

    out_dir = O.get("dir", OutputSettings.dir)
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError("expected a non-empty string", "output.dir", lines.get("output.dir"))
    output = OutputSettings(
        dir=out_dir,
        binary=_flag(O, "binary", "output.binary", lines, False),
        timing=_flag(O, "timing", "output.timing", lines, False),
    )
    oracles = OracleSettings(
        three_d=_flag(X, "three_d", "oracles.three_d", lines, False),
        manufactured=_flag(X, "manufactured", "oracles.manufactured", lines, False),
    )
    seed = _num(doc, "seed", "seed", lines, 0, int, lambda v: v >= 0, "seed must be >= 0")
    jitter = _num(doc, "probe_jitter", "probe_jitter", lines, 0.0, float,
                  lambda v: 0 <= v < 0.5, "probe_jitter must be in [0, 1/2)")
    return ExperimentConfig(problem, rem, grid, tuple(vals), output, oracles, seed, jitter)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}") from exc
    return parse_config(text)


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
