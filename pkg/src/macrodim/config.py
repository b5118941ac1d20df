"""Experiment configuration files.

Configs are TOML with dotted sections.  Every key is checked against the
schema below; unknown keys are an error, never silently ignored.

::

    [model]              # ModelConfig fields
    name = "ou"          # bm | ou | linear_she | pam | she | colored
    t = 1.0
    dt = 0.25
    dx = 0.25
    d = 1
    [model.sigma]        # kind, c, ell, L, u_nodes, s_nodes
    [model.bump]         # amplitude, width, truncation
    [grid]
    n_min = 3
    n_max = 15
    [run]
    gammas = [0.3, 0.5, 0.7, 0.9]
    replicas = 8
    seed = 42
    output = "runs/ou"
    [estimator]
    slope_tol = 0.05
    min_side = 1.0
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path

import toml

from .errors import ConfigError, MacrodimError
from .models import ModelConfig
from .simulators.heat import GaussianBump, SigmaSpec

SCHEMA = {
    "model": {"name", "t", "dt", "dx", "d", "sigma", "bump"},
    "model.sigma": {"kind", "c", "ell", "L", "u_nodes", "s_nodes"},
    "model.bump": {"amplitude", "width", "truncation"},
    "grid": {"n_min", "n_max"},
    "run": {"gammas", "replicas", "seed", "output"},
    "estimator": {"slope_tol", "min_side"},
}

DEFAULTS = {
    "grid": {"n_min": 3, "n_max": 15},
    "run": {"gammas": [0.3, 0.5, 0.7, 0.9], "replicas": 8, "seed": 0, "output": "run"},
    "estimator": {"min_side": 1.0},
}


def _unknown(data: dict) -> list[str]:
    bad = [k for k in data if k not in {s for s in SCHEMA if "." not in s}]
    for sec, keys in SCHEMA.items():
        node = data
        for part in sec.split("."):
            node = node.get(part, {}) if isinstance(node, dict) else {}
        if not isinstance(node, dict):
            bad.append(sec)
            continue
        bad += [f"{sec}.{k}" for k in node if k not in keys]
    return sorted(bad)


@dataclass
class ExperimentConfig:
    """Validated experiment description."""

    model: ModelConfig
    gammas: list = field(default_factory=lambda: [0.3, 0.5, 0.7, 0.9])
    n_min: int = 3
    n_max: int = 15
    replicas: int = 8
    seed: int = 0
    output: str = "run"
    slope_tol: float | None = None
    min_side: float = 1.0

    @property
    def shell_range(self) -> tuple[int, int]:
        return self.n_min, self.n_max

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        bad = _unknown(data)
        if bad:
            raise ConfigError(f"unknown config keys: {', '.join(bad)}")
        if "model" not in data or "name" not in data["model"]:
            raise ConfigError("config needs [model] with a name")
        m = copy.deepcopy(data["model"])
        kw = {"model": m.pop("name")}
        if "sigma" in m:
            s = m.pop("sigma")
            s["u_nodes"] = tuple(s.get("u_nodes", ()))
            s["s_nodes"] = tuple(s.get("s_nodes", ()))
            kw["sigma"] = SigmaSpec(**s)
        if "bump" in m:
            kw["bump"] = GaussianBump(**m.pop("bump"))
        kw.update(m)
        grid = {**DEFAULTS["grid"], **data.get("grid", {})}
        run = {**DEFAULTS["run"], **data.get("run", {})}
        est = {**DEFAULTS["estimator"], **data.get("estimator", {})}
        try:
            model = ModelConfig(**kw)
        except MacrodimError as exc:
            raise ConfigError(f"[model]: {exc}") from None
        cfg = cls(model, [float(g) for g in run["gammas"]], int(grid["n_min"]), int(grid["n_max"]),
                  int(run["replicas"]), int(run["seed"]), str(run["output"]),
                  est.get("slope_tol"), float(est["min_side"]))
        cfg.validate()
        return cfg

    def validate(self) -> None:
        """Check every downstream precondition before any simulation starts."""
        if not self.gammas or any(g <= 0 for g in self.gammas):
            raise ConfigError("run.gammas must be a nonempty list of positive levels")
        if sorted(self.gammas) != list(self.gammas) or len(set(self.gammas)) != len(self.gammas):
            raise ConfigError("run.gammas must be strictly increasing")
        if self.n_min < 0 or self.n_max - self.n_min + 1 < 4:
            raise ConfigError("grid needs n_min >= 0 and at least 4 shells")
        if self.replicas < 1:
            raise ConfigError("run.replicas must be >= 1")
        if self.seed < 0:
            raise ConfigError("run.seed must be non-negative")
        if self.min_side < 1:
            raise ConfigError("estimator.min_side must be >= 1")
        if self.slope_tol is not None and not 0 <= self.slope_tol <= 1:
            raise ConfigError("estimator.slope_tol must lie in [0, 1]")

    def to_dict(self) -> dict:
        md = self.model.to_dict()
        model = {"name": md["model"], "t": md["t"], "dt": md["dt"], "dx": md["dx"], "d": md["d"],
                 "sigma": md["sigma"], "bump": md["bump"]}
        est = {"min_side": self.min_side}
        if self.slope_tol is not None:
            est["slope_tol"] = self.slope_tol
        return {"model": model, "grid": {"n_min": self.n_min, "n_max": self.n_max},
                "run": {"gammas": list(self.gammas), "replicas": self.replicas, "seed": self.seed,
                        "output": self.output},
                "estimator": est}

    def dumps(self) -> str:
        return toml.dumps(self.to_dict())


def load_config(path) -> ExperimentConfig:
    try:
        data = toml.loads(Path(path).read_text())
    except (OSError, toml.TomlDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return ExperimentConfig.from_dict(data)
