"""Model configurations shared by the moment and spectrum labs."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from ._validation import check_dim, check_positive
from .errors import InputError
from .simulators.heat import (GaussianBump, NoiseSpec, SchemeSpec, SigmaSpec, solve_pam_colored,
                              solve_she_1d)
from .simulators.linear_she import sample_linear_she
from .simulators.processes import simulate_bm, simulate_ou

MODELS = ("bm", "ou", "linear_she", "pam", "she", "colored")


@dataclass(frozen=True)
class ModelConfig:
    """One simulated process and its discretization.

    Parameters
    ----------
    model : {"bm", "ou", "linear_she", "pam", "she", "colored"}
        ``pam`` is ``sigma(u) = c u`` under the exponential scheme; ``she``
        is a general ``sigma`` under explicit Euler.
    t : float
        Field time for the SPDE models.
    dt : float, optional
        Path step for ``bm``/``ou`` (default 0.25), time step otherwise
        (default the stability limit ``dx^2 / (2 d)``).
    dx : float
        Space step of the SPDE models.
    sigma : SigmaSpec
        Nonlinearity (``pam`` uses ``sigma.c``).
    bump : GaussianBump
        Colored-noise kernel.
    d : int
        Space dimension for ``colored``.
    """

    model: str
    t: float = 1.0
    dt: float | None = None
    dx: float = 0.25
    sigma: SigmaSpec = field(default_factory=SigmaSpec)
    bump: GaussianBump = field(default_factory=GaussianBump)
    d: int = 1

    def __post_init__(self):
        if self.model not in MODELS:
            raise InputError(f"unknown model {self.model!r}; expected one of {MODELS}")
        check_positive(self.t, "t")
        if self.dt is None:
            dt = 0.25 if self.model in ("bm", "ou") else self.dx ** 2 / (2 * self.d)
            object.__setattr__(self, "dt", dt)
        check_positive(self.dt, "dt")
        check_positive(self.dx, "dx")
        check_dim(self.d)
        if self.model in ("bm", "ou") and self.dt > 1:
            raise InputError("path step dt must be <= 1")
        if self.model in ("pam", "she", "colored", "linear_she") and self.dx > 1:
            raise InputError("dx must be <= 1 so every unit cell holds a sample")
        if self.model == "pam" and self.sigma.kind != "linear":
            raise InputError("pam needs a linear sigma; use model 'she' for other nonlinearities")
        if self.model in ("pam", "she"):
            self.scheme.check_stability(1)
        if self.model == "colored":
            self.scheme.check_stability(self.d)

    @property
    def scheme(self) -> SchemeSpec:
        name = "explicit_euler" if self.model == "she" else "exp_multiplicative"
        sigma = self.sigma if self.model != "colored" else SigmaSpec()
        return SchemeSpec(name, self.dt, self.dx, sigma)

    @property
    def dim(self) -> int:
        return self.d if self.model == "colored" else 1

    @property
    def gauge_model(self) -> str:
        return {"pam": "pam", "she": "pam"}.get(self.model, self.model)

    def to_dict(self) -> dict:
        out = {"model": self.model, "t": self.t, "dt": self.dt, "dx": self.dx, "d": self.d,
               "sigma": {"kind": self.sigma.kind, "c": self.sigma.c, "ell": self.sigma.ell,
                         "L": self.sigma.L, "u_nodes": list(self.sigma.u_nodes),
                         "s_nodes": list(self.sigma.s_nodes)},
               "bump": {"amplitude": self.bump.amplitude, "width": self.bump.width,
                        "truncation": self.bump.truncation}}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        data = dict(data)
        sig = data.pop("sigma", None)
        bump = data.pop("bump", None)
        if sig is not None:
            sig = dict(sig)
            sig["u_nodes"] = tuple(sig.get("u_nodes", ()))
            sig["s_nodes"] = tuple(sig.get("s_nodes", ()))
            data["sigma"] = SigmaSpec(**sig)
        if bump is not None:
            data["bump"] = GaussianBump(**bump)
        return cls(**data)


def simulate(cfg: ModelConfig, extent: float, seed: int, replica: int = 0, times=None) -> list:
    """Simulate ``cfg`` over ``[0, extent)`` (space, or time for paths).

    Returns
    -------
    list
        One TrajectoryGrid for paths, one Field per requested time otherwise
        (``times`` defaults to ``[cfg.t]``).
    """
    extent = check_positive(extent, "extent")
    if cfg.model == "bm":
        return [simulate_bm(extent, cfg.dt, seed, replica)]
    if cfg.model == "ou":
        return [simulate_ou(extent, cfg.dt, seed, replica)]
    if cfg.model == "linear_she":
        ts = [cfg.t] if times is None else list(times)
        return [sample_linear_she(t, extent, cfg.dx, seed, replica=replica * 4096 + i)
                for i, t in enumerate(ts)]
    t_end = cfg.t if times is None else float(max(times))
    if cfg.model in ("pam", "she"):
        return solve_she_1d(cfg.scheme, NoiseSpec(), t_end, extent, seed, times=times, replica=replica)
    return solve_pam_colored(cfg.d, NoiseSpec("colored", cfg.bump), cfg.dt, cfg.dx, t_end, extent,
                             seed, times=times, replica=replica)


def default_extent(cfg: ModelConfig, n_max: int) -> float:
    """Extent reaching the outer edge of shell ``n_max``."""
    return math.exp(n_max)
