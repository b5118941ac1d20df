"""Gauge functions and pixelized tall-peak sets.

A tall peak at level ``gamma`` is a sample with
``transform(X) >= gamma * g(abscissa)``.  A unit cell is occupied when at
least one of its samples is a tall peak; samples whose abscissa is below the
gauge's start point are ignored.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._validation import check_positive
from .errors import InputError
from .rng import make_rng
from .shells import PixelSet
from .simulators.types import Field, TrajectoryGrid

GAUGE_KINDS = ("bm_lil", "sqrt_log", "log_two_thirds", "sqrt_log_colored")
TRANSFORMS = ("identity", "log", "signed")

_DEFAULT_START = {
    "bm_lil": math.exp(math.e),
    "sqrt_log": math.e,
    "log_two_thirds": math.exp(math.e),
    "sqrt_log_colored": math.exp(math.e),
}


@dataclass(frozen=True)
class GaugeSpec:
    """Named gauge ``g`` times a normalization constant.

    Parameters
    ----------
    kind : {"bm_lil", "sqrt_log", "log_two_thirds", "sqrt_log_colored"}
    norm : float
        Multiplicative constant.
    start : float, optional
        Smallest admissible abscissa; defaults to ``e`` for ``sqrt_log`` and
        ``e^e`` otherwise.
    """

    kind: str
    norm: float = 1.0
    start: float | None = None

    def __post_init__(self):
        if self.kind not in GAUGE_KINDS:
            raise InputError(f"unknown gauge {self.kind!r}; expected one of {GAUGE_KINDS}")
        check_positive(self.norm, "norm")
        if self.start is None:
            object.__setattr__(self, "start", _DEFAULT_START[self.kind])
        min_start = math.exp(math.e) if self.kind == "bm_lil" else math.e
        if self.start < min_start * (1 - 1e-12):
            raise InputError(f"start {self.start} too small for gauge {self.kind} (need >= {min_start:.4g})")

    def __call__(self, x):
        return gauge_eval(self, x)


def gauge_eval(gauge: GaugeSpec, x):
    """Evaluate the gauge at ``x`` (scalar or array) with ``x >= start``.

    Examples
    --------
    >>> round(float(gauge_eval(GaugeSpec("sqrt_log"), math.e ** 2)), 12)
    2.0
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr < gauge.start * (1 - 1e-12)):
        raise InputError(f"gauge {gauge.kind} evaluated below its start {gauge.start:.6g}")
    out = _raw(gauge.kind, arr) * gauge.norm
    return float(out) if np.ndim(x) == 0 else out


def _raw(kind: str, x: np.ndarray) -> np.ndarray:
    lx = np.log(x)
    if kind == "bm_lil":
        return np.sqrt(2 * x * np.log(lx))
    if kind == "sqrt_log":
        return np.sqrt(2 * lx)
    if kind == "log_two_thirds":
        return lx ** (2.0 / 3.0)
    return np.sqrt(lx)


def model_gauge(model: str, t: float = 1.0) -> tuple[GaugeSpec, str]:
    """Gauge and value transform used for a model's tall peaks.

    Returns
    -------
    (GaugeSpec, transform)
        ``bm``: ``(2 s log log s)^{1/2}``; ``ou``: ``(2 log t)^{1/2}``;
        ``linear_she``: ``(t/pi)^{1/4} (2 log x)^{1/2}``; PAM models: log of
        ``u`` against ``t^{1/3} (log x)^{2/3}``; ``colored``: log of ``u``
        against ``(t log |x|)^{1/2}``.
    """
    if model == "bm":
        return GaugeSpec("bm_lil"), "identity"
    if model == "ou":
        return GaugeSpec("sqrt_log", 1.0, math.e), "identity"
    if model == "linear_she":
        return GaugeSpec("sqrt_log", (t / math.pi) ** 0.25, math.exp(math.e)), "identity"
    if model in ("pam_white", "pam_exact", "pam"):
        return GaugeSpec("log_two_thirds", t ** (1 / 3)), "log"
    if model == "colored":
        return GaugeSpec("sqrt_log_colored", math.sqrt(t)), "log"
    raise InputError(f"no gauge registered for model {model!r}")


@dataclass(frozen=True)
class ExceedanceSpec:
    gauge: GaugeSpec
    gamma: float
    comparator: str = ">="

    def __post_init__(self):
        check_positive(self.gamma, "gamma")
        if self.comparator != ">=":
            raise InputError("only the '>=' comparator is supported")


def _apply(values: np.ndarray, transform: str) -> np.ndarray:
    if transform == "identity":
        return values
    if transform == "signed":
        return np.abs(values)
    if transform == "log":
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(values > 0, np.log(np.where(values > 0, values, 1.0)), -np.inf)
    raise InputError(f"unknown transform {transform!r}; expected one of {TRANSFORMS}")


def exceedance_pixels(data, spec: ExceedanceSpec, transform: str = "identity",
                      bridge_seed: int | None = None) -> PixelSet:
    """Pixelized tall-peak set of a path or field.

    Parameters
    ----------
    data : TrajectoryGrid or Field
        Grid step must be <= 1.
    spec : ExceedanceSpec
    transform : {"identity", "log", "signed"}
        ``"log"`` maps ``u`` to ``h = log u`` (non-positive values never
        exceed); ``"signed"`` uses ``|X|``.
    bridge_seed : int, optional
        For trajectories: also mark cells where a Brownian bridge between
        consecutive samples crosses the threshold, with crossing probability
        ``exp(-2 (a - x0)(a - x1) / dt)``.  Only meaningful for BM.

    Returns
    -------
    PixelSet
        Resolution-1 cells holding at least one exceeding sample.
    """
    if isinstance(data, TrajectoryGrid):
        if data.step > 1:
            raise InputError("grid step must be <= 1 so every unit cell holds a sample")
        x = data.times
        keep = x >= spec.gauge.start
        if not np.any(keep):
            warnings.warn("all samples lie below the gauge start; empty set", stacklevel=2)
            return PixelSet(1)
        i0 = int(np.argmax(keep))
        xs = x[i0:]
        vals = _apply(data.values[i0:], transform)
        thr = spec.gamma * _raw(spec.gauge.kind, xs) * spec.gauge.norm
        hit = vals >= thr
        if bridge_seed is not None:
            if transform != "identity":
                raise InputError("bridge correction needs the identity transform")
            a0 = thr[:-1] - vals[:-1]
            a1 = thr[1:] - vals[1:]
            below = (a0 > 0) & (a1 > 0)
            p = np.zeros_like(a0)
            p[below] = np.exp(-2 * a0[below] * a1[below] / data.step)
            u = make_rng(bridge_seed, "bridge").random(p.size)
            hit[:-1] |= u < p
        z = np.floor(xs[hit]).astype(np.int64)
        return PixelSet.from_cells(z, 1)
    if isinstance(data, Field):
        if data.dx > 1:
            raise InputError("grid step must be <= 1 so every unit cell holds a sample")
        if data.d == 1:
            x = data.coords(0)
            r = np.abs(x)
            vals = _apply(data.values, transform)
        else:
            X, Y = np.meshgrid(data.coords(0), data.coords(1), indexing="ij")
            x = np.stack([X.ravel(), Y.ravel()], axis=1)
            r = np.hypot(x[:, 0], x[:, 1])
            vals = _apply(data.values.ravel(), transform)
        keep = r >= spec.gauge.start
        if not np.any(keep):
            warnings.warn("all samples lie below the gauge start; empty set", stacklevel=2)
            return PixelSet(data.d)
        thr = np.full(r.shape, np.inf)
        thr[keep] = spec.gamma * _raw(spec.gauge.kind, r[keep]) * spec.gauge.norm
        hit = vals >= thr
        z = np.floor(x[hit]).astype(np.int64)
        return PixelSet.from_cells(z, data.d)
    raise InputError("data must be a TrajectoryGrid or Field")
