"""Small argument checks used across the package."""
from __future__ import annotations

import math
from numbers import Integral, Real

import numpy as np
from sklearn.utils import check_array

from .errors import InputError


def check_positive(value, name: str, strict: bool = True) -> float:
    if not isinstance(value, Real) or isinstance(value, bool) or not math.isfinite(value):
        raise InputError(f"{name} must be a finite real number, got {value!r}")
    if (strict and value <= 0) or (not strict and value < 0):
        raise InputError(f"{name} must be {'positive' if strict else 'non-negative'}, got {value!r}")
    return float(value)


def check_in_range(value, name: str, lo: float, hi: float, closed: bool = True) -> float:
    if not isinstance(value, Real) or isinstance(value, bool) or not math.isfinite(value):
        raise InputError(f"{name} must be a finite real number, got {value!r}")
    ok = lo <= value <= hi if closed else lo < value < hi
    if not ok:
        raise InputError(f"{name}={value!r} outside {'[' if closed else '('}{lo}, {hi}{']' if closed else ')'}")
    return float(value)


def check_int(value, name: str, minimum: int | None = None) -> int:
    if not isinstance(value, Integral) or isinstance(value, bool):
        raise InputError(f"{name} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise InputError(f"{name} must be >= {minimum}, got {value!r}")
    return int(value)


def check_dim(d) -> int:
    d = check_int(d, "d", 1)
    if d > 2:
        raise InputError(f"only d in {{1, 2}} is supported, got d={d}")
    return d


def check_shell_range(shell_range, name: str = "shell_range") -> tuple[int, int]:
    try:
        lo, hi = shell_range
    except (TypeError, ValueError):
        raise InputError(f"{name} must be a pair (n_min, n_max)") from None
    lo = check_int(lo, f"{name}[0]", 0)
    hi = check_int(hi, f"{name}[1]", 0)
    if hi < lo:
        raise InputError(f"{name}: n_max={hi} < n_min={lo}")
    return lo, hi


def check_samples(x, name: str = "samples", ndim: int = 1) -> np.ndarray:
    """Finite float array of the requested dimensionality."""
    try:
        arr = check_array(np.asarray(x, dtype=float).reshape(-1, 1) if ndim == 1 else x,
                          ensure_2d=True, dtype=np.float64, ensure_all_finite=True)
    except ValueError as exc:
        raise InputError(f"{name}: {exc}") from None
    return arr.ravel() if ndim == 1 else arr


def check_grid(values, name: str, increasing: bool = True) -> np.ndarray:
    arr = check_samples(values, name)
    if arr.size == 0:
        raise InputError(f"{name} is empty")
    if increasing and np.any(np.diff(arr) <= 0):
        raise InputError(f"{name} must be strictly increasing")
    return arr
