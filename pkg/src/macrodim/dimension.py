"""Macroscopic dimension estimators, densities, Frostman bounds and fixtures.

The Hausdorff estimator replaces the summability threshold of the shell
contents by a regression root.  For each ``rho`` the slope ``s(rho)`` of
``log nu^n_rho`` against ``n`` is fitted over the occupied shells; for sets
with ``nu^n_rho ~ e^{n (D - rho)}`` on ``rho > D`` and ``~ const`` below,
``s`` is a hockey stick ``min(0, D - rho)``.  Its flat part makes the
literal zero crossing ill-posed, so the root is taken at the level
``s = -slope_tol`` and shifted back by ``slope_tol``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from ._validation import check_grid, check_in_range, check_positive, check_shell_range
from .content import shell_content
from .errors import InputError, InsufficientDataError
from .shells import (PixelSet, Progression, _check_budget, _edges,
                     _merge_runs, build_skeleton, pixelize, Points)

DEFAULT_SLOPE_TOL = 0.05
RHO_STEP = 0.025
MIN_SHELLS = 4


@dataclass
class DimensionEstimate:
    """Estimated macroscopic dimension with fit diagnostics.

    Attributes
    ----------
    value : float
        Estimate in ``[0, d]``, or ``-1`` when the set looks bounded.
    method : str
        ``"hausdorff"``, ``"lower_hausdorff"`` or ``"minkowski"``.
    n_min, n_max : int
        Requested shell range.
    stderr : float
    bounded : bool
    shells : ndarray
        Occupied shells used in the fit.
    counts : ndarray
        Occupied cells per used shell.
    slopes : dict
        ``rho -> (slope, stderr)`` for every evaluated exponent
        (Minkowski: ``{nan: (slope, stderr)}``).
    exact : bool
        Whether every content entering the fit was certified optimal.
    """

    value: float
    method: str
    n_min: int
    n_max: int
    stderr: float = 0.0
    bounded: bool = False
    shells: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    counts: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    slopes: dict = field(default_factory=dict)
    exact: bool = True
    note: str = ""


def _occupied(pixels: PixelSet, n_min: int, n_max: int):
    shells = np.array([n for n in pixels.shells() if n_min <= n <= n_max], dtype=np.int64)
    counts = np.array([pixels.count(int(n)) for n in shells], dtype=np.int64)
    return shells, counts


def _bounded(method, n_min, n_max, shells, counts, note):
    return DimensionEstimate(-1.0, method, n_min, n_max, 0.0, True, shells, counts, note=note)


def _screen(pixels: PixelSet, shell_range, method):
    n_min, n_max = check_shell_range(shell_range) if shell_range is not None else (
        (min(pixels.shells()), max(pixels.shells())) if not pixels.is_empty() else (0, 0))
    shells, counts = _occupied(pixels, n_min, n_max)
    if shells.size == 0:
        return n_min, n_max, shells, counts, _bounded(method, n_min, n_max, shells, counts, "no occupied shells")
    if shells[-1] < n_max - 2:
        return n_min, n_max, shells, counts, _bounded(
            method, n_min, n_max, shells, counts, f"occupancy stops at shell {shells[-1]}")
    if shells.size < MIN_SHELLS:
        raise InsufficientDataError(
            f"only {shells.size} occupied shells in [{n_min}, {n_max}]; need {MIN_SHELLS}")
    return n_min, n_max, shells, counts, None


def _slope(n, y, robust=False):
    if robust:
        res = stats.theilslopes(y, n)
        # Theil-Sen has no closed-form stderr; use the 95% band half width / 1.96
        return float(res.slope), float((res.high_slope - res.low_slope) / (2 * 1.96))
    fit = stats.linregress(n, y)
    return float(fit.slope), float(fit.stderr)


def dimm_estimate(pixels: PixelSet, shell_range=None) -> DimensionEstimate:
    """Macroscopic Minkowski dimension: slope of ``log N_n`` against ``n``.

    Parameters
    ----------
    pixels : PixelSet
    shell_range : (int, int), optional

    Returns
    -------
    DimensionEstimate
        Slope over occupied shells, clamped to ``[0, d]``.
    """
    n_min, n_max, shells, counts, early = _screen(pixels, shell_range, "minkowski")
    if early is not None:
        return early
    s, se = _slope(shells.astype(float), np.log(counts.astype(float)))
    val = float(np.clip(s, 0.0, pixels.d))
    return DimensionEstimate(val, "minkowski", n_min, n_max, se, False, shells, counts,
                             {math.nan: (s, se)}, True)


def dimh_estimate(pixels: PixelSet, rho_grid: Sequence[float] | None = None, shell_range=None,
                  min_side: float = 1.0, slope_tol: float = DEFAULT_SLOPE_TOL,
                  method: str = "hausdorff") -> DimensionEstimate:
    """Macroscopic Hausdorff dimension by the slope-root rule.

    Parameters
    ----------
    pixels : PixelSet
        Resolution-1 pixel set.
    rho_grid : sequence of float, optional
        Increasing exponents; default ``0.025, 0.05, ..., d``.  The grid is
        extended internally past ``d`` so a crossing near ``d`` is found.
    shell_range : (int, int), optional
        Inclusive shell range; default the occupied range.
    min_side : float
        Smallest box side ``c0``.
    slope_tol : float
        Level ``tau`` of the crossing ``s(rho) = -tau``.
    method : {"hausdorff", "lower_hausdorff"}
        ``"lower_hausdorff"`` uses a Theil-Sen slope, which tracks the bulk
        of the shells rather than their summability.

    Returns
    -------
    DimensionEstimate
    """
    if method not in ("hausdorff", "lower_hausdorff"):
        raise InputError(f"unknown method {method!r}")
    slope_tol = check_in_range(slope_tol, "slope_tol", 0.0, 1.0)
    d = pixels.d
    if rho_grid is None:
        grid = np.round(np.arange(1, int(round(d / RHO_STEP)) + 1) * RHO_STEP, 10)
    else:
        grid = check_grid(rho_grid, "rho_grid")
        if grid[0] <= 0:
            raise InputError("rho_grid must be positive")
    step = grid[-1] - grid[-2] if grid.size > 1 else RHO_STEP
    extra = grid[-1] + step * np.arange(1, int(math.ceil((slope_tol + 0.1) / step)) + 1)
    grid = np.r_[grid, extra]
    n_min, n_max, shells, counts, early = _screen(pixels, shell_range, method)
    if early is not None:
        return early
    nn = shells.astype(float)
    cache: dict[float, tuple[float, float]] = {}
    exact = True

    def slope_at(k: int) -> float:
        nonlocal exact
        rho = float(grid[k])
        if rho not in cache:
            logs = np.empty(shells.size)
            for i, n in enumerate(shells):
                sol = shell_content(pixels, int(n), rho, min_side)
                exact &= sol.exact
                logs[i] = math.log(sol.cost)
            cache[rho] = _slope(nn, logs, robust=method == "lower_hausdorff")
        return cache[rho][0]

    target = -slope_tol
    # s is non-increasing in rho; find the last grid index with s >= target
    if slope_at(0) < target:
        root_idx = -1
        rho_star = 0.0
    elif slope_at(grid.size - 1) >= target:
        rho_star = float(grid[-1])
        root_idx = grid.size - 1
    else:
        lo, hi = 0, grid.size - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if slope_at(mid) >= target:
                lo = mid
            else:
                hi = mid
        s0, s1 = slope_at(lo), slope_at(hi)
        w = (s0 - target) / (s0 - s1) if s0 != s1 else 0.0
        rho_star = float(grid[lo] + w * (grid[hi] - grid[lo]))
        root_idx = lo
    if root_idx >= 0:
        # slope stderr at the root; ds/drho is about -1 beyond the kink
        se = cache[float(grid[root_idx])][1]
    else:
        se = cache[float(grid[0])][1]
    val = float(np.clip(rho_star - slope_tol, 0.0, d))
    slopes = {k: v for k, v in sorted(cache.items())}
    return DimensionEstimate(val, method, n_min, n_max, float(se), False, shells, counts, slopes, exact)


# ----------------------------------------------------------------------
# density
# ----------------------------------------------------------------------
@dataclass
class DensityEstimate:
    """Window ratios ``nu(E cap W_t) / |W_t|`` and their tail supremum."""

    value: float
    windows: np.ndarray
    ratios: np.ndarray
    tail_start: float


def upper_density(data, windows, measure: str = "lebesgue", domain: str = "symmetric",
                  tail_start: float | None = None) -> DensityEstimate:
    """Finite-window surrogate of the upper density.

    Parameters
    ----------
    data : PixelSet or array_like
        A pixel set, or sample points (counting measure) in ``d = 1``.
    windows : sequence of float
        Increasing window half-widths ``t``.
    measure : {"lebesgue", "counting"}
        ``"lebesgue"`` integrates the union of cells; ``"counting"`` counts
        cells (or points) with corner in the window.
    domain : {"symmetric", "positive"}
        Window ``[-t, t]^d`` normalized by ``(2t)^d``, or ``[0, t]^d``
        normalized by ``t^d`` for sets living on the positive half-line.
    tail_start : float, optional
        The value is the max of the ratios over windows ``t >= tail_start``
        (default: all windows), so it never decreases when windows are
        appended.

    Returns
    -------
    DensityEstimate
    """
    t = check_grid(windows, "windows")
    if np.any(t <= 0):
        raise InputError("windows must be positive")
    if measure not in ("lebesgue", "counting") or domain not in ("symmetric", "positive"):
        raise InputError("measure must be lebesgue|counting and domain symmetric|positive")
    if isinstance(data, PixelSet):
        d = data.d
        lo = np.zeros_like(t) if domain == "positive" else -t
        if measure == "lebesgue":
            num = np.array([data.measure_in_window(a, b) for a, b in zip(lo, t)])
        else:
            num = np.array([data.count_in_window(a, b) for a, b in zip(lo, t)], dtype=float)
            num *= data.resolution ** d
    else:
        x = np.sort(np.asarray(data, dtype=float).ravel())
        d = 1
        if domain == "positive":
            num = (np.searchsorted(x, t, side="right") - np.searchsorted(x, 0.0, side="left")).astype(float)
        else:
            num = (np.searchsorted(x, t, side="right") - np.searchsorted(x, -t, side="left")).astype(float)
    size = t ** d if domain == "positive" else (2 * t) ** d
    ratios = num / size
    ts = t[0] if tail_start is None else float(tail_start)
    tail = ratios[t >= ts]
    value = float(tail.max()) if tail.size else math.nan
    return DensityEstimate(value, t, ratios, ts)


# ----------------------------------------------------------------------
# Frostman bound
# ----------------------------------------------------------------------
@dataclass
class FrostmanConstants:
    """Box-ratio constants ``sup mu(Q) / side(Q)^rho``.

    ``guaranteed`` is a valid upper bound on the sup over all boxes with
    side >= 1; ``restricted`` is the max over origin-aligned dyadic boxes
    (an under-estimate, for diagnostics); ``exact_intervals`` is set when
    the d = 1 integer-interval sup was computed, which equals the true sup
    for ``rho <= 1``.
    """

    guaranteed: float
    restricted: float
    exact_intervals: float | None


EXACT_HULL_LIMIT = 5000


def frostman_constants(cells, weights, rho: float, d: int = 1) -> FrostmanConstants:
    """Compute the box-ratio constants of a cell measure.

    Parameters
    ----------
    cells : ndarray of int, shape (m,) or (m, d)
    weights : ndarray, shape (m,)
        Mass of each cell, spread uniformly over it.
    rho : float
    d : {1, 2}
    """
    rho = check_positive(rho, "rho")
    z = np.asarray(cells, dtype=np.int64).reshape(-1, d)
    w = np.asarray(weights, dtype=float).ravel()
    if w.shape[0] != z.shape[0] or np.any(w < 0) or w.sum() <= 0:
        raise InputError("weights must be non-negative with positive total mass")
    extent = int((z.max(0) - z.min(0)).max()) + 1
    K = int(math.ceil(math.log2(extent))) + 1
    restricted = 0.0
    guaranteed = 0.0
    for k in range(0, K + 1):
        keys = z >> k
        if d == 1:
            _, inv = np.unique(keys[:, 0], return_inverse=True)
        else:
            _, inv = np.unique(keys, axis=0, return_inverse=True)
        Mk = float(np.bincount(inv.ravel(), weights=w).max())
        restricted = max(restricted, Mk / 2.0 ** (k * rho))
        # boxes with side in [2^(k-1), 2^k] (k >= 1) or exactly 1 (k = 0)
        # meet at most 2^d aligned boxes of side 2^k
        guaranteed = max(guaranteed, (2 ** d) * Mk / max(1.0, 2.0 ** (k - 1)) ** rho)
    exact = None
    if d == 1 and rho <= 1.0 and extent <= EXACT_HULL_LIMIT:
        lo = int(z.min())
        dense = np.zeros(extent)
        np.add.at(dense, z[:, 0] - lo, w)
        P = np.r_[0.0, np.cumsum(dense)]
        best = 0.0
        for ell in range(1, extent + 1):
            best = max(best, float((P[ell:] - P[:-ell]).max()) / ell ** rho)
        exact = best
        guaranteed = best
    return FrostmanConstants(guaranteed, restricted, exact)


def frostman_bound(mu, n: int, rho: float, weights=None) -> float:
    """Guaranteed Frostman lower bound on the content of shell ``n``.

    Parameters
    ----------
    mu : PixelSet or array of cells
        Support of the measure, all in shell ``n``.  A PixelSet carries unit
        mass per cell (Lebesgue measure on the cells).
    n : int
    rho : float
    weights : array_like, optional
        Cell masses when ``mu`` is an array of cells.

    Returns
    -------
    float
        ``mu(S_n) e^{-n rho} / K`` with ``K`` a guaranteed upper bound of
        ``sup mu(Q) / side(Q)^rho``.
    """
    if isinstance(mu, PixelSet):
        cells = mu.cells(n) if mu.count(n) else np.empty((0,), np.int64)
        d = mu.d
        if mu.total() != mu.count(n):
            raise InputError(f"measure support leaves shell {n}")
        w = np.ones(cells.shape[0])
    else:
        cells = np.asarray(mu, dtype=np.int64)
        d = 1 if cells.ndim == 1 else cells.shape[1]
        w = np.ones(cells.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    if cells.shape[0] == 0 or np.sum(w) <= 0:
        raise InputError("frostman_bound needs a measure with positive mass")
    consts = frostman_constants(cells, w, rho, d)
    return float(np.sum(w) * math.exp(-n * rho) / consts.guaranteed)


# ----------------------------------------------------------------------
# fixtures
# ----------------------------------------------------------------------
FIXTURE_KINDS = ("naturals", "exp_naturals", "full_lattice", "skeleton", "affine_image")


def _split_progression(start: float, step: float, count: int, n_min: int, n_max: int):
    """Split positive cells ``floor(start + j step)`` by shell, within a range."""
    lo, hi = _edges(1.0)
    out = {}
    j = 0
    while j < count:
        c = math.floor(start + j * step)
        n = int(np.searchsorted(hi, c, side="right"))
        if n >= hi.size:
            break
        # last j whose cell stays below hi[n]
        jmax = min(count - 1, math.ceil((hi[n] - start) / step) - 1)
        while jmax > j and math.floor(start + jmax * step) >= hi[n]:
            jmax -= 1
        while jmax + 1 < count and math.floor(start + (jmax + 1) * step) < hi[n]:
            jmax += 1
        if n > n_max:
            break
        if n >= n_min:
            out.setdefault(n, []).append(Progression(start + j * step, step, jmax - j + 1))
        j = jmax + 1
    return out


def _progressions_to_pixels(progs, shell_range, materialize: int = 100_000) -> PixelSet:
    n_min, n_max = shell_range
    parts: dict[int, tuple[list, list]] = {}
    for (start, step, count) in progs:
        for n, pieces in _split_progression(start, step, count, n_min, n_max).items():
            runs, keep = parts.setdefault(n, ([], []))
            for p in pieces:
                if p.count == 0:
                    continue
                if step == 1.0 and float(p.start).is_integer():
                    runs.append([[int(p.start), int(p.start) + p.count]])
                elif p.count <= materialize:
                    c = p.cells()
                    runs.append(np.stack([c, c + 1], axis=1))
                else:
                    keep.append(p)
    merged = {}
    for n, (runs, keep) in parts.items():
        arr = _merge_runs(np.concatenate(runs)) if runs else np.empty((0, 2), np.int64)
        merged[n] = (arr, tuple(keep))
    return PixelSet._from_parts(1, 1.0, merged)


def _base_progressions(kind: str, n_max: int, theta: float | None):
    if kind == "naturals":
        return [(1.0, 1.0, int(math.floor(math.exp(n_max))) + 1)]
    if kind == "exp_naturals":
        return [(math.exp(k), 1.0, 1) for k in range(1, n_max + 2)]
    if kind == "skeleton":
        if theta is None:
            raise InputError("skeleton fixture needs theta")
        sk = build_skeleton(theta, n_max)
        return [(p.start, p.step, p.count) for n, p in sk.levels.items()]
    raise InputError(f"unknown base kind {kind!r}")


def fixture_set(kind: str, shell_range, d: int = 1, theta: float | None = None,
                base: str | None = None, scale: float = 1.0, shift: float = 0.0) -> PixelSet:
    """Analytic point sets of known macroscopic dimension.

    Parameters
    ----------
    kind : {"naturals", "exp_naturals", "full_lattice", "skeleton", "affine_image"}
    shell_range : (int, int)
        Shells kept in the output.
    d : {1, 2}
        Only ``full_lattice`` and ``skeleton`` support ``d = 2``.
    theta : float, optional
        Skeleton parameter (also for an affine image of a skeleton).
    base : str, optional
        Base kind of an ``affine_image``.
    scale, shift : float
        Affine map ``x -> scale * x + shift`` with ``scale >= 1``.

    Returns
    -------
    PixelSet
    """
    n_min, n_max = check_shell_range(shell_range)
    if kind not in FIXTURE_KINDS:
        raise InputError(f"unknown fixture kind {kind!r}; expected one of {FIXTURE_KINDS}")
    if kind == "full_lattice":
        lo, hi = _edges(1.0)
        if d == 1:
            return PixelSet.from_runs([[lo[n_max], hi[n_max]]]).restrict(n_min, n_max)
        side = int(hi[n_max] - lo[n_max])
        _check_budget(side ** 2, "full_lattice d=2")
        g = np.arange(lo[n_max], hi[n_max])
        cells = np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)
        return PixelSet.from_cells(cells, 2).restrict(n_min, n_max)
    if d == 2:
        if kind != "skeleton":
            raise InputError(f"fixture {kind!r} is only defined for d = 1")
        sk = build_skeleton(theta, n_max, d=2)
        pts = [sk.points(n) for n in sk.levels if n + 1 >= n_min]
        return pixelize(Points(np.concatenate(pts)), 1.0).restrict(n_min, n_max)
    if kind == "affine_image":
        if base is None or base == "affine_image":
            raise InputError("affine_image needs a base kind")
        scale = check_positive(scale, "scale")
        if scale < 1.0:
            raise InputError("affine images need scale >= 1")
        # the image of shells up to n_max comes from base shells up to n_max
        progs = _base_progressions(base, n_max, theta)
        progs = [(scale * s + shift, scale * st, c) for s, st, c in progs]
        return _progressions_to_pixels(progs, (n_min, n_max))
    return _progressions_to_pixels(_base_progressions(kind, n_max, theta), (n_min, n_max))
