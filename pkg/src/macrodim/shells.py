"""Shell decomposition, pixelization and theta-skeletons.

Shell ``n`` is ``V_n \\ V_{n-1}`` with ``V_n = [-e^n, e^n)^d`` and
``V_{-1} = {}``; a point belongs to the smallest ``n`` with
``x in V_n``.  Lattice cells ``z`` stand for the half-open boxes
``[r z, r z + r)`` and are assigned to the shell of their southwest corner.

In ``d = 1`` a :class:`PixelSet` stores each shell as sorted, disjoint,
non-adjacent integer runs ``[start, stop)``, so sets with ``10^13`` cells
(all integers up to ``e^30``) cost a few bytes.  Very large analytic
fixtures may additionally carry arithmetic progressions of isolated cells
that are only materialized on demand.
"""
from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass, field
from decimal import Decimal, getcontext
from functools import lru_cache
from typing import Sequence

import numpy as np

from ._validation import check_dim, check_in_range, check_int, check_positive
from .errors import InputError, ResourceError

#: Largest number of cells materialized as an explicit array.
MATERIALIZE_BUDGET = int(os.environ.get("MACRODIM_CELL_BUDGET", 20_000_000))

_INT_LIMIT = 2**62


# ----------------------------------------------------------------------
# exact shell edges
# ----------------------------------------------------------------------
@lru_cache(maxsize=None)
def _edges(resolution: float) -> tuple[np.ndarray, np.ndarray]:
    """Integer edges ``lo[n] = ceil(-e^n / r)`` and ``hi[n] = ceil(e^n / r)``.

    A lattice coordinate ``z`` has ``r z in [-e^n, e^n)`` iff
    ``lo[n] <= z < hi[n]``.  Computed with 60 significant digits so the
    ceilings are exact far beyond the int64 range.
    """
    ctx = getcontext().copy()
    ctx.prec = 60
    r = Decimal(resolution)
    lo, hi = [], []
    n = 0
    while True:
        en = ctx.exp(Decimal(n))
        up = ctx.divide(en, r)
        h = int(up.to_integral_value(rounding="ROUND_CEILING"))
        if h >= _INT_LIMIT:
            break
        lo.append(-int((up).to_integral_value(rounding="ROUND_FLOOR")))
        hi.append(h)
        n += 1
    return np.array(lo, dtype=np.int64), np.array(hi, dtype=np.int64)


def shell_bounds(n: int, resolution: float = 1.0) -> tuple[int, int]:
    """Integer range ``[lo, hi)`` of 1-D lattice coordinates inside ``V_n``."""
    lo, hi = _edges(float(resolution))
    if n >= hi.size:
        raise InputError(f"shell {n} exceeds the int64 lattice at resolution {resolution}")
    return int(lo[n]), int(hi[n])


def max_shell(resolution: float = 1.0) -> int:
    """Largest shell whose lattice coordinates fit in int64."""
    return _edges(float(resolution))[1].size - 1


def shell_of(x) -> int:
    """Shell index of a point.

    Parameters
    ----------
    x : float or sequence of float
        A point of ``R`` or ``R^d``.

    Returns
    -------
    int
        Smallest ``n`` with ``-e^n <= x_i < e^n`` for every coordinate.

    Examples
    --------
    >>> shell_of(12.0), shell_of((5.0, 60.0))
    (3, 5)
    """
    coords = np.atleast_1d(np.asarray(x, dtype=float))
    if coords.ndim != 1 or not np.all(np.isfinite(coords)):
        raise InputError(f"shell_of needs a finite point, got {x!r}")
    return max(_coord_shell(float(c)) for c in coords)


def _coord_shell(c: float) -> int:
    a = abs(c)
    if a < 1.0:
        return 0 if c >= -1.0 else 1
    n = max(0, int(math.floor(math.log(a))))
    # fix possible off-by-one from rounding in log
    while not (-math.exp(n) <= c < math.exp(n)):
        n += 1
    while n > 0 and -math.exp(n - 1) <= c < math.exp(n - 1):
        n -= 1
    return n


def shells_of_cells(z: np.ndarray, resolution: float = 1.0) -> np.ndarray:
    """Vectorized shell index of lattice cells (by southwest corner).

    Parameters
    ----------
    z : ndarray of int, shape (m,) or (m, d)
    resolution : float

    Returns
    -------
    ndarray of int64, shape (m,)
    """
    z = np.asarray(z, dtype=np.int64)
    lo, hi = _edges(float(resolution))
    if z.ndim == 1:
        z = z[:, None]
    out = np.zeros(z.shape[0], dtype=np.int64)
    for k in range(z.shape[1]):
        c = z[:, k]
        pos = c >= 0
        s = np.empty(c.shape, dtype=np.int64)
        s[pos] = np.searchsorted(hi, c[pos], side="right")
        s[~pos] = np.searchsorted(-lo, -c[~pos], side="left")
        np.maximum(out, s, out=out)
    if out.size and out.max() >= hi.size:
        raise InputError("cell coordinates exceed the supported lattice range")
    return out


# ----------------------------------------------------------------------
# geometry inputs
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class UprightBox:
    """Half-open cube ``prod [corner_i, corner_i + side)``."""

    corner: tuple[float, ...]
    side: float

    def __post_init__(self):
        object.__setattr__(self, "corner", tuple(float(c) for c in np.atleast_1d(self.corner)))
        check_positive(self.side, "side")

    @property
    def d(self) -> int:
        return len(self.corner)

    def contains(self, x) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        c = np.asarray(self.corner)
        return bool(np.all((c <= x) & (x < c + self.side)))


@dataclass(frozen=True)
class Points:
    """Finite point cloud, shape ``(m,)`` or ``(m, d)``."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        object.__setattr__(self, "coords", c)


@dataclass(frozen=True)
class Intervals:
    """Closed intervals ``[lo_i, hi_i]`` (``d = 1``)."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", np.atleast_1d(np.asarray(self.lo, dtype=float)))
        object.__setattr__(self, "hi", np.atleast_1d(np.asarray(self.hi, dtype=float)))
        if self.lo.shape != self.hi.shape or np.any(self.hi < self.lo):
            raise InputError("intervals need matching lo <= hi arrays")


@dataclass(frozen=True)
class Rectangles:
    """Closed axis-aligned rectangles with corners ``lo`` and ``hi``, shape (m, 2)."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_2d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_2d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.shape[1] != 2 or np.any(hi < lo):
            raise InputError("rectangles need matching (m, 2) lo <= hi arrays")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)


# ----------------------------------------------------------------------
# PixelSet
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class Progression:
    """Isolated cells ``floor(start + j * step)`` for ``j < count``.

    ``step >= 1`` keeps the cells distinct.
    """

    start: float
    step: float
    count: int

    def __post_init__(self):
        if self.step < 1.0 or self.count < 0:
            raise InputError("progression needs step >= 1 and count >= 0")

    @property
    def first(self) -> int:
        return int(math.floor(self.start))

    @property
    def last(self) -> int:
        return int(math.floor(self.start + (self.count - 1) * self.step))

    def cells(self) -> np.ndarray:
        _check_budget(self.count, "progression materialization")
        return np.floor(self.start + np.arange(self.count) * self.step).astype(np.int64)


def _check_budget(m: float, what: str) -> None:
    if m > MATERIALIZE_BUDGET:
        raise ResourceError(f"{what} needs too many cells", required=m, budget=MATERIALIZE_BUDGET)


def _merge_runs(runs: np.ndarray) -> np.ndarray:
    """Sort and merge overlapping or adjacent ``[start, stop)`` runs."""
    runs = np.asarray(runs, dtype=np.int64).reshape(-1, 2)
    runs = runs[runs[:, 1] > runs[:, 0]]
    if runs.shape[0] <= 1:
        return runs.copy()
    runs = runs[np.argsort(runs[:, 0], kind="stable")]
    reach = np.maximum.accumulate(runs[:, 1])
    new = np.ones(runs.shape[0], dtype=bool)
    new[1:] = runs[1:, 0] > reach[:-1]
    idx = np.flatnonzero(new)
    starts = runs[idx, 0]
    stops = reach[np.r_[idx[1:] - 1, runs.shape[0] - 1]]
    return np.stack([starts, stops], axis=1)


def _cells_to_runs(z: np.ndarray) -> np.ndarray:
    z = np.unique(np.asarray(z, dtype=np.int64))
    if z.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    brk = np.flatnonzero(np.diff(z) > 1)
    starts = z[np.r_[0, brk + 1]]
    stops = z[np.r_[brk, z.size - 1]] + 1
    return np.stack([starts, stops], axis=1)


def _runs_to_cells(runs: np.ndarray) -> np.ndarray:
    lengths = runs[:, 1] - runs[:, 0]
    total = int(lengths.sum())
    _check_budget(total, "run materialization")
    if total == 0:
        return np.empty(0, dtype=np.int64)
    offs = np.repeat(runs[:, 0] - np.r_[0, np.cumsum(lengths)[:-1]], lengths)
    return np.arange(total, dtype=np.int64) + offs


_EMPTY_RUNS = np.empty((0, 2), dtype=np.int64)


@dataclass(frozen=True)
class _Shell:
    array: np.ndarray  # runs (m, 2) in d=1, cells (m, 2) in d=2
    progressions: tuple[Progression, ...] = ()


class PixelSet:
    """Occupied lattice cells bucketed by shell.

    Use :meth:`from_cells`, :meth:`from_runs` or :func:`pixelize` to build
    one.  Instances are immutable.

    Parameters
    ----------
    d : {1, 2}
    resolution : float
        Cell side ``r``.
    """

    __slots__ = ("d", "resolution", "_shells")

    def __init__(self, d: int = 1, resolution: float = 1.0, _shells: dict | None = None):
        self.d = check_dim(d)
        self.resolution = check_positive(resolution, "resolution")
        self._shells: dict[int, _Shell] = dict(sorted((_shells or {}).items()))

    # -- construction --------------------------------------------------
    @classmethod
    def from_cells(cls, cells, d: int | None = None, resolution: float = 1.0) -> "PixelSet":
        """Build from integer lattice coordinates (duplicates allowed)."""
        z = np.asarray(cells)
        if z.size == 0:
            return cls(d or 1, resolution)
        if not np.issubdtype(z.dtype, np.integer):
            if not np.all(np.equal(np.mod(z, 1), 0)):
                raise InputError("cells must be integer coordinates")
        z = z.astype(np.int64)
        if d is None:
            d = 1 if z.ndim == 1 or z.shape[1] == 1 else z.shape[1]
        if d == 1:
            return cls.from_runs(_cells_to_runs(z.ravel()), resolution)
        z = z.reshape(-1, d)
        z = np.unique(z, axis=0)
        sh = shells_of_cells(z, resolution)
        order = np.lexsort((z[:, 1], z[:, 0], sh))
        z, sh = z[order], sh[order]
        cuts = np.flatnonzero(np.diff(sh)) + 1
        shells = {int(s[0]): _Shell(c) for s, c in zip(np.split(sh, cuts), np.split(z, cuts))}
        return cls(d, resolution, shells)

    @classmethod
    def from_runs(cls, runs, resolution: float = 1.0) -> "PixelSet":
        """Build a ``d = 1`` set from integer runs ``[start, stop)``."""
        runs = _merge_runs(runs)
        if runs.shape[0] == 0:
            return cls(1, resolution)
        lo, hi = _edges(float(resolution))
        edges = np.unique(np.r_[lo, hi])
        left = np.searchsorted(edges, runs[:, 0], side="right")
        right = np.searchsorted(edges, runs[:, 1], side="left")
        crossing = right > left
        pieces = [runs[~crossing]]
        for a, b, i, j in zip(runs[crossing, 0], runs[crossing, 1], left[crossing], right[crossing]):
            cuts = np.r_[a, edges[i:j], b]
            pieces.append(np.stack([cuts[:-1], cuts[1:]], axis=1))
        runs = np.concatenate(pieces)
        runs = runs[np.argsort(runs[:, 0], kind="stable")]
        sh = shells_of_cells(runs[:, 0], resolution)
        out: dict[int, list] = {}
        for s in np.unique(sh):
            out[int(s)] = _Shell(_merge_runs(runs[sh == s]))
        return cls(1, resolution, out)

    @classmethod
    def _from_parts(cls, d, resolution, parts: dict[int, tuple[np.ndarray, tuple]]) -> "PixelSet":
        return cls(d, resolution, {n: _Shell(a, tuple(p)) for n, (a, p) in parts.items()
                                   if a.shape[0] or any(q.count for q in p)})

    # -- access --------------------------------------------------------
    def shells(self) -> list[int]:
        """Sorted indices of non-empty shells."""
        return list(self._shells)

    def is_empty(self) -> bool:
        return not self._shells

    def count(self, n: int) -> int:
        """Number of occupied cells in shell ``n``."""
        sh = self._shells.get(n)
        if sh is None:
            return 0
        base = int((sh.array[:, 1] - sh.array[:, 0]).sum()) if self.d == 1 else sh.array.shape[0]
        return base + sum(p.count for p in sh.progressions)

    def total(self) -> int:
        return sum(self.count(n) for n in self._shells)

    def has_progressions(self, n: int) -> bool:
        sh = self._shells.get(n)
        return bool(sh and sh.progressions)

    def progressions(self, n: int) -> tuple[Progression, ...]:
        sh = self._shells.get(n)
        return sh.progressions if sh else ()

    def explicit_runs(self, n: int) -> np.ndarray:
        """Runs of shell ``n`` excluding progressions (``d = 1``)."""
        self._need_d1()
        sh = self._shells.get(n)
        return sh.array if sh else _EMPTY_RUNS

    def runs(self, n: int) -> np.ndarray:
        """All runs of shell ``n`` with progressions materialized (``d = 1``)."""
        self._need_d1()
        sh = self._shells.get(n)
        if sh is None:
            return _EMPTY_RUNS
        if not sh.progressions:
            return sh.array
        _check_budget(self.count(n), f"shell {n}")
        extra = [np.stack([c, c + 1], axis=1) for c in (p.cells() for p in sh.progressions)]
        return _merge_runs(np.concatenate([sh.array, *extra]))

    def cells(self, n: int) -> np.ndarray:
        """Cells of shell ``n``: shape (m,) in ``d = 1``, (m, 2) in ``d = 2``."""
        sh = self._shells.get(n)
        if sh is None:
            return np.empty((0,) if self.d == 1 else (0, 2), dtype=np.int64)
        if self.d == 1:
            return _runs_to_cells(self.runs(n))
        return sh.array

    def all_cells(self) -> np.ndarray:
        parts = [self.cells(n) for n in self._shells]
        if not parts:
            return np.empty((0,) if self.d == 1 else (0, 2), dtype=np.int64)
        return np.concatenate(parts)

    def _need_d1(self):
        if self.d != 1:
            raise InputError("operation only defined for d = 1 pixel sets")

    # -- set operations ------------------------------------------------
    def restrict(self, n_min: int, n_max: int) -> "PixelSet":
        """Sub-set made of shells ``n_min..n_max``."""
        return PixelSet(self.d, self.resolution,
                        {n: s for n, s in self._shells.items() if n_min <= n <= n_max})

    def union(self, other: "PixelSet") -> "PixelSet":
        self._compatible(other)
        if self.d == 1:
            runs = [self.runs(n) for n in self._shells] + [other.runs(n) for n in other._shells]
            return PixelSet.from_runs(np.concatenate(runs) if runs else _EMPTY_RUNS, self.resolution)
        cells = np.concatenate([self.all_cells(), other.all_cells()])
        return PixelSet.from_cells(cells, 2, self.resolution)

    def issubset(self, other: "PixelSet") -> bool:
        self._compatible(other)
        for n in self._shells:
            if self.d == 1:
                a, b = self.runs(n), other.runs(n)
                if b.shape[0] == 0:
                    return False
                idx = np.searchsorted(b[:, 0], a[:, 0], side="right") - 1
                if np.any(idx < 0) or np.any(b[np.maximum(idx, 0), 1] < a[:, 1]):
                    return False
            else:
                a, b = self.cells(n), other.cells(n)
                av = a.view([("x", np.int64), ("y", np.int64)]).ravel()
                bv = b.view([("x", np.int64), ("y", np.int64)]).ravel()
                if not np.all(np.isin(av, bv)):
                    return False
        return True

    def _compatible(self, other):
        if not isinstance(other, PixelSet) or other.d != self.d or other.resolution != self.resolution:
            raise InputError("pixel sets differ in dimension or resolution")

    def __eq__(self, other) -> bool:
        if not isinstance(other, PixelSet):
            return NotImplemented
        if (self.d, self.resolution, self.shells()) != (other.d, other.resolution, other.shells()):
            return False
        if self.d == 1:
            return all(np.array_equal(self.runs(n), other.runs(n)) for n in self._shells)
        return all(np.array_equal(self.cells(n), other.cells(n)) for n in self._shells)

    __hash__ = None

    def __repr__(self) -> str:
        return (f"PixelSet(d={self.d}, resolution={self.resolution}, "
                f"shells={len(self._shells)}, cells={self.total()})")

    # -- measures ------------------------------------------------------
    def measure_in_window(self, lo: float, hi: float) -> float:
        """Lebesgue measure of the union of cells intersected with ``[lo, hi]^d``."""
        r = self.resolution
        if self.d == 1:
            total = 0.0
            for n in self._shells:
                runs = self.runs(n).astype(float) * r
                total += float(np.clip(np.minimum(runs[:, 1], hi) - np.maximum(runs[:, 0], lo), 0, None).sum())
            return total
        c = self.all_cells().astype(float) * r
        w = np.clip(np.minimum(c + r, hi) - np.maximum(c, lo), 0, None)
        return float(np.prod(w, axis=1).sum())

    def count_in_window(self, lo: float, hi: float) -> int:
        """Number of cells whose corner ``r z`` lies in ``[lo, hi]^d``."""
        r = self.resolution
        if self.d == 1:
            zlo, zhi = math.ceil(lo / r), math.floor(hi / r)
            total = 0
            for n in self._shells:
                runs = self.runs(n)
                total += int(np.clip(np.minimum(runs[:, 1], zhi + 1) - np.maximum(runs[:, 0], zlo), 0, None).sum())
            return total
        c = self.all_cells() * r
        return int(np.sum(np.all((c >= lo) & (c <= hi), axis=1)))

    # -- serialization -------------------------------------------------
    def to_csv(self, path_or_buf) -> None:
        """Write ``shell,z_1[,z_2]`` rows after a ``# resolution=.. d=..`` header."""
        _check_budget(self.total(), "CSV export")
        own = isinstance(path_or_buf, (str, os.PathLike))
        fh = open(path_or_buf, "w", newline="") if own else path_or_buf
        try:
            fh.write(f"# resolution={self.resolution!r} d={self.d}\n")
            fh.write("shell,z_1\n" if self.d == 1 else "shell,z_1,z_2\n")
            for n in self._shells:
                c = self.cells(n).reshape(-1, self.d)
                block = np.column_stack([np.full(c.shape[0], n, dtype=np.int64), c])
                np.savetxt(fh, block, fmt="%d", delimiter=",")
        finally:
            if own:
                fh.close()

    @classmethod
    def from_csv(cls, path_or_buf) -> "PixelSet":
        own = isinstance(path_or_buf, (str, os.PathLike))
        fh = open(path_or_buf) if own else path_or_buf
        try:
            text = fh.read()
        finally:
            if own:
                fh.close()
        lines = text.splitlines()
        if not lines or not lines[0].startswith("#"):
            raise InputError("pixel CSV must start with '# resolution=<r> d=<d>'")
        meta = dict(tok.split("=", 1) for tok in lines[0][1:].split())
        try:
            r, d = float(meta["resolution"]), int(meta["d"])
        except (KeyError, ValueError):
            raise InputError(f"bad pixel CSV header: {lines[0]!r}") from None
        d = check_dim(d)
        body = [ln for ln in lines[1:] if ln.strip() and not ln.startswith("#")]
        if not body or body[0].split(",")[0].strip() != "shell":
            raise InputError("pixel CSV is missing the 'shell,z_1' column header")
        if len(body) == 1:
            return cls(d, r)
        data = np.loadtxt(io.StringIO("\n".join(body[1:])), delimiter=",", dtype=np.int64, ndmin=2)
        if data.shape[1] != d + 1:
            raise InputError(f"expected {d + 1} columns, found {data.shape[1]}")
        out = cls.from_cells(data[:, 1:] if d == 2 else data[:, 1], d, r)
        got = shells_of_cells(data[:, 1:], r)
        if np.any(got != data[:, 0]):
            raise InputError("shell column disagrees with cell coordinates")
        return out


# ----------------------------------------------------------------------
# pixelization
# ----------------------------------------------------------------------
def pixelize(geometry, resolution: float = 1.0, d: int | None = None) -> PixelSet:
    """Cells ``z`` whose box ``[r z, r z + r)`` meets the geometry.

    Parameters
    ----------
    geometry : Points, Intervals, Rectangles, UprightBox, array_like or list of these
        Bare arrays are read as point clouds. Intervals and rectangles are
        closed; upright boxes are half-open.
    resolution : float
        Cell side ``r``.
    d : int, optional
        Ambient dimension, needed only for empty input.

    Returns
    -------
    PixelSet
    """
    r = check_positive(resolution, "resolution")
    items = geometry if isinstance(geometry, (list, tuple)) and geometry and not np.isscalar(geometry[0]) else [geometry]
    runs, cells2 = [], []
    dims = set()
    for g in items:
        if isinstance(g, UprightBox):
            c = np.asarray(g.corner)
            lo = np.floor(c / r).astype(np.int64)
            hi = np.ceil((c + g.side) / r).astype(np.int64)  # exclusive
            dims.add(g.d)
            if g.d == 1:
                runs.append([[lo[0], hi[0]]])
            else:
                cells2.append(_grid_cells(lo, hi))
            continue
        if isinstance(g, Intervals):
            dims.add(1)
            lo = np.floor(g.lo / r)
            hi = np.floor(g.hi / r) + 1
            _finite(lo, hi)
            runs.append(np.stack([lo, hi], axis=1).astype(np.int64))
            continue
        if isinstance(g, Rectangles):
            dims.add(2)
            lo = np.floor(g.lo / r).astype(np.int64)
            hi = (np.floor(g.hi / r) + 1).astype(np.int64)
            for a, b in zip(lo, hi):
                cells2.append(_grid_cells(a, b))
            continue
        pts = g if isinstance(g, Points) else Points(np.asarray(g, dtype=float))
        if pts.coords.size == 0:
            continue
        _finite(pts.coords)
        z = np.floor(pts.coords / r).astype(np.int64)
        dims.add(z.shape[1])
        if z.shape[1] == 1:
            runs.append(np.stack([z[:, 0], z[:, 0] + 1], axis=1))
        else:
            cells2.append(z)
    if len(dims) > 1:
        raise InputError("geometry mixes dimensions")
    dd = dims.pop() if dims else (d or 1)
    if dd == 1:
        return PixelSet.from_runs(np.concatenate(runs) if runs else _EMPTY_RUNS, r)
    if dd != 2:
        raise InputError("only d in {1, 2} is supported")
    return PixelSet.from_cells(np.concatenate(cells2) if cells2 else np.empty((0, 2), np.int64), 2, r)


def _finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise InputError("geometry must be finite")


def _grid_cells(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    _check_budget(float(np.prod(hi - lo)), "rectangle pixelization")
    xs = np.arange(lo[0], hi[0])
    ys = np.arange(lo[1], hi[1])
    return np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1).reshape(-1, 2)


# ----------------------------------------------------------------------
# skeletons
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class Skeleton:
    """Theta-skeleton: near-optimal packings by boxes of side ``e^(theta n)``.

    Level ``n`` anchors are ``e^n + j e^(theta n)`` per coordinate with
    ``0 <= j < J_n = floor((e^(n+1) - e^n) / e^(theta n))``; in ``d = 2``
    the level is the product grid.  All level-``n`` boxes lie in
    ``[e^n, e^(n+1))^d``, i.e. in shell ``n + 1`` as returned by
    :func:`shell_of`.

    Attributes
    ----------
    theta, d, n_max : float, int, int
    start_shell : int
        First level ``N`` from which the cardinality bounds hold.
    a : float
        Constant in ``a e^(n d (1-theta)) <= |Pi_n| <= e^(n d (1-theta)) / a``.
    """

    theta: float
    d: int
    n_max: int
    start_shell: int
    a: float
    levels: dict = field(repr=False)

    def side(self, n: int) -> float:
        return math.exp(self.theta * n)

    def level(self, n: int) -> Progression:
        """Per-coordinate anchors of level ``n`` as a real progression."""
        if n not in self.levels:
            raise InputError(f"skeleton has no level {n} (levels {self.start_shell}..{self.n_max})")
        return self.levels[n]

    def anchors(self, n: int) -> np.ndarray:
        p = self.level(n)
        _check_budget(p.count, "skeleton anchors")
        return p.start + np.arange(p.count) * p.step

    def count(self, n: int) -> int:
        return self.level(n).count ** self.d

    def points(self, n: int) -> np.ndarray:
        """All level-``n`` points, shape (m,) or (m, 2)."""
        x = self.anchors(n)
        if self.d == 1:
            return x
        _check_budget(x.size ** 2, "skeleton points")
        return np.stack(np.meshgrid(x, x, indexing="ij"), axis=-1).reshape(-1, 2)


def _level_count(n: int, theta: float) -> int:
    return int(math.floor((math.exp(n + 1) - math.exp(n)) / math.exp(theta * n)))


def build_skeleton(theta: float, n_max: int, d: int = 1) -> Skeleton:
    """Construct the explicit theta-skeleton up to level ``n_max``.

    Parameters
    ----------
    theta : float in (0, 1)
    n_max : int
    d : {1, 2}

    Returns
    -------
    Skeleton
        With ``a = (e - 1)^(-d)``, the largest constant for which the upper
        cardinality bound holds at every level.
    """
    theta = check_in_range(theta, "theta", 0.0, 1.0, closed=False)
    n_max = check_int(n_max, "n_max", 0)
    d = check_dim(d)
    a = (math.e - 1.0) ** (-d)
    start = None
    levels = {}
    for n in range(n_max + 1):
        J = _level_count(n, theta)
        scale = math.exp(n * d * (1 - theta))
        ok = J >= 1 and a * scale <= J ** d <= scale / a
        if ok and start is None:
            start = n
        if start is not None:
            if not ok:
                raise AssertionError(f"skeleton cardinality bound fails at level {n}")
            levels[n] = Progression(math.exp(n), math.exp(theta * n), J)
    if start is None:
        raise InputError(f"n_max={n_max} is below the skeleton start level")
    return Skeleton(theta, d, n_max, start, a, levels)


@dataclass(frozen=True)
class ThicknessResult:
    """Outcome of :func:`is_theta_thick`; ``witness`` is the first missed ``(n, x)``."""

    thick: bool
    witness: tuple[int, tuple[float, ...]] | None = None

    def __bool__(self) -> bool:
        return self.thick


def is_theta_thick(target, skeleton: Skeleton, n_range: Sequence[int]) -> ThicknessResult:
    """Check that a set meets every skeleton box over a range of levels.

    Parameters
    ----------
    target : PixelSet or callable
        A pixel set (the set is the union of its cells) or a predicate
        ``meets(corner, side) -> bool`` for the half-open box.
    skeleton : Skeleton
    n_range : (int, int)
        Inclusive level range.

    Returns
    -------
    ThicknessResult
    """
    n0, n1 = int(n_range[0]), int(n_range[1])
    if n0 < skeleton.start_shell or n1 > skeleton.n_max or n1 < n0:
        raise InputError(f"n_range {n_range} outside skeleton levels "
                         f"[{skeleton.start_shell}, {skeleton.n_max}]")
    for n in range(n0, n1 + 1):
        p = skeleton.level(n)
        if callable(target) and not isinstance(target, PixelSet):
            for idx in np.ndindex(*(p.count,) * skeleton.d):
                corner = tuple(p.start + j * p.step for j in idx)
                if not target(corner, p.step):
                    return ThicknessResult(False, (n, corner))
            continue
        if not isinstance(target, PixelSet) or target.d != skeleton.d:
            raise InputError("target must be a PixelSet of the skeleton's dimension or a predicate")
        hit = _skeleton_hits(target, p, n, skeleton.d)
        miss = np.flatnonzero(~hit.ravel())
        if miss.size:
            idx = np.unravel_index(miss[0], hit.shape)
            corner = tuple(p.start + int(j) * p.step for j in idx)
            return ThicknessResult(False, (n, corner))
    return ThicknessResult(True)


def _skeleton_hits(px: PixelSet, p: Progression, n: int, d: int) -> np.ndarray:
    _check_budget(p.count ** d, "skeleton thickness check")
    r = px.resolution
    J = p.count
    if d == 1:
        mark = np.zeros(J + 1, dtype=np.int64)
        for s in (n, n + 1):
            runs = px.runs(s).astype(float) * r
            if runs.shape[0] == 0:
                continue
            jlo = np.floor((runs[:, 0] - p.start) / p.step)
            jhi = np.ceil((runs[:, 1] - p.start) / p.step) - 1
            jlo = np.clip(jlo, 0, J).astype(np.int64)
            jhi = np.clip(jhi, -1, J - 1).astype(np.int64)
            ok = jhi >= jlo
            np.add.at(mark, jlo[ok], 1)
            np.add.at(mark, jhi[ok] + 1, -1)
        return np.cumsum(mark[:J]) > 0
    hit = np.zeros((J, J), dtype=bool)
    cells = np.concatenate([px.cells(s) for s in (n, n + 1)]).astype(float) * r
    if cells.shape[0] == 0:
        return hit
    jlo = np.floor((cells - p.start) / p.step).astype(np.int64)
    jhi = (np.ceil((cells + r - p.start) / p.step) - 1).astype(np.int64)
    span = int((jhi - jlo).max()) if cells.size else 0
    for o1 in range(span + 1):
        for o2 in range(span + 1):
            j1, j2 = jlo[:, 0] + o1, jlo[:, 1] + o2
            ok = (j1 <= jhi[:, 0]) & (j2 <= jhi[:, 1]) & (j1 >= 0) & (j2 >= 0) & (j1 < J) & (j2 < J)
            hit[j1[ok], j2[ok]] = True
    return hit
