"""Shell contents ``nu^n_rho``: minimal cover costs of one shell.

In ``d = 1`` with ``rho <= 1`` the cost ``f(s) = max(c0, s)^rho`` of a box is
subadditive, so some optimal cover uses boxes whose extent is a union of
consecutive occupied runs.  This turns the problem into a least-weight
subsequence recursion

    E[j] = min_{i <= j} E[i - 1] + f(b_j - a_i)

over runs ``[a_i, b_i)``.  For ``c0 = 1`` the weight ``f(b_j - a_i)`` is
concave in the gap, and the classical stack-of-candidates algorithm solves
it exactly in ``O(m log m)``.  For other ``c0`` an ``O(m^2)`` scan with an
early-exit bound is used.  For ``rho >= 1`` and ``c0 = 1`` unit boxes are
optimal.  In ``d = 2`` costs come from a dyadic quadtree and are upper
bounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from ._validation import check_positive
from .errors import InputError
from .shells import PixelSet, UprightBox

#: Largest number of runs handed to the quadratic DP.
QUADRATIC_LIMIT = 3_000
#: Shells holding progressions with more cells than this use the closed-form cover.
PROGRESSION_DP_LIMIT = 200_000


@dataclass(frozen=True)
class CoverSolution:
    """Cover of one shell and its cost.

    Boxes are stored compactly: box ``i`` is repeated ``repeat[i]`` times
    side by side starting at ``corners[i]``.  This keeps covers made of
    billions of unit boxes cheap.

    Attributes
    ----------
    n : int
    rho : float
    cost : float
        ``sum (side / e^n)^rho`` over all boxes.
    exact : bool
        True only when the optimizer certifies optimality.
    corners : ndarray, shape (k, d)
    sides : ndarray, shape (k,)
    repeat : ndarray of int, shape (k,)
    """

    n: int
    rho: float
    cost: float
    exact: bool
    corners: np.ndarray = field(repr=False)
    sides: np.ndarray = field(repr=False)
    repeat: np.ndarray = field(repr=False)
    min_side: float = 1.0

    @property
    def flag(self) -> str:
        return "exact" if self.exact else "upper_bound"

    @property
    def n_boxes(self) -> int:
        return int(self.repeat.sum())

    def boxes(self, limit: int = 1_000_000) -> list[UprightBox]:
        """Expanded list of boxes (refuses more than ``limit``)."""
        if self.n_boxes > limit:
            raise InputError(f"cover has {self.n_boxes} boxes, above limit {limit}")
        out = []
        for c, s, k in zip(self.corners, self.sides, self.repeat):
            for i in range(int(k)):
                cc = c.copy()
                cc[0] += i * s
                out.append(UprightBox(tuple(cc), float(s)))
        return out

    def recomputed_cost(self) -> float:
        return float(np.sum(self.repeat * self.sides ** self.rho) * math.exp(-self.n * self.rho))


def _empty(n, rho, d, c0) -> CoverSolution:
    return CoverSolution(n, rho, 0.0, True, np.empty((0, d)), np.empty(0), np.empty(0, np.int64), c0)


# ----------------------------------------------------------------------
# d = 1 kernels
# ----------------------------------------------------------------------
@numba.njit(cache=True)
def _f(span, rho, c0):
    return max(c0, span) ** rho


@numba.njit(cache=True)
def _lws_concave(a, b, rho, c0):
    """Exact grouping DP for a concave weight, O(m log m).

    Returns ``(total, first)`` where ``first[j]`` is the first run of the
    group ending at run ``j`` in an optimal solution.  Among equal-cost
    candidates the older one (a longer group, hence fewer boxes) wins.
    """
    m = a.shape[0]
    D = np.zeros(m + 1)
    first = np.empty(m, np.int64)
    cand = np.empty(m, np.int64)
    bp = np.empty(m, np.int64)  # first j at which the candidate below overtakes this one
    top = -1
    for j in range(m):
        new = j
        while True:
            if top < 0:
                top += 1
                cand[top] = new
                bp[top] = m
                break
            old = cand[top]
            # first index h >= j with V(old, h) <= V(new, h)
            lo, hi = j, m
            while lo < hi:
                mid = (lo + hi) // 2
                if D[old] + _f(b[mid] - a[old], rho, c0) <= D[new] + _f(b[mid] - a[new], rho, c0):
                    hi = mid
                else:
                    lo = mid + 1
            h = lo
            if h == j:
                break  # new never strictly better
            if top >= 1 and h >= bp[top]:
                top -= 1  # old is overtaken from below before it can beat new
                continue
            top += 1
            cand[top] = new
            bp[top] = h
            break
        while top >= 1 and bp[top] <= j:
            top -= 1
        i = cand[top]
        first[j] = i
        D[j + 1] = D[i] + _f(b[j] - a[i], rho, c0)
    return D[m], first


@numba.njit(cache=True)
def _lws_quadratic(a, b, rho, c0):
    """Reference O(m^2) DP with lexicographic tie-break.

    Minimizes cost, then number of boxes, then total side length.  The scan
    over group starts stops once the span weight alone exceeds the best
    value, which is valid because ``D`` is non-negative.
    """
    m = a.shape[0]
    D = np.zeros(m + 1)
    K = np.zeros(m + 1, np.int64)
    S = np.zeros(m + 1)
    first = np.empty(m, np.int64)
    for j in range(m):
        best = np.inf
        bk = 0
        bs = 0.0
        bi = j
        for i in range(j, -1, -1):
            w = _f(b[j] - a[i], rho, c0)
            if w > best * (1 + 1e-12):
                break
            v = D[i] + w
            k = K[i] + 1
            s = S[i] + max(c0, b[j] - a[i])
            tol = 1e-12 * max(abs(v), abs(best)) if best < np.inf else 0.0
            if v < best - tol or (abs(v - best) <= tol and (k < bk or (k == bk and s < bs))):
                best, bk, bs, bi = v, k, s, i
        D[j + 1] = best
        K[j + 1] = bk
        S[j + 1] = bs
        first[j] = bi
    return D[m], first


@numba.njit(cache=True)
def _groups_from_first(first):
    """Backtrack the DP: ``(start_run, end_run)`` index arrays of each group."""
    m = first.shape[0]
    lo = np.empty(m, np.int64)
    hi = np.empty(m, np.int64)
    g = 0
    j = m - 1
    while j >= 0:
        i = first[j]
        lo[g] = i
        hi[g] = j
        g += 1
        j = i - 1
    return lo[:g][::-1].copy(), hi[:g][::-1].copy()


def _cover_from_groups(runs, groups, c0):
    lo, hi = groups
    corners = runs[lo, 0].astype(float).reshape(-1, 1)
    sides = np.maximum(c0, (runs[hi, 1] - runs[lo, 0]).astype(float))
    return corners, sides, np.ones(lo.size, np.int64)


def _chop_cover(runs, c0):
    """Unit-side (or ``c0``-side) boxes laid end to end over each run."""
    lengths = runs[:, 1] - runs[:, 0]
    if c0 == 1.0:
        return runs[:, :1].astype(float), np.ones(runs.shape[0]), lengths.astype(np.int64)
    reps = np.ceil(lengths / c0).astype(np.int64)
    return runs[:, :1].astype(float), np.full(runs.shape[0], float(c0)), reps


def run_content(runs: np.ndarray, rho: float, min_side: float = 1.0, method: str = "auto"):
    """Unscaled optimal cost ``sum side^rho`` for disjoint sorted runs.

    Parameters
    ----------
    runs : ndarray of int, shape (m, 2)
    rho : float
    min_side : float
    method : {"auto", "concave", "quadratic"}

    Returns
    -------
    total : float
    corners, sides, repeat : ndarray
    exact : bool
    """
    a = np.ascontiguousarray(runs[:, 0], dtype=np.float64)
    b = np.ascontiguousarray(runs[:, 1], dtype=np.float64)
    c0 = float(min_side)
    if rho >= 1.0 and c0 == 1.0 and method == "auto":
        corners, sides, rep = _chop_cover(runs, 1.0)
        return float(rep.sum()), corners, sides, rep, True
    if rho > 1.0:
        corners, sides, rep = _chop_cover(runs, c0)
        chop = float(np.sum(rep * sides ** rho))
        tot, first = _lws_concave(a, b, rho, c0)
        if tot < chop:
            return (float(tot),) + _cover_from_groups(runs, _groups_from_first(first), c0) + (False,)
        return chop, corners, sides, rep, False
    if method == "concave" or (method == "auto" and c0 == 1.0):
        tot, first = _lws_concave(a, b, rho, c0)
        exact = c0 == 1.0
    elif method == "quadratic" or runs.shape[0] <= QUADRATIC_LIMIT:
        tot, first = _lws_quadratic(a, b, rho, c0)
        exact = True
    else:
        tot, first = _lws_concave(a, b, rho, c0)
        exact = False
    return (float(tot),) + _cover_from_groups(runs, _groups_from_first(first), c0) + (exact,)


def _progression_content(px: PixelSet, n: int, rho: float, c0: float):
    """Cheap valid cover for shells holding huge progressions.

    Takes the better of (each explicit run as one box plus unit boxes on
    progression cells) and (one box over the whole shell trace).  When
    ``rho >= 1`` and ``c0 = 1`` the unit cover is optimal.
    """
    runs = px.explicit_runs(n)
    progs = px.progressions(n)
    f1 = max(c0, 1.0) ** rho
    lens = (runs[:, 1] - runs[:, 0]).astype(float)
    n_prog = sum(p.count for p in progs)
    if rho >= 1.0 and c0 == 1.0:
        total = float(lens.sum()) + n_prog
        corners = np.r_[runs[:, 0].astype(float), [p.start for p in progs]].reshape(-1, 1)
        return total, corners, np.ones(len(corners)), np.r_[lens.astype(np.int64), [p.count for p in progs]].astype(np.int64), True
    singles = float(np.sum(np.maximum(c0, lens) ** rho)) + n_prog * f1
    lo = min([int(runs[0, 0])] if runs.shape[0] else [] + [p.first for p in progs])
    lo = min([lo] + [p.first for p in progs])
    hi = max(([int(runs[-1, 1])] if runs.shape[0] else []) + [p.last + 1 for p in progs])
    one = max(c0, float(hi - lo)) ** rho
    if one <= singles:
        return one, np.array([[float(lo)]]), np.array([max(c0, float(hi - lo))]), np.ones(1, np.int64), False
    corners = np.r_[runs[:, 0].astype(float), [p.start for p in progs]].reshape(-1, 1)
    sides = np.r_[np.maximum(c0, lens), [c0] * len(progs)]
    rep = np.r_[np.ones(runs.shape[0], np.int64), [p.count for p in progs]].astype(np.int64)
    return singles, corners, sides, rep, False


# ----------------------------------------------------------------------
# d = 2 quadtree
# ----------------------------------------------------------------------
def _quadtree_content(cells: np.ndarray, rho: float, c0: float):
    """Best cover by origin-aligned dyadic squares (side ``2^k >= c0``).

    Each node either is taken whole or delegates to its children.
    """
    k0 = max(0, math.ceil(math.log2(c0) - 1e-12))
    keys = np.unique(cells >> k0, axis=0)
    cost = np.full(keys.shape[0], float(2 ** k0) ** rho)
    levels = [(k0, keys, cost, np.ones(keys.shape[0], bool), None)]
    k = k0
    while keys.shape[0] > 4 or (keys.shape[0] > 1 and (keys.max(0) - keys.min(0)).max() > 1):
        k += 1
        parent, inv = np.unique(keys >> 1, axis=0, return_inverse=True)
        inv = inv.ravel()
        child_sum = np.bincount(inv, weights=cost, minlength=parent.shape[0])
        whole = float(2 ** k) ** rho
        take = whole <= child_sum
        cost = np.where(take, whole, child_sum)
        levels[-1] = levels[-1][:4] + (inv,)
        levels.append((k, parent, cost, take, None))
        keys = parent
    total = float(cost.sum())
    # top-down: a node is in the cover if it is taken and no ancestor was
    active = np.ones(levels[-1][1].shape[0], bool)
    corners, sides = [], []
    for li in range(len(levels) - 1, -1, -1):
        kk, kys, _, take, _ = levels[li]
        chosen = active & take
        corners.append(kys[chosen].astype(float) * 2 ** kk)
        sides.append(np.full(int(chosen.sum()), float(2 ** kk)))
        if li > 0:
            inv_child = levels[li - 1][4]
            active = (active & ~take)[inv_child]
    corners = np.concatenate(corners).reshape(-1, 2)
    sides = np.concatenate(sides)
    return total, corners, sides, np.ones(sides.size, np.int64)


# ----------------------------------------------------------------------
# public API
# ----------------------------------------------------------------------
def shell_content(pixels: PixelSet, n: int, rho: float, min_side: float = 1.0,
                  method: str = "auto") -> CoverSolution:
    """Content ``nu^n_rho`` of the trace of a pixel set on shell ``n``.

    Parameters
    ----------
    pixels : PixelSet
        Must have resolution 1.
    n : int
        Shell index.
    rho : float
        Exponent, > 0.
    min_side : float
        Smallest admissible box side ``c0`` (default 1).
    method : {"auto", "concave", "quadratic"}
        d = 1 optimizer; "auto" picks the exact one.

    Returns
    -------
    CoverSolution
        ``exact`` is True for the d = 1 dynamic program (when it is provably
        optimal); d = 2 covers are upper bounds.

    Examples
    --------
    >>> px = PixelSet.from_cells([100, 103])
    >>> round(shell_content(px, 5, 1.0).cost, 5)
    0.01348
    """
    rho = check_positive(rho, "rho")
    c0 = check_positive(min_side, "min_side")
    if c0 < 1.0:
        raise InputError("min_side must be >= 1")
    if pixels.resolution != 1.0:
        raise InputError("shell_content needs resolution 1; re-pixelize coarser sets first")
    if pixels.count(n) == 0:
        return _empty(n, rho, pixels.d, c0)
    scale = math.exp(-n * rho)
    if pixels.d == 1:
        if pixels.has_progressions(n) and pixels.count(n) > PROGRESSION_DP_LIMIT:
            tot, corners, sides, rep, exact = _progression_content(pixels, n, rho, c0)
        else:
            tot, corners, sides, rep, exact = run_content(pixels.runs(n), rho, c0, method)
    else:
        tot, corners, sides, rep = _quadtree_content(pixels.cells(n), rho, c0)
        exact = False
    return CoverSolution(n, rho, tot * scale, exact, corners, sides, rep, c0)


def brute_force_content(cells, n: int, rho: float, min_side: float = 1.0) -> float:
    """Exhaustive minimum over covers by integer-endpoint intervals (tiny inputs).

    Enumerates every partition of the sorted cells into consecutive groups
    and, independently, every way of covering a group with one interval
    whose endpoints are integers; intended only as a test oracle.
    """
    z = np.unique(np.asarray(cells, dtype=np.int64))
    m = z.size
    if m == 0:
        return 0.0
    if m > 14:
        raise InputError("brute force limited to 14 cells")
    best = math.inf
    for mask in range(1 << (m - 1)):
        cost, start = 0.0, 0
        for i in range(m):
            if i == m - 1 or (mask >> i) & 1:
                span = z[i] + 1 - z[start]
                # any integer interval containing the group has side >= span
                cost += max(min_side, float(span)) ** rho
                start = i + 1
        best = min(best, cost)
    return best * math.exp(-n * rho)


def covers_all(sol: CoverSolution, pixels: PixelSet) -> bool:
    """True iff the cover contains every occupied cell box of shell ``sol.n``."""
    if sol.n_boxes == 0:
        return pixels.count(sol.n) == 0
    if np.any(sol.sides < 1.0):
        return False
    if pixels.d == 1:
        runs = pixels.runs(sol.n)
        lo = sol.corners[:, 0]
        hi = lo + sol.sides * sol.repeat
        order = np.argsort(lo)
        lo, hi = lo[order], hi[order]
        reach = np.maximum.accumulate(hi)
        idx = np.searchsorted(lo, runs[:, 0], side="right") - 1
        if np.any(idx < 0):
            return False
        # runs must sit inside the union of boxes; boxes in a DP cover do not overlap
        return bool(np.all(reach[idx] >= runs[:, 1]) and _union_contains(lo, hi, runs))
    cells = pixels.cells(sol.n).astype(float)
    inside = np.zeros(cells.shape[0], bool)
    for c, s in zip(sol.corners, sol.sides):
        inside |= np.all((cells >= c) & (cells + 1 <= c + s), axis=1)
    return bool(inside.all())


def _union_contains(lo, hi, runs) -> bool:
    # merge boxes into disjoint intervals, then check each run lies in one
    merged = []
    for a, b in zip(lo, hi):
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    m = np.array(merged)
    idx = np.searchsorted(m[:, 0], runs[:, 0], side="right") - 1
    return bool(np.all(idx >= 0) and np.all(m[idx, 1] >= runs[:, 1]))
