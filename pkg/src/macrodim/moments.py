"""Moments, Lyapunov exponents, intermittency and tail-exponent fits.

Moments are averaged over replicas and over all lattice sites: the fields
are stationary in space, so every site is an unbiased sample of
``E|u_t(x)|^k``.  Confidence half-widths come from block means over
spatial blocks, which are treated as independent.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._validation import check_grid, check_int, check_positive, check_samples
from .errors import InputError
from .models import ModelConfig, simulate
from .rng import make_rng
from .simulators.heat import GaussianBump
from .simulators.types import check_points

K_MAX = 6
Z95 = 1.959963984540054


@dataclass
class MomentEstimate:
    """Estimate of ``E|u_t(x)|^k`` with a 95% half-width."""

    k: float
    t: float
    estimate: float
    half_width: float
    replicas: int
    dominance_flag: bool = False
    model: str = ""
    f0: float | None = None

    @property
    def log_stderr(self) -> float:
        return self.half_width / Z95 / self.estimate if self.estimate > 0 else math.inf


class UnreliableMomentWarning(UserWarning):
    """The top 1% of samples carries more than half of a moment."""


def _dominated(v: np.ndarray) -> bool:
    total = v.sum()
    if total <= 0 or v.size < 100:
        return False
    top = np.partition(v, v.size - max(1, v.size // 100))[v.size - max(1, v.size // 100):]
    return bool(top.sum() > 0.5 * total)


def moment_ensemble(cfg: ModelConfig, k_list: Sequence[float], t_list: Sequence[float], replicas: int,
                    seed: int, extent: float = 2000.0, block: float = 10.0) -> list[MomentEstimate]:
    """Table of ``E|u_t|^k`` for every ``(k, t)``.

    Parameters
    ----------
    cfg : ModelConfig
        An SPDE model (``pam``, ``she``, ``linear_she`` or ``colored``).
    k_list : sequence of float
        Moment orders in ``[1, 6]``.
    t_list : sequence of float
        Increasing times.
    replicas : int
    seed : int
    extent : float
        Domain length (per axis).
    block : float
        Spatial block length for the half-widths.

    Returns
    -------
    list of MomentEstimate
        Ordered by ``k`` then ``t``.  Emits :class:`UnreliableMomentWarning`
        when the top 1% of sites contributes more than half of a moment.
    """
    ks = [float(k) for k in k_list]
    if not ks or min(ks) < 1:
        raise InputError("moment orders must be >= 1")
    if max(ks) > K_MAX:
        raise InputError(f"k={max(ks)} refused: moments beyond k={K_MAX} are not resolvable by Monte Carlo")
    ts = check_grid(np.asarray(t_list, dtype=float), "t_list")
    replicas = check_int(replicas, "replicas", 1)
    if cfg.model in ("bm", "ou"):
        raise InputError("moment_ensemble needs a field model")
    nb = max(1, int(extent // block))
    if replicas * nb ** cfg.dim < 100:
        raise InputError("need at least 100 independent blocks (replicas x spatial blocks)")
    sums = {(k, t): [] for k in ks for t in ts}
    flags = {(k, t): False for k in ks for t in ts}
    for r in range(replicas):
        fields = simulate(cfg, extent, seed, r, times=ts)
        for f, t in zip(fields, ts):
            a = np.abs(f.values)
            n = a.shape[0] // nb * nb
            a = a[:n] if f.d == 1 else a[:n, :n]
            for k in ks:
                v = a ** k
                flags[(k, t)] |= _dominated(v.ravel())
                if f.d == 1:
                    sums[(k, t)].append(v.reshape(nb, -1).mean(axis=1))
                else:
                    m = v.shape[0] // nb
                    sums[(k, t)].append(v.reshape(nb, m, nb, m).mean(axis=(1, 3)).ravel())
    out = []
    for k in ks:
        for t in ts:
            b = np.concatenate(sums[(k, t)])
            est = float(b.mean())
            hw = float(Z95 * b.std(ddof=1) / math.sqrt(b.size)) if b.size > 1 else math.inf
            if flags[(k, t)]:
                warnings.warn(f"k={k:g}, t={t:g}: top 1% of sites carry over half of the moment",
                              UnreliableMomentWarning, stacklevel=2)
            out.append(MomentEstimate(k, float(t), est, hw, replicas, flags[(k, t)], cfg.model))
    return out


# ----------------------------------------------------------------------
# Lyapunov exponents
# ----------------------------------------------------------------------
#: Default fit window.  The flat initial datum leaves a slowly decaying
#: transient in log E u_t^2; the local slope is within 12% of its limit
#: only for t >= 2 (see pam_second_moment_exact).
LYAPUNOV_WINDOW = (2.0, 5.0)


@dataclass
class LyapunovFit:
    """Least-squares slope of ``log E|u_t|^k`` against ``t``."""

    k: float
    slope: float
    stderr: float
    intercept: float
    t: np.ndarray
    residuals: np.ndarray
    unreliable: bool = False


def lyapunov_fit(table: Sequence[MomentEstimate], k: float, t_min: float = 0.2,
                 t_max: float = math.inf) -> LyapunovFit:
    """Fit ``lambda(k)`` on the rows with ``t_min <= t <= t_max``.

    Weighted by the inverse variance of ``log`` estimates; ``stderr``
    combines the weighted-fit error with the residual scatter.
    """
    rows = sorted((r for r in table if r.k == k and t_min <= r.t <= t_max), key=lambda r: r.t)
    if len(rows) < 4:
        raise InputError(f"need >= 4 time points in [{t_min}, {t_max}] for k={k}, got {len(rows)}")
    t = np.array([r.t for r in rows])
    y = np.log([r.estimate for r in rows])
    se = np.array([r.log_stderr for r in rows])
    unreliable = any(r.dominance_flag for r in rows)
    if unreliable:
        warnings.warn(f"Lyapunov fit for k={k:g} uses unreliable moments", UnreliableMomentWarning,
                      stacklevel=2)
    if np.all(se == 0):
        w = np.ones_like(t)
    else:
        w = 1.0 / np.maximum(se, 1e-12) ** 2
    A = np.column_stack([t, np.ones_like(t)])
    Aw = A * np.sqrt(w)[:, None]
    coef, *_ = np.linalg.lstsq(Aw, y * np.sqrt(w), rcond=None)
    res = y - A @ coef
    cov = np.linalg.pinv(Aw.T @ Aw)
    chi = float(np.sum(w * res ** 2) / (t.size - 2))
    stderr = math.sqrt(cov[0, 0] * max(1.0, chi)) if np.any(se > 0) else 0.0
    return LyapunovFit(k, float(coef[0]), stderr, float(coef[1]), t, res, unreliable)


def lyapunov_envelope(table: Sequence[MomentEstimate], k: float, t_min: float = 0.2,
                      t_max: float = math.inf, span: int = 4) -> tuple[float, float]:
    """Smallest and largest local slope over sliding windows of ``span`` times.

    For nonlinearities whose Lyapunov limit may not exist this pair brackets
    the growth rate seen on the grid; nothing is claimed about a limit.
    """
    rows = sorted((r for r in table if r.k == k and t_min <= r.t <= t_max), key=lambda r: r.t)
    span = check_int(span, "span", 2)
    if len(rows) < span:
        raise InputError(f"need >= {span} time points for k={k}, got {len(rows)}")
    t = np.array([r.t for r in rows])
    y = np.log([r.estimate for r in rows])
    slopes = [np.polyfit(t[i:i + span], y[i:i + span], 1)[0] for i in range(len(rows) - span + 1)]
    return float(min(slopes)), float(max(slopes))


@dataclass
class IntermittencyReport:
    """Verdict on ``k -> lambda(k)/k``.

    ``verdict`` is ``"intermittent"`` (every consecutive gap exceeds its
    combined stderr), ``"not_intermittent"`` (no gap does) or
    ``"indeterminate"``.
    """

    verdict: str
    ks: np.ndarray
    ratios: np.ndarray
    gaps: np.ndarray
    gap_stderr: np.ndarray

    @property
    def intermittent(self) -> bool:
        return self.verdict == "intermittent"


def intermittency_check(fits: Sequence[LyapunovFit]) -> IntermittencyReport:
    """Test strict growth of ``lambda(k)/k`` across the given fits."""
    if len(fits) < 2:
        raise InputError("need fits for at least two moment orders")
    fits = sorted(fits, key=lambda f: f.k)
    ks = np.array([f.k for f in fits])
    if np.any(np.diff(ks) <= 0):
        raise InputError("moment orders must be distinct")
    r = np.array([f.slope / f.k for f in fits])
    s = np.array([f.stderr / f.k for f in fits])
    gaps = np.diff(r)
    gse = np.sqrt(s[:-1] ** 2 + s[1:] ** 2)
    up = gaps > gse
    verdict = "intermittent" if up.all() else "not_intermittent" if not up.any() else "indeterminate"
    return IntermittencyReport(verdict, ks, r, gaps, gse)


# ----------------------------------------------------------------------
# Feynman-Kac oracle
# ----------------------------------------------------------------------
def feynman_kac_oracle(k: int, t: float, f, n_paths: int, ds: float, seed: int, d: int = 1,
                       chunk: int = 4096, order=None) -> MomentEstimate:
    """Monte Carlo of ``E exp(sum_{i<j} int_0^t f(X_i(s) - X_j(s)) ds)``.

    Parameters
    ----------
    k : int
        Number of Brownian motions, >= 2.
    t : float
    f : GaussianBump, float or callable
        Correlation function: a bump (``f`` in closed form), a constant, or a
        callable of the distance ``|x|``.
    n_paths : int
    ds : float
        Time step of the trapezoidal quadrature.
    seed : int
    d : int
    chunk : int
        Paths simulated at once.
    order : sequence of int, optional
        Relabeling of the ``k`` motions (for symmetry checks).

    Returns
    -------
    MomentEstimate
    """
    k = check_int(k, "k", 2)
    t = check_positive(t, "t")
    ds = check_positive(ds, "ds")
    n_paths = check_int(n_paths, "n_paths", 1)
    steps = max(1, int(math.ceil(t / ds - 1e-9)))
    ds = t / steps
    if isinstance(f, GaussianBump):
        f0 = f.f0(d)
        fn: Callable = lambda r: f.f(r, d)  # noqa: E731
        const = None
    elif callable(f):
        fn, const = f, None
        f0 = float(fn(np.zeros(1))[0])
    else:
        const = float(f)
        f0 = const
    pairs = k * (k - 1) // 2
    if const is not None:
        val = math.exp(pairs * const * t)
        return MomentEstimate(k, t, val, 0.0, n_paths, False, "feynman_kac", f0)
    perm = np.arange(k) if order is None else np.asarray(order)
    if sorted(perm.tolist()) != list(range(k)):
        raise InputError("order must be a permutation of range(k)")
    check_points(min(chunk, n_paths) * k * d * (steps + 1), "Feynman-Kac paths")
    rng = make_rng(seed, "feynman-kac")
    w = np.full(steps + 1, ds)
    w[0] = w[-1] = ds / 2
    vals = np.empty(n_paths)
    iu = np.triu_indices(k, 1)
    for c0 in range(0, n_paths, chunk):
        m = min(chunk, n_paths - c0)
        inc = rng.standard_normal((m, k, d, steps)) * math.sqrt(ds)
        X = np.concatenate([np.zeros((m, k, d, 1)), np.cumsum(inc, axis=3)], axis=3)[:, perm]
        diff = X[:, iu[0]] - X[:, iu[1]]  # (m, pairs, d, steps+1)
        r = np.sqrt(np.sum(diff ** 2, axis=2))
        integ = np.sort(fn(r) @ w, axis=1)  # sorted so relabeling cannot change rounding
        vals[c0:c0 + m] = np.exp(integ.sum(axis=1))
    est = float(vals.mean())
    hw = float(Z95 * vals.std(ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else math.inf
    return MomentEstimate(k, t, est, hw, n_paths, _dominated(vals), "feynman_kac", f0)


# ----------------------------------------------------------------------
# tail exponents
# ----------------------------------------------------------------------
@dataclass
class TailFit:
    """Fit of ``-log P{X > z} ~ c0 + c z^b + kappa log z``.

    ``c_hat`` is the coefficient ``c`` (clipped at 0); ``b_hat`` equals
    ``b`` when it was fixed.
    """

    b_hat: float
    c_hat: float
    b_mode: str
    z_lo: float
    z_hi: float
    intercept: float
    log_coef: float
    z: np.ndarray = field(repr=False)
    neglogp: np.ndarray = field(repr=False)


def _tail_design(z, b, log_term):
    cols = [np.ones_like(z), z ** b]
    if log_term:
        cols.append(np.log(z))
    return np.column_stack(cols)


def _wls(X, y, w):
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    return coef, float(np.sum(w * (y - X @ coef) ** 2))


def tail_exponent_fit(samples, b: float | None = None, z_range=None, n_z: int = 30,
                      b_grid=None, log_term: bool = True) -> TailFit:
    """Tail exponent of a sample by weighted regression of the empirical tail.

    Parameters
    ----------
    samples : array_like
        At least ``10^5`` values recommended.
    b : float, optional
        Fixed exponent; when None it is profiled over ``b_grid``.
    z_range : (float, float), optional
        Default from the 90% quantile up to the largest ``z`` with 10
        exceedances.  Shrunk (with a warning) when the top end is not
        resolvable.
    n_z : int
        Number of ``z`` points (log-spaced when ``z_lo > 0``).
    log_term : bool
        Include the ``kappa log z`` correction.  Without it a Gaussian tail
        at moderate ``z`` fits far from ``b = 2``.

    Returns
    -------
    TailFit
    """
    x = np.sort(check_samples(samples, "samples"))
    n = x.size
    if n < 1000:
        raise InputError("need at least 1000 samples for a tail fit")
    z_top = float(x[n - 10])
    if z_range is None:
        z_lo, z_hi = float(np.quantile(x, 0.9)), z_top
    else:
        z_lo, z_hi = map(float, z_range)
        if z_hi > z_top:
            warnings.warn(f"z range shrunk from {z_hi:g} to {z_top:g} (fewer than 10 exceedances)",
                          stacklevel=2)
            z_hi = z_top
    if not z_hi > z_lo:
        raise InputError("empty z range")
    if log_term and z_lo <= 0:
        raise InputError("the log z term needs z_lo > 0")
    z = np.geomspace(z_lo, z_hi, n_z) if z_lo > 0 else np.linspace(z_lo, z_hi, n_z)
    cnt = n - np.searchsorted(x, z, side="right")
    p = cnt / n
    ok = cnt > 0
    z, p = z[ok], p[ok]
    y = -np.log(p)
    w = n * p / np.maximum(1 - p, 1.0 / n)
    if b is not None:
        b = check_positive(b, "b")
        coef, _ = _wls(_tail_design(z, b, log_term), y, w)
        mode, b_hat = "fixed", b
    else:
        grid = np.linspace(0.5, 4.0, 351) if b_grid is None else np.asarray(b_grid, float)
        rss = [(_wls(_tail_design(z, bb, log_term), y, w)[1], bb) for bb in grid]
        b_hat = min(rss)[1]
        coef, _ = _wls(_tail_design(z, b_hat, log_term), y, w)
        mode = "free"
    kappa = float(coef[2]) if log_term else 0.0
    return TailFit(float(b_hat), float(max(coef[1], 0.0)), mode, float(z[0]), float(z[-1]),
                   float(coef[0]), kappa, z, y)


# ----------------------------------------------------------------------
# files
# ----------------------------------------------------------------------
def write_moments_csv(path, rows: Sequence[MomentEstimate]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "k", "t", "estimate", "half_width", "replicas", "dominance_flag", "f0"])
        for r in rows:
            w.writerow([r.model, f"{r.k:g}", repr(r.t), repr(r.estimate), repr(r.half_width), r.replicas,
                        int(r.dominance_flag), "" if r.f0 is None else repr(r.f0)])


def write_tails_csv(path, fits: dict) -> None:
    """``fits`` maps a model tag to a :class:`TailFit`."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "b_mode", "b_hat", "c_hat", "z_lo", "z_hi"])
        for model, ft in fits.items():
            w.writerow([model, ft.b_mode, repr(ft.b_hat), repr(ft.c_hat), repr(ft.z_lo), repr(ft.z_hi)])
