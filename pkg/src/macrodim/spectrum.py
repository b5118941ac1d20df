"""Theory curves, gamma sweeps and comparison reports for peak spectra."""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from ._validation import check_grid, check_int, check_positive, check_shell_range
from .dimension import MIN_SHELLS, dimh_estimate, dimm_estimate, upper_density
from .errors import InputError, InsufficientDataError
from .exceedance import ExceedanceSpec, exceedance_pixels, model_gauge
from .models import ModelConfig, simulate
from .shells import PixelSet
from .simulators.heat import discrete_f0

THEORY_MODELS = ("bm", "ou", "linear_she", "pam_exact", "pam_white", "colored")
ESTIMATORS = ("hausdorff", "minkowski")
TRIM = 0.1
MIN_GAP = 0.1
_C_PAM = 4 * math.sqrt(2) / 3


@dataclass(frozen=True)
class TheoryValue:
    """Predicted dimension; ``lo == hi`` except for the ``pam_white`` band.

    ``bounded`` is set exactly when the prediction is negative (the
    exceedance set is bounded).
    """

    value: float
    lo: float
    hi: float
    bounded: bool


def theory_dim(model: str, gamma: float, **params) -> TheoryValue:
    """Closed-form dimension of the tall peaks at level ``gamma``.

    Parameters
    ----------
    model : {"bm", "ou", "linear_she", "pam_exact", "pam_white", "colored"}
    gamma : float
    **params
        ``ell``, ``L`` for ``pam_white``; ``d``, ``f0`` for ``colored``.

    Examples
    --------
    >>> round(theory_dim("ou", 0.6).value, 12)
    0.64
    """
    gamma = check_positive(gamma, "gamma")
    if model not in THEORY_MODELS:
        raise InputError(f"unknown theory model {model!r}; expected one of {THEORY_MODELS}")
    if model == "bm":
        v = 1.0 if gamma <= 1 else -1.0
        return TheoryValue(v, v, v, v < 0)
    if model in ("ou", "linear_she"):
        v = 1 - gamma ** 2
    elif model == "pam_exact":
        v = 1 - _C_PAM * gamma ** 1.5
    elif model == "pam_white":
        missing = {"ell", "L"} - params.keys()
        if missing:
            raise InputError(f"pam_white needs parameters {sorted(missing)}")
        ell, L = check_positive(params["ell"], "ell"), check_positive(params["L"], "L")
        lo = 1 - _C_PAM / ell ** 2 * gamma ** 1.5
        hi = 1 - _C_PAM / L ** 2 * gamma ** 1.5
        return TheoryValue(0.5 * (lo + hi), lo, hi, hi < 0)
    else:
        missing = {"d", "f0"} - params.keys()
        if missing:
            raise InputError(f"colored needs parameters {sorted(missing)}")
        v = params["d"] - gamma ** 2 / (2 * check_positive(params["f0"], "f0"))
    return TheoryValue(v, v, v, v < 0)


def theory_for(cfg: ModelConfig) -> tuple[str, dict]:
    """Theory model and parameters matching a simulation config."""
    if cfg.model in ("bm", "ou", "linear_she"):
        return cfg.model, {}
    if cfg.model in ("pam", "she"):
        ell, L = cfg.sigma.bounds()
        if ell == L == 1:
            return "pam_exact", {}
        return "pam_white", {"ell": ell, "L": L}
    return "colored", {"d": cfg.d, "f0": discrete_f0(cfg.bump, cfg.d, cfg.dx)}


# ----------------------------------------------------------------------
# sweep
# ----------------------------------------------------------------------
@dataclass
class LevelSummary:
    """Aggregate over replicas for one ``(gamma, estimator)``."""

    gamma: float
    estimator: str
    dim_hat: float
    stderr: float
    bounded: bool
    n_used: int
    bounded_fraction: float
    values: np.ndarray = field(repr=False)


@dataclass
class SpectrumResult:
    """Empirical spectrum of one model.

    ``summary[(gamma, estimator)]`` holds the aggregates; ``per_replica``
    maps ``gamma`` to a list of ``(dimh, dimm)`` DimensionEstimates (None
    when a replica had too few occupied shells).
    """

    model: str
    theory_model: str
    theory_params: dict
    gammas: np.ndarray
    shell_range: tuple
    replicas: int
    summary: dict
    theory: dict
    per_replica: dict = field(repr=False, default_factory=dict)
    density: dict = field(default_factory=dict)

    def dims(self, estimator: str = "hausdorff") -> np.ndarray:
        return np.array([self.summary[(g, estimator)].dim_hat for g in self.gammas])

    def stderrs(self, estimator: str = "hausdorff") -> np.ndarray:
        return np.array([self.summary[(g, estimator)].stderr for g in self.gammas])


def _estimate(px: PixelSet, shell_range, opts):
    try:
        h = dimh_estimate(px, shell_range=shell_range, **opts)
        m = dimm_estimate(px, shell_range=shell_range)
    except InsufficientDataError:
        return None
    return h, m


def _replica_task(args):
    cfg, gammas, shell_range, seed, r, opts, density_windows = args
    extent = math.exp(shell_range[1])
    data = simulate(cfg, extent, seed, r)[0]
    gauge, transform = model_gauge(cfg.gauge_model, cfg.t)
    out, dens = [], []
    for g in gammas:
        px = exceedance_pixels(data, ExceedanceSpec(gauge, float(g)), transform)
        out.append(_estimate(px, shell_range, opts))
        if density_windows is not None:
            dens.append(upper_density(px, density_windows, domain="positive",
                                      tail_start=density_windows[0]).value)
    return r, out, dens


def _workers(workers):
    if workers is None:
        workers = int(os.environ.get("MACRODIM_WORKERS", "1"))
    return max(1, int(workers))


def _summarize(gamma, estimator, vals, bounded, n):
    vals = np.asarray(vals, dtype=float)
    frac = bounded / n
    if vals.size == 0 or frac >= 0.5:
        return LevelSummary(gamma, estimator, -1.0, 0.0, True, int(vals.size), frac, vals)
    est = float(stats.trim_mean(vals, TRIM)) if vals.size > 2 else float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else math.nan
    return LevelSummary(gamma, estimator, est, se, False, int(vals.size), frac, vals)


def spectrum_sweep(cfg: ModelConfig, gammas: Sequence[float], replicas: int, seed: int,
                   shell_range=(3, 15), slope_tol: float | None = None, min_side: float = 1.0,
                   density: bool | None = None, workers: int | None = None) -> SpectrumResult:
    """Empirical peak spectrum ``gamma -> Dim`` of a simulated model.

    Each replica is simulated once over ``[0, e^{n_max})`` and every level is
    read from the same path or field.  Per level, the estimates of replicas
    that are neither bounded nor short of shells are combined by a 10%
    trimmed mean; a level is reported bounded when at least half of the
    replicas are.

    Parameters
    ----------
    cfg : ModelConfig
    gammas : sequence of float
        Sorted ascending.
    replicas, seed : int
    shell_range : (int, int)
    slope_tol, min_side : float
        Passed to :func:`dimh_estimate`.
    density : bool, optional
        Also compute the upper density of each level (default for ``bm``).
    workers : int, optional
        Process count (default ``$MACRODIM_WORKERS`` or 1).

    Returns
    -------
    SpectrumResult
    """
    gam = check_grid(np.asarray(gammas, dtype=float), "gammas")
    if np.any(gam <= 0):
        raise InputError("gammas must be positive")
    replicas = check_int(replicas, "replicas", 1)
    shell_range = check_shell_range(shell_range)
    if shell_range[1] - shell_range[0] + 1 < MIN_SHELLS:
        raise InputError(f"shell range needs at least {MIN_SHELLS} shells")
    opts = {"min_side": min_side}
    if slope_tol is not None:
        opts["slope_tol"] = slope_tol
    density = cfg.model == "bm" if density is None else density
    windows = None
    if density:
        lo, hi = shell_range
        windows = np.exp(np.arange(4 * lo, 4 * hi + 1) / 4)
    tasks = [(cfg, gam, shell_range, seed, r, opts, windows) for r in range(replicas)]
    nw = _workers(workers)
    if nw > 1:
        with ProcessPoolExecutor(nw) as ex:
            results = list(ex.map(_replica_task, tasks))
    else:
        results = [_replica_task(t) for t in tasks]
    results.sort(key=lambda x: x[0])
    tm, tp = theory_for(cfg)
    summary, theory, per_rep, dens = {}, {}, {}, {}
    for i, g in enumerate(gam):
        g = float(g)
        ests = [res[1][i] for res in results]
        per_rep[g] = ests
        for j, name in enumerate(ESTIMATORS):
            vals = [e[j].value for e in ests if e is not None and not e[j].bounded]
            nb = sum(1 for e in ests if e is None or e[j].bounded)
            summary[(g, name)] = _summarize(g, name, vals, nb, replicas)
        theory[g] = theory_dim(tm, g, **tp)
        if density:
            dv = np.array([res[2][i] for res in results])
            dens[g] = (float(dv.mean()), float(dv.std(ddof=1) / math.sqrt(dv.size)) if dv.size > 1 else math.nan)
    return SpectrumResult(cfg.model, tm, tp, gam, shell_range, replicas, summary, theory, per_rep, dens)


# ----------------------------------------------------------------------
# log re-indexing contrast
# ----------------------------------------------------------------------
@dataclass
class ContrastResult:
    """Dimension of BM peaks in ``s`` against the same peaks re-indexed by ``log s``.

    ``reindexed`` is 0 when the re-indexed set occupies fewer than
    ``MIN_SHELLS`` shells, i.e. is bounded at this scale.
    """

    gamma: float
    direct: float
    reindexed: float
    reindexed_bounded: bool
    reindexed_shells: int
    replicas: int


def log_reindex_contrast(gamma: float = 1.0, shell_range=(3, 15), dt: float = 0.25, replicas: int = 4,
                         seed: int = 0) -> ContrastResult:
    """Peaks of one BM path measured in ``s`` and in ``t = log s``."""
    gamma = check_positive(gamma, "gamma")
    shell_range = check_shell_range(shell_range)
    cfg = ModelConfig("bm", dt=dt)
    gauge, _ = model_gauge("bm")
    direct, reidx, shells = [], [], 0
    for r in range(replicas):
        path = simulate(cfg, math.exp(shell_range[1]), seed, r)[0]
        px = exceedance_pixels(path, ExceedanceSpec(gauge, gamma))
        est = _estimate(px, shell_range, {})
        direct.append(est[0].value if est is not None and not est[0].bounded else 0.0)
        keep = path.times >= gauge.start
        hit = path.values[keep] >= gamma * gauge(path.times[keep])
        tcells = np.unique(np.floor(np.log(path.times[keep][hit])).astype(np.int64))
        tpx = PixelSet.from_cells(tcells, 1)
        shells = max(shells, len(tpx.shells()))
        n_hi = max(MIN_SHELLS - 1, int(math.ceil(math.log(shell_range[1]))) + 1)
        try:
            e = dimh_estimate(tpx, shell_range=(0, n_hi))
            reidx.append(0.0 if e.bounded else e.value)
        except InsufficientDataError:
            reidx.append(0.0)
    rb = shells < MIN_SHELLS
    return ContrastResult(gamma, float(np.mean(direct)), float(np.mean(reidx)), rb, shells, replicas)


# ----------------------------------------------------------------------
# reports
# ----------------------------------------------------------------------
@dataclass
class ComparisonReport:
    """Per-model comparison rows, error metrics and verdicts."""

    rows: list
    max_abs_delta: dict
    verdicts: dict
    files: list = field(default_factory=list)


def fractal_verdict(gammas, dims, stderrs, d: int = 1) -> str:
    """``"multifractal"``, ``"monofractal"`` or ``"indeterminate"``.

    Unbounded levels are compared pairwise; two levels separated by more
    than ``max(2 * combined stderr, 0.1)`` make the set multifractal.  When
    no pair separates and every unbounded level is within that margin of
    ``d``, the verdict is monofractal.
    """
    dims = np.asarray(dims, float)
    se = np.nan_to_num(np.asarray(stderrs, float), nan=0.0)
    ok = dims >= 0
    if len(gammas) < 2 or ok.sum() < 2:
        return "indeterminate"
    dv, sv = dims[ok], se[ok]
    for i in range(dv.size):
        for j in range(i + 1, dv.size):
            if abs(dv[i] - dv[j]) > max(2 * math.hypot(sv[i], sv[j]), MIN_GAP):
                return "multifractal"
    if np.all(np.abs(dv - d) <= np.maximum(2 * sv, MIN_GAP)):
        return "monofractal"
    return "indeterminate"


def write_spectrum_csv(path, results: Sequence[SpectrumResult]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "gamma", "estimator", "dim_hat", "stderr", "theory_lo", "theory_hi", "replicas"])
        for res in results:
            for g in res.gammas:
                th = res.theory[float(g)]
                for name in ESTIMATORS:
                    s = res.summary[(float(g), name)]
                    w.writerow([res.model, repr(float(g)), name, repr(s.dim_hat), repr(s.stderr),
                                repr(th.lo), repr(th.hi), res.replicas])


def plot_spectra(path, series: dict) -> None:
    """SVG of dimension against gamma with theory overlays.

    ``series`` maps a label to ``(gammas, dims, stderrs, theory_lo, theory_hi)``.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "macrodim", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        for label, (g, dim, se, lo, hi) in series.items():
            g = np.asarray(g, float)
            dim = np.asarray(dim, float)
            ok = dim >= 0
            eb = ax.errorbar(g[ok], dim[ok], yerr=np.nan_to_num(np.asarray(se, float)[ok]), fmt="o",
                             capsize=3, label=f"{label} (estimate)")
            ax.fill_between(g, np.maximum(lo, 0), np.maximum(hi, 0), alpha=0.2, color=eb[0].get_color())
            ax.plot(g, np.maximum(lo, 0), "--", color=eb[0].get_color(), lw=1)
            ax.plot(g, np.maximum(hi, 0), "--", color=eb[0].get_color(), lw=1)
        ax.set_xlabel("gamma")
        ax.set_ylabel("macroscopic dimension")
        ax.set_ylim(-0.05, None)
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def compare_report(results: Sequence[SpectrumResult], out_dir=None, estimator: str = "hausdorff") -> ComparisonReport:
    """Tables, error metrics and verdicts; writes CSV and SVG when ``out_dir`` is given."""
    rows, maxd, verdicts, series = [], {}, {}, {}
    for res in results:
        deltas = []
        for g in res.gammas:
            s = res.summary[(float(g), estimator)]
            th = res.theory[float(g)]
            if s.bounded or th.bounded:
                delta = 0.0 if (s.bounded and th.bounded) else math.nan
            else:
                delta = max(0.0, th.lo - s.dim_hat, s.dim_hat - th.hi)
            deltas.append(delta)
            rows.append({"model": res.model, "gamma": float(g), "dim_hat": s.dim_hat, "stderr": s.stderr,
                         "theory_lo": th.lo, "theory_hi": th.hi, "abs_delta": delta, "bounded": s.bounded})
        finite = [x for x in deltas if not math.isnan(x)]
        maxd[res.model] = max(finite) if finite else math.nan
        d = res.theory_params.get("d", 1)
        verdicts[res.model] = fractal_verdict(res.gammas, res.dims(estimator), res.stderrs(estimator), d)
        series[res.model] = (res.gammas, res.dims(estimator), res.stderrs(estimator),
                             [res.theory[float(g)].lo for g in res.gammas],
                             [res.theory[float(g)].hi for g in res.gammas])
    report = ComparisonReport(rows, maxd, verdicts)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_spectrum_csv(out / "spectrum.csv", results)
        plot_spectra(out / "spectrum.svg", series)
        report.files = [out / "spectrum.csv", out / "spectrum.svg"]
    return report
