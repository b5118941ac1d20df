"""Command line runner.

Subcommands: ``simulate``, ``dimension``, ``spectrum``, ``oracle``,
``fixtures`` and ``report``.  Every run writes its CSV/SVG outputs and a
``manifest.json`` with SHA-256 digests of each file.  Exit status is 0 on
success, 2 on invalid input and 3 when a resource budget refuses the run.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import platform
import sys
import time
from collections import defaultdict
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, load_config
from .dimension import dimh_estimate, dimm_estimate, fixture_set
from .errors import ConfigError, InputError, InsufficientDataError, IntegrityError, ResourceError
from .exceedance import ExceedanceSpec, exceedance_pixels, model_gauge
from .models import ModelConfig, simulate
from .moments import feynman_kac_oracle, write_moments_csv
from .shells import PixelSet
from .simulators.heat import GaussianBump
from .spectrum import compare_report, fractal_verdict, plot_spectra, spectrum_sweep

log = logging.getLogger("macrodim")

EXIT_OK, EXIT_INPUT, EXIT_RESOURCE = 0, 2, 3
MANIFEST = "manifest.json"


# ----------------------------------------------------------------------
# manifests
# ----------------------------------------------------------------------
def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(out: Path, command: str, config: dict, files: list, timings: dict, started: float) -> dict:
    """Write ``manifest.json``; the run id and digest depend only on inputs and outputs."""
    inventory = {Path(f).name: sha256_file(f) for f in sorted(files)}
    echo = json.dumps({"command": command, "config": config}, sort_keys=True)
    manifest = {
        "run_id": hashlib.sha256(echo.encode()).hexdigest()[:16],
        "command": command,
        "config": config,
        "version": f"macrodim {__version__} / numpy {np.__version__} / python {platform.python_version()}",
        "wall_clock_s": round(time.time() - started, 3),
        "timings_s": {k: round(v, 3) for k, v in timings.items()},
        "files": inventory,
        "digest": hashlib.sha256("".join(f"{k}:{v}\n" for k, v in inventory.items()).encode()).hexdigest(),
    }
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def verify_run(run_dir) -> dict:
    """Load a run manifest and check every digest.

    Raises
    ------
    IntegrityError
        Naming the first file that is missing or altered.
    """
    run_dir = Path(run_dir)
    mpath = run_dir / MANIFEST
    if not mpath.is_file():
        raise IntegrityError(f"{run_dir}: no {MANIFEST}")
    manifest = json.loads(mpath.read_text())
    for name, digest in manifest.get("files", {}).items():
        f = run_dir / name
        if not f.is_file():
            raise IntegrityError(f"{f}: listed in the manifest but missing")
        if sha256_file(f) != digest:
            raise IntegrityError(f"{f}: digest mismatch (file altered after the run)")
    return manifest


# ----------------------------------------------------------------------
# argument helpers
# ----------------------------------------------------------------------
def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from None


def _shells(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("..")
    try:
        if not sep:
            raise ValueError
        return int(lo), int(hi)
    except ValueError:
        raise InputError(f"shells must look like 'A..B', got {text!r}") from None


def _experiment(args) -> ExperimentConfig:
    if args.config is None:
        if getattr(args, "model", None) is None:
            raise ConfigError("give --config or --model")
        cfg = ExperimentConfig(ModelConfig(args.model))
    else:
        cfg = load_config(args.config)
    if getattr(args, "model", None) is not None and args.config is not None:
        raise ConfigError("--model conflicts with --config")
    if getattr(args, "gamma", None):
        cfg.gammas = _floats(args.gamma)
    if getattr(args, "replicas", None) is not None:
        cfg.replicas = args.replicas
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "shells", None):
        cfg.n_min, cfg.n_max = _shells(args.shells)
    if args.out is not None:
        cfg.output = args.out
    cfg.validate()
    return cfg


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------
def cmd_simulate(args) -> int:
    t0 = time.time()
    cfg = _experiment(args)
    out = _outdir(cfg.output)
    data = simulate(cfg.model, math.exp(cfg.n_max), cfg.seed, 0)[0]
    name = "trajectory.csv" if cfg.model.model in ("bm", "ou") else "field.csv"
    data.to_csv(out / name)
    write_manifest(out, "simulate", cfg.to_dict(), [out / name], {"simulate": time.time() - t0}, t0)
    return EXIT_OK


def _dimension_rows(set_id, px, shell_range, opts):
    rows = []
    try:
        ests = [dimh_estimate(px, shell_range=shell_range, **opts), dimm_estimate(px, shell_range=shell_range)]
    except InsufficientDataError as exc:
        log.warning("%s: %s", set_id, exc)
        return [[set_id, m, "na", shell_range[0], shell_range[1], "nan", "nan", 0]
                for m in ("hausdorff", "minkowski")]
    for e in ests:
        rho = "na"
        if e.method == "hausdorff" and not e.bounded:
            rho = repr(round(e.value + (opts.get("slope_tol") or 0.05), 6))
        rows.append([set_id, e.method, rho, e.n_min, e.n_max, repr(e.value), repr(e.stderr), int(e.bounded)])
    return rows


def cmd_dimension(args) -> int:
    t0 = time.time()
    opts = {"min_side": args.min_side}
    if args.pixels:
        out = _outdir(args.out or ".")
        px = PixelSet.from_csv(args.pixels)
        shell_range = _shells(args.shells) if args.shells else (min(px.shells()), max(px.shells()))
        rows = _dimension_rows(Path(args.pixels).stem, px, shell_range, opts)
        config = {"pixels": str(args.pixels), "shells": list(shell_range), "min_side": args.min_side}
    else:
        cfg = _experiment(args)
        out = _outdir(cfg.output)
        opts = {"min_side": cfg.min_side}
        if cfg.slope_tol is not None:
            opts["slope_tol"] = cfg.slope_tol
        gauge, transform = model_gauge(cfg.model.gauge_model, cfg.model.t)
        rows = []
        for r in range(cfg.replicas):
            data = simulate(cfg.model, math.exp(cfg.n_max), cfg.seed, r)[0]
            for g in cfg.gammas:
                px = exceedance_pixels(data, ExceedanceSpec(gauge, g), transform)
                rows += _dimension_rows(f"{cfg.model.model}_g{g:g}_r{r}", px, cfg.shell_range, opts)
        config = cfg.to_dict()
    path = out / "dimension.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["set_id", "method", "rho_or_na", "n_min", "n_max", "dim_hat", "stderr", "bounded_flag"])
        w.writerows(rows)
    write_manifest(out, "dimension", config, [path], {"dimension": time.time() - t0}, t0)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    t0 = time.time()
    cfg = _experiment(args)
    out = _outdir(cfg.output)
    res = spectrum_sweep(cfg.model, cfg.gammas, cfg.replicas, cfg.seed, cfg.shell_range,
                         slope_tol=cfg.slope_tol, min_side=cfg.min_side)
    t1 = time.time()
    rep = compare_report([res], out)
    for model, verdict in rep.verdicts.items():
        print(f"{model}: {verdict}; max |delta| = {rep.max_abs_delta[model]:.3f}")
    write_manifest(out, "spectrum", cfg.to_dict(), rep.files, {"sweep": t1 - t0, "report": time.time() - t1}, t0)
    return EXIT_OK


def cmd_oracle(args) -> int:
    t0 = time.time()
    out = _outdir(args.out or ".")
    bump = GaussianBump.parse(args.f)
    est = feynman_kac_oracle(args.k, args.t, bump, args.paths, args.ds, args.seed, d=args.d)
    path = out / "moments.csv"
    write_moments_csv(path, [est])
    print(f"E u^{args.k} at t={args.t:g}: {est.estimate:.6g} +- {est.half_width:.3g} (f0 = {est.f0:.6g})")
    config = {"k": args.k, "t": args.t, "f": args.f, "paths": args.paths, "ds": args.ds, "d": args.d,
              "seed": args.seed}
    write_manifest(out, "oracle", config, [path], {"oracle": time.time() - t0}, t0)
    return EXIT_OK


def cmd_fixtures(args) -> int:
    t0 = time.time()
    out = _outdir(args.out or ".")
    px = fixture_set(args.kind, _shells(args.shells), d=args.d, theta=args.theta, base=args.base,
                     scale=args.scale, shift=args.shift)
    path = out / "pixels.csv"
    px.to_csv(path)
    print(f"{args.kind}: {px.total()} cells in {len(px.shells())} shells")
    config = {k: getattr(args, k) for k in ("kind", "shells", "d", "theta", "base", "scale", "shift")}
    write_manifest(out, "fixtures", config, [path], {"fixtures": time.time() - t0}, t0)
    return EXIT_OK


def emit_report(run_dirs, out_dir) -> dict:
    """Merge the spectrum tables of several runs after verifying their digests.

    Rows with the same ``(model, gamma, estimator)`` are pooled: the mean is
    weighted by replicas and the stderrs are combined accordingly.  Writes
    ``report.csv``, ``verdicts.csv`` and ``report.svg``.

    Returns
    -------
    dict
        ``model -> verdict``.
    """
    if not run_dirs:
        raise InputError("report needs at least one run directory")
    pooled = defaultdict(list)
    theory = {}
    for rd in sorted(map(str, run_dirs)):
        verify_run(rd)
        path = Path(rd) / "spectrum.csv"
        if not path.is_file():
            raise InputError(f"{rd}: no spectrum.csv")
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                key = (row["model"], float(row["gamma"]), row["estimator"])
                pooled[key].append((float(row["dim_hat"]), float(row["stderr"]), int(row["replicas"])))
                theory[key] = (float(row["theory_lo"]), float(row["theory_hi"]))
    out = _outdir(out_dir)
    merged = {}
    with open(out / "report.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "gamma", "estimator", "dim_hat", "stderr", "theory_lo", "theory_hi", "replicas", "runs"])
        for key in sorted(pooled):
            vals = pooled[key]
            n = np.array([v[2] for v in vals], float)
            dims = np.array([v[0] for v in vals])
            ses = np.nan_to_num(np.array([v[1] for v in vals]))
            if np.all(dims < 0):
                dim, se = -1.0, 0.0
            else:
                ok = dims >= 0
                dim = float(np.sum(n[ok] * dims[ok]) / n[ok].sum())
                se = float(math.sqrt(np.sum((n[ok] * ses[ok]) ** 2)) / n[ok].sum())
            merged[key] = (dim, se)
            w.writerow([key[0], repr(key[1]), key[2], repr(dim), repr(se), repr(theory[key][0]),
                        repr(theory[key][1]), int(n.sum()), len(vals)])
    verdicts, series = {}, {}
    for model in sorted({k[0] for k in merged}):
        gs = sorted({k[1] for k in merged if k[0] == model and k[2] == "hausdorff"})
        dims = [merged[(model, g, "hausdorff")][0] for g in gs]
        ses = [merged[(model, g, "hausdorff")][1] for g in gs]
        d = 2 if model == "colored" and max(theory[(model, g, "hausdorff")][1] for g in gs) > 1 else 1
        verdicts[model] = fractal_verdict(gs, dims, ses, d)
        series[model] = (gs, dims, ses, [theory[(model, g, "hausdorff")][0] for g in gs],
                         [theory[(model, g, "hausdorff")][1] for g in gs])
    with open(out / "verdicts.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "verdict"])
        w.writerows(sorted(verdicts.items()))
    plot_spectra(out / "report.svg", series)
    return verdicts


def cmd_report(args) -> int:
    t0 = time.time()
    out = _outdir(args.out or "report")
    verdicts = emit_report(args.runs, out)
    for model, v in verdicts.items():
        print(f"{model}: {v}")
    files = [out / "report.csv", out / "verdicts.csv", out / "report.svg"]
    write_manifest(out, "report", {"runs": sorted(map(str, args.runs))}, files, {"report": time.time() - t0}, t0)
    return EXIT_OK


# ----------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="macrodim", description="Macroscopic dimension experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def experiment(sp):
        sp.add_argument("--config")
        sp.add_argument("--model", help="model name when no config file is given")
        sp.add_argument("--gamma", help="comma-separated levels")
        sp.add_argument("--replicas", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--shells", help="shell range A..B")
        sp.add_argument("--out")

    sp = sub.add_parser("simulate", help="simulate one replica and write it as CSV")
    experiment(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("dimension", help="estimate dimensions of exceedance sets or a pixel file")
    experiment(sp)
    sp.add_argument("--pixels", help="pixels.csv to estimate instead of simulating")
    sp.add_argument("--min-side", type=float, default=1.0)
    sp.set_defaults(func=cmd_dimension)

    sp = sub.add_parser("spectrum", help="gamma sweep with theory comparison")
    experiment(sp)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("oracle", help="Feynman-Kac moment oracle for colored noise")
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--t", type=float, default=0.5)
    sp.add_argument("--f", default="gaussian:A=1,w=1")
    sp.add_argument("--paths", type=int, default=20000)
    sp.add_argument("--ds", type=float, default=0.01)
    sp.add_argument("--d", type=int, default=2)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("fixtures", help="write an analytic fixture as pixels.csv")
    sp.add_argument("--kind", required=True)
    sp.add_argument("--shells", required=True)
    sp.add_argument("--d", type=int, default=1)
    sp.add_argument("--theta", type=float)
    sp.add_argument("--base")
    sp.add_argument("--scale", type=float, default=1.0)
    sp.add_argument("--shift", type=float, default=0.0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_fixtures)

    sp = sub.add_parser("report", help="merge spectrum runs after verifying their manifests")
    sp.add_argument("runs", nargs="+")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ResourceError as exc:
        print(f"resource refusal: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (InputError, IntegrityError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
