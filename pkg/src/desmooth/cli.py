"""Command-line front end.

Subcommands::

    desmooth fit            fit one estimator to an x,y CSV
    desmooth bandwidth      leave-one-out CV bandwidth for one estimator
    desmooth simulate       run a MAD study from a JSON config
    desmooth mse-curve      pointwise log-MSE curves from a JSON config
    desmooth demo-sparse    the sparse-gap demonstration on simulated tumour data
    desmooth variance-ratio DE1-1 / NW conditional variance ratios

``-h`` is the bandwidth flag inside subcommands (use ``--help`` for help).
Exit status: 0 ok, 2 configuration error, 3 data or I/O error, 4 numerical
failure.  Messages go to standard error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .bandwidth import BandwidthGrid, default_cv_grid, loocv_select
from .data import Dataset, bandwidth_heuristic, load_mouse, parse_csv
from .errors import ConfigError, DataFormatError, DesmoothError
from .estimators import parse_method
from .kernel import Kernel
from .parametric import fit_exponential_nls, fit_loglinear
from .schema import load_study
from .simulation import run_mad_study, run_mse_curve, stream, variance_ratio_study

__all__ = ["main", "build_parser"]

FIT_GRID_POINTS = 101
DEMO_N = 41
DEMO_BANDWIDTH = 3.5
DEMO_GAP = (0.35, 0.65)  # fractions of the time range removed by the demo
DEMO_METHODS = ("nw", "ll", "lq", "de1-1")


# ---------------------------------------------------------------------------
# helpers


def _num(v: float) -> str:
    return "nan" if not np.isfinite(v) else f"{v:.17g}"


def _json_num(v):
    v = float(v)
    return v if math.isfinite(v) else None


def _parse_grid(spec: Optional[str], what: str) -> Optional[np.ndarray]:
    """``lo:hi:num`` (equispaced) or a comma-separated list."""
    if spec is None:
        return None
    try:
        if ":" in spec:
            lo, hi, num = spec.split(":")
            num = int(num)
            if num < 1:
                raise ValueError
            return np.linspace(float(lo), float(hi), num)
        values = np.array([float(t) for t in spec.split(",") if t.strip()])
    except ValueError:
        raise ConfigError(f"--grid: cannot parse {what} {spec!r} (use lo:hi:num or v1,v2,...)") from None
    if values.size == 0:
        raise ConfigError(f"--grid: empty {what}")
    return values


def _load_input(path: Optional[str]) -> Dataset:
    return load_mouse() if path is None else parse_csv(path)


def _write(text: str, output: Optional[str]) -> None:
    if output is None or output == "-":
        sys.stdout.write(text)
        return
    try:
        Path(output).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"cannot write {output}: {exc.strerror or exc}") from exc


def _resolve_estimator(args, data: Dataset):
    est = parse_method(args.method, kernel=args.kernel, degree=args.degree)
    lam = args.lam
    if lam is None and args.estimate_lambda and est.family in ("de1", "nls"):
        _, lam = fit_loglinear(data)
    if lam is not None:
        est = est.with_lambda(lam)
    if est.needs_lambda:
        raise ConfigError(f"{est.label} needs --lambda or --estimate-lambda")
    return est, lam


def _fit_csv(fit) -> str:
    lines = ["x0,ghat,degenerate"]
    for x0, g, d in zip(fit.grid, fit.values, fit.degenerate):
        lines.append(f"{_num(x0)},{_num(g)},{int(bool(d))}")
    return "\n".join(lines) + "\n"


def _fit_json(fit, lam) -> str:
    bw = fit.bandwidth
    doc = {
        "method": fit.method,
        "bandwidth": None if bw is None else _json_num(np.median(bw)),
        "lambda": None if lam is None else float(lam),
        "x0": [_json_num(v) for v in fit.grid],
        "ghat": [_json_num(v) for v in fit.values],
        "degenerate": [bool(d) for d in fit.degenerate],
    }
    return json.dumps(doc, indent=2) + "\n"


# ---------------------------------------------------------------------------
# commands


def cmd_fit(args) -> int:
    data = _load_input(args.input)
    est, lam = _resolve_estimator(args, data)
    grid = _parse_grid(args.grid, "evaluation grid")
    if grid is None:
        grid = np.linspace(data.xs[0], data.xs[-1], FIT_GRID_POINTS)
    h = None
    if est.needs_bandwidth:
        h = args.bandwidth if args.bandwidth is not None else bandwidth_heuristic(data.xs)
        if not h > 0:
            raise ConfigError(f"bandwidth must be positive, got {h}")
    fit = est.fit(data, h, grid)
    _write(_fit_json(fit, lam) if args.format == "json" else _fit_csv(fit), args.output)
    return 0


def cmd_bandwidth(args) -> int:
    data = _load_input(args.input)
    est, lam = _resolve_estimator(args, data)
    if not est.needs_bandwidth:
        raise ConfigError(f"{est.label} has no bandwidth")
    hs = _parse_grid(args.grid, "bandwidth grid")
    grid = default_cv_grid(data.xs) if hs is None else BandwidthGrid(hs)
    h_star, scores = loocv_select(data, est, grid)
    if args.format == "json":
        doc = {
            "method": est.label,
            "lambda": lam,
            "h_star": h_star,
            "grid": [float(v) for v in grid.values],
            "cv": [_json_num(v) for v in scores],
        }
        _write(json.dumps(doc, indent=2) + "\n", args.output)
    else:
        lines = ["h,cv"] + [f"{_num(h)},{_num(s)}" for h, s in zip(grid.values, scores)]
        _write("\n".join(lines) + "\n", args.output)
    print(f"h* = {h_star:.6g}", file=sys.stderr)
    return 0


def _study(args):
    study = load_study(args.config)
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.reps is not None:
        updates["reps"] = args.reps
    if updates:
        from .schema import study_from_dict

        study = study_from_dict({**study.model_dump(), **updates})
    return study


def cmd_simulate(args) -> int:
    study = _study(args)
    report = run_mad_study(study.to_config(), workers=args.workers)
    if args.output is not None:
        prefix = Path(args.output)
        _write(report.to_csv(), str(prefix.with_suffix(".csv")))
        _write(json.dumps(report.to_dict(), indent=2) + "\n", str(prefix.with_suffix(".json")))
    print(report.format_table())
    return 0


def cmd_mse_curve(args) -> int:
    study = _study(args)
    grid = _parse_grid(args.grid, "evaluation grid")
    if grid is None:
        grid = study.evaluation_grid()
    curve = run_mse_curve(study.to_config(), grid, workers=args.workers)
    _write(curve.to_csv(), args.output)
    return 0


def _direction_changes(values) -> int:
    d = np.diff(values)
    s = np.sign(d[d != 0])
    return int(np.count_nonzero(s[1:] != s[:-1]))


def sparse_demo(seed: int = 0, gap=DEMO_GAP, h: float = DEMO_BANDWIDTH, n: int = DEMO_N):
    """Simulated tumour-growth data with a block of points removed.

    The curve is the least-squares exponential fit to the embedded mouse data;
    noise is multiplicative log-normal with the spread of the log-linear
    residuals so that volumes stay positive.  The growth rate handed to DE1-1
    is the log-linear prefit on the retained points.

    Returns a dict with the kept/removed datasets, the fits and a summary.
    """
    mouse = load_mouse()
    a, b = mouse.interval
    lo_f, hi_f = gap
    if not 0.0 <= lo_f < hi_f <= 1.0:
        raise ConfigError(f"--gap fractions must satisfy 0 <= lo < hi <= 1, got {gap}")
    curve = fit_exponential_nls(mouse)
    log_ga, lam_ll = fit_loglinear(mouse)
    resid = np.log(mouse.ys) - (log_ga + lam_ll * (mouse.xs - a))
    spread = float(np.std(resid, ddof=2))
    rng = stream(seed, 0)
    xs = np.linspace(a, b, n)
    ys = curve.predict(xs) * np.exp(spread * rng.standard_normal(n))
    gap_lo, gap_hi = a + lo_f * (b - a), a + hi_f * (b - a)
    removed = (xs > gap_lo) & (xs < gap_hi)
    kept = Dataset(xs[~removed], ys[~removed], (a, b))
    _, lam = fit_loglinear(kept)
    grid = np.linspace(a, b, FIT_GRID_POINTS)
    fits = {}
    for name in DEMO_METHODS:
        est = parse_method(name, lam=lam if name.startswith("de1") else None)
        fits[est.label] = est.fit(kept, h, grid)
    inside = (grid > gap_lo) & (grid < gap_hi)
    summary = {
        "seed": seed,
        "n_simulated": n,
        "n_removed": int(removed.sum()),
        "gap": [gap_lo, gap_hi],
        "bandwidth": h,
        "lambda_prefit": lam,
        "curve": {"g_a": curve.g_a, "lambda": curve.lam, "a": curve.a},
        "noise_log_sd": spread,
        "direction_changes_in_gap": {m: _direction_changes(f.values[inside]) for m, f in fits.items()},
        "de1_1_monotone_in_gap": bool(np.all(np.diff(fits["DE1-1"].values[inside]) > 0)),
    }
    return {
        "kept": kept,
        "removed": (xs[removed], ys[removed]),
        "fits": fits,
        "report": summary,
    }


def cmd_demo_sparse(args) -> int:
    out = sparse_demo(args.seed, tuple(args.gap), args.bandwidth if args.bandwidth is not None else DEMO_BANDWIDTH)
    outdir = Path(args.output)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataFormatError(f"cannot create {outdir}: {exc.strerror or exc}") from exc
    for label, fit in out["fits"].items():
        _write(_fit_csv(fit), str(outdir / f"fit_{label.lower()}.csv"))
    kept = out["kept"]
    _write("x,y\n" + "".join(f"{_num(x)},{_num(y)}\n" for x, y in zip(kept.xs, kept.ys)), str(outdir / "points_kept.csv"))
    rx, ry = out["removed"]
    _write("x,y\n" + "".join(f"{_num(x)},{_num(y)}\n" for x, y in zip(rx, ry)), str(outdir / "points_removed.csv"))
    _write(json.dumps(out["report"], indent=2) + "\n", str(outdir / "report.json"))
    print(json.dumps(out["report"]["direction_changes_in_gap"]))
    return 0


def cmd_variance_ratio(args) -> int:
    rows = []
    for run in range(args.runs):
        mean, lo, hi = variance_ratio_study(args.n, args.lam, args.seed, args.bandwidth, Kernel.parse(args.kernel), stream_index=run)
        rows.append((run, mean, lo, hi))
    if args.format == "json":
        doc = [{"run": r, "mean": m, "min": lo, "max": hi} for r, m, lo, hi in rows]
        _write(json.dumps(doc, indent=2) + "\n", args.output)
    else:
        lines = ["run,mean_ratio,min_ratio,max_ratio"] + [f"{r},{_num(m)},{_num(lo)},{_num(hi)}" for r, m, lo, hi in rows]
        _write("\n".join(lines) + "\n", args.output)
    return 0


# ---------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--help", action="help", help="show this help message and exit")
    p.add_argument("-h", "--bandwidth", type=float, default=None, help="kernel bandwidth")
    p.add_argument("--kernel", default="gaussian", choices=[k.value for k in Kernel])
    p.add_argument("--output", "-o", default=None, help="output path (default: standard output)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _estimator_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", "-i", default=None, help="x,y CSV file (default: embedded mouse tumour data)")
    p.add_argument("--method", "-m", required=True, help="nw, ll, lq, lc, lpN, de1-k, nls or loglinear")
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="growth rate for de1-k (fixes it for nls)")
    p.add_argument("--estimate-lambda", action="store_true", help="take lambda from a log-linear prefit")
    p.add_argument("--degree", type=int, default=None, help="degree for the generic 'lp' or 'de1' names")
    p.add_argument("--grid", default=None, help="lo:hi:num or v1,v2,...")


def _study_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", help="JSON study configuration")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--reps", type=int, default=None, help="override the replication count")
    p.add_argument("--workers", type=int, default=None, help="process count (default: DESMOOTH_THREADS, 0 = all CPUs)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="desmooth", description="DE-constrained kernel smoothing.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", add_help=False, help="fit one estimator")
    _common(p)
    _estimator_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("bandwidth", add_help=False, help="leave-one-out CV bandwidth")
    _common(p)
    _estimator_flags(p)
    p.set_defaults(func=cmd_bandwidth)

    p = sub.add_parser("simulate", add_help=False, help="MAD study from a JSON config")
    _common(p)
    _study_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("mse-curve", add_help=False, help="pointwise log-MSE curves")
    _common(p)
    _study_flags(p)
    p.add_argument("--grid", default=None, help="evaluation grid lo:hi:num (overrides eval_grid)")
    p.set_defaults(func=cmd_mse_curve)

    p = sub.add_parser("demo-sparse", add_help=False, help="sparse-gap demonstration")
    _common(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gap", type=float, nargs=2, default=list(DEMO_GAP), metavar=("LO", "HI"),
                   help="removed block as fractions of the time range")
    p.set_defaults(func=cmd_demo_sparse, output="demo_sparse")

    p = sub.add_parser("variance-ratio", add_help=False, help="DE1-1 / NW variance ratios")
    _common(p)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=1)
    p.set_defaults(func=cmd_variance_ratio)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DesmoothError as exc:
        print(f"desmooth: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"desmooth: error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"desmooth: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
