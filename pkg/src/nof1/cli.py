"""Command-line interface: ``nof1 <subcommand> [options]``.

Exit codes: 0 success, 1 runtime or input error (a JSON object describing the
error is written to stderr), 2 usage error.
"""

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .chaos_oracle import ENUMERATION_CAP, enumerate_estimator_distribution
from .config import load_config
from .design import DESIGN_KINDS, RNG_SCHEME, DesignSpec, realize
from .errors import ConfigurationError, DomainError, Nof1Error
from .estimation import Observation
from .inference import estimate_report
from .model import ESTIMAND_KINDS, MODEL_KINDS
from .report import dict_rows_to_table, histogram_svg, histogram_table, to_csv, to_json, write_text
from .simulation import (
    SCHEMA_VERSION,
    SimulationConfig,
    compare_designs,
    compare_table_rows,
    consistency_sweep,
    coverage_experiment,
    run_monte_carlo,
    single_replicate,
)

FORMATS = ("json", "csv", "svg")


def read_observation_csv(path):
    """Read ``t,x,y`` rows; returns ``(x, y)``. Errors carry the line number."""
    path = Path(path)
    text = path.read_text()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or not any(r for r in rows):
        raise DomainError(f"{path}: empty observation file")
    header = [h.strip().lower() for h in rows[0]]
    if header[:3] != ["t", "x", "y"]:
        raise DomainError(f"{path}:1: expected header 't,x,y', got {','.join(rows[0])!r}")
    xs, ys = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < 3:
            raise DomainError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
        try:
            t = int(row[0])
            xv = float(row[1])
            yv = float(row[2])
        except ValueError:
            raise DomainError(f"{path}:{lineno}: cannot parse {','.join(row)!r}") from None
        if t != len(xs):
            raise DomainError(f"{path}:{lineno}: expected t={len(xs)}, got {t}")
        if xv not in (0.0, 1.0):
            raise DomainError(f"{path}:{lineno}: x must be 0 or 1, got {row[1].strip()!r}")
        if not np.isfinite(yv):
            raise DomainError(f"{path}:{lineno}: y must be finite")
        xs.append(int(xv))
        ys.append(yv)
    if not xs:
        raise DomainError(f"{path}: no observations")
    return np.array(xs, dtype=np.uint8), np.array(ys)


def observation_csv(x, y):
    rows = [["t", "x", "y"]] + [[t, int(a), repr(float(b))] for t, (a, b) in enumerate(zip(x, y))]
    return to_csv(rows)


def _formats(text):
    fmts = [f.strip() for f in text.split(",") if f.strip()]
    bad = [f for f in fmts if f not in FORMATS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown format(s) {', '.join(bad)}; choose from {', '.join(FORMATS)}")
    return tuple(fmts)


def _horizons(text):
    try:
        out = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"horizon must be an integer list, got {text!r}") from None
    if not out or min(out) < 1:
        raise argparse.ArgumentTypeError("horizons must be positive")
    return out


def _numbers(text):
    text = text.strip()
    p = Path(text)
    if p.exists():
        from .signal import load_signal

        return np.asarray(load_signal(p))
    try:
        return np.array([float(v) for v in text.strip("[]").split(",") if v.strip()])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers or a file, got {text!r}") from None


def _output_dir(args):
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not out.is_dir():
        raise ConfigurationError(f"not a directory: {out}", "output_dir")
    return out


def _config(args):
    cfg = load_config(args.config) if args.config else SimulationConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.replicates is not None:
        changes["replicates"] = args.replicates
    if args.horizon is not None:
        changes["horizons"] = args.horizon
    return replace(cfg, **changes) if changes else cfg


def _emit_histograms(out, fmts, summary, prefix, markers=None):
    for name, hist in summary.histograms.items():
        stem = f"{prefix}_{name.replace(':', '_')}"
        if "csv" in fmts:
            write_text(out, f"{stem}_hist.csv", to_csv(histogram_table(hist)))
        if "svg" in fmts:
            write_text(out, f"{stem}.svg", histogram_svg(hist, name, (markers or {}).get(name, ())))


def cmd_estimate(args):
    x, y = read_observation_csv(args.data)
    obs = Observation(x, y, args.model)
    rep = estimate_report(obs, args.estimand, args.K, args.alpha, args.lag, args.epsilon, args.C, args.seed)
    out = _output_dir(args)
    body = rep.to_dict()
    if "json" in args.format:
        write_text(out, "estimate.json", to_json(body))
    if "csv" in args.format:
        flat = {k: v for k, v in body.items() if k != "diagnostics"}
        write_text(out, "estimate.csv", to_csv(dict_rows_to_table([flat])))
    pct = round(100 * (1 - args.alpha), 6)
    print(f"tau_hat = {rep.tau_hat!r}")
    print(f"{pct:g}% CI = [{rep.ci_lower!r}, {rep.ci_upper!r}]")
    return 0


def cmd_simulate(args):
    cfg = _config(args)
    out = _output_dir(args)
    runs = []
    for n in cfg.horizons:
        s = run_monte_carlo(cfg, n, threads=args.threads)
        d = s.to_dict()
        d["horizon"] = n
        runs.append((n, s, d))
    body = {"schema_version": SCHEMA_VERSION, "kind": "simulate", "rng": RNG_SCHEME, "runs": [d for _, _, d in runs]}
    if "json" in args.format:
        write_text(out, "simulate.json", to_json(body))
    if "csv" in args.format:
        write_text(out, "simulate.csv", to_csv(dict_rows_to_table([r for _, s, _ in runs for r in s.rows])))
    for n, s, _ in runs:
        marks = {r["estimand"]: [(r["truth"], "solid")] for r in s.rows}
        _emit_histograms(out, args.format, s, f"simulate_T{n}", marks)
        for r in s.rows:
            snr = "NA" if r["snr"] is None else f"{r['snr']:.3f}"
            print(f"T={n} {r['estimand']}: ave={r['ave']:.4f} std={r['std']:.4f} snr={snr} coverage={r['coverage']:.4f}")
    if args.export_replicate is not None:
        n = cfg.horizons[0]
        x, y = single_replicate(cfg, n, args.export_replicate)
        write_text(out, f"replicate_{args.export_replicate}_T{n}.csv", observation_csv(x, y))
    return 0


def cmd_compare(args):
    cfg = _config(args)
    out = _output_dir(args)
    s = compare_designs(cfg, threads=args.threads)
    body = s.to_dict()
    body["rng"] = RNG_SCHEME
    table = compare_table_rows(s, cfg.estimands)
    if "json" in args.format:
        write_text(out, "compare.json", to_json(body))
    if "csv" in args.format:
        write_text(out, "compare.csv", to_csv(table))
    _emit_histograms(out, args.format, s, "compare")
    widths = [max(len(str(r[i])) for r in table) for i in range(len(table[0]))]
    for r in table:
        print("  ".join(str(c).ljust(w) for c, w in zip(r, widths)))
    return 0


def cmd_coverage(args):
    cfg = _config(args)
    out = _output_dir(args)
    s = coverage_experiment(cfg, threads=args.threads)
    body = s.to_dict()
    body["rng"] = RNG_SCHEME
    if "json" in args.format:
        write_text(out, "coverage.json", to_json(body))
    if "csv" in args.format:
        write_text(out, "coverage.csv", to_csv(dict_rows_to_table(s.rows)))
    marks = {}
    for r in s.rows:
        c, h = r["truth"], cfg.band * r["sigma"]
        marks[f"{r['model_kind']}:{r['horizon']}"] = [(c, "solid"), (c - h, "dashed"), (c + h, "dashed")]
    _emit_histograms(out, args.format, s, "coverage", marks)
    for r in s.rows:
        print(
            f"{r['model_kind']} T={r['horizon']} K={r['K']}: coverage={r['coverage']:.4f} "
            f"(+-{cfg.band:g} sigma, sigma={r['sigma']:.4f}) ks={r['ks_standardized']:.4f}"
        )
    return 0


def cmd_consistency(args):
    cfg = _config(args)
    out = _output_dir(args)
    s = consistency_sweep(cfg, threads=args.threads)
    body = s.to_dict()
    body["rng"] = RNG_SCHEME
    if "json" in args.format:
        write_text(out, "consistency.json", to_json(body))
    if "csv" in args.format:
        write_text(out, "consistency.csv", to_csv(dict_rows_to_table(s.rows)))
    for r in s.rows:
        print(f"T={r['horizon']} K={r['K']}: median sup error {r['median']:.5f}")
    if "loglog_slope" in s.extra:
        print(f"log-log slope of median: {s.extra['loglog_slope']:.3f}")
    return 0


def cmd_enumerate(args):
    g, q = args.g, args.q
    e = args.e if args.e is not None else np.zeros_like(g)
    if not (g.shape == q.shape == e.shape):
        raise DomainError("g, q and e must have the same length")
    dist = enumerate_estimator_distribution(g, q, e, args.model, limit=args.limit)
    out = _output_dir(args)
    body = {
        "schema_version": SCHEMA_VERSION,
        "kind": "enumerate",
        "model_kind": args.model,
        "horizon": dist.horizon,
        "exact": dist.exact,
        "mean": dist.mean,
        "variance": dist.variance,
        "fourth_central": dist.fourth_central,
        "mean_float": float(dist.mean),
        "variance_float": float(dist.variance),
    }
    if "json" in args.format:
        write_text(out, "enumerate.json", to_json(body))
    if "csv" in args.format:
        write_text(out, "enumerate.csv", dist.to_csv())
    print(f"mean = {dist.mean}  variance = {dist.variance}")
    return 0


def cmd_design(args):
    spec = DesignSpec(args.kind, args.horizon, args.washout, args.period, args.p)
    seed = 0 if args.seed is None else args.seed
    real = realize(spec, seed, tuple(args.key))
    out = _output_dir(args)
    if "csv" in args.format:
        write_text(out, "design.csv", real.to_csv())
    if "json" in args.format:
        body = {
            "schema_version": SCHEMA_VERSION,
            "kind": "design",
            "rng": RNG_SCHEME,
            "design": {"kind": spec.kind, "horizon": spec.horizon, "washout": spec.washout, "period": spec.period, "p": spec.p},
            "seed": seed,
            "key": list(args.key),
            "decisions": [{"decision_index": i, "t": t, "arm": a} for i, t, a in real.log],
        }
        write_text(out, "design.json", to_json(body))
    print("".join(str(int(v)) for v in real.path))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="nof1", description="N-of-1 experiments with linear time-invariant carryover.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="subcommand")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", default=".", help="directory for report files (created if missing)")
    common.add_argument("--format", type=_formats, default=("json", "csv"), help="comma-separated subset of json,csv,svg")
    common.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")

    sim = argparse.ArgumentParser(add_help=False, parents=[common])
    sim.add_argument("--config", help="INI or JSON config file, or a preset name (table1.cfg, fig23.cfg)")
    sim.add_argument("--replicates", type=int, default=None)
    sim.add_argument("--horizon", type=_horizons, default=None, help="horizon or comma-separated list")
    sim.add_argument("--threads", type=int, default=None, help="worker threads (default: NOF1_THREADS or 1)")

    p = sub.add_parser("estimate", parents=[common], help="estimate an effect from an observation CSV")
    p.add_argument("--data", required=True, help="CSV with header t,x,y")
    p.add_argument("--estimand", choices=ESTIMAND_KINDS, default="immediate")
    p.add_argument("--lag", type=int, default=None, help="number of lags for the lag_K estimand")
    p.add_argument("--K", type=int, default=None, help="truncation for the plug-in variance")
    p.add_argument("--model", choices=MODEL_KINDS, default="linear")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--epsilon", type=float, default=0.5, help="decay exponent for the diagnostics")
    p.add_argument("--C", type=float, default=1.0, help="constant for the decay diagnostic")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", parents=[sim], help="rapid-design Monte Carlo")
    p.add_argument("--export-replicate", type=int, default=None, help="also write replicate N as an observation CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare-designs", parents=[sim], help="compare standard and rapid designs")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("coverage", parents=[sim], help="histograms and band coverage per horizon")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("consistency", parents=[sim], help="sup-error of the truncated response estimate")
    p.set_defaults(func=cmd_consistency)

    p = sub.add_parser("enumerate", parents=[common], help="exact estimator distribution over all paths")
    p.add_argument("--g", type=_numbers, required=True, help="impulse response (comma list or file)")
    p.add_argument("--q", type=_numbers, required=True, help="estimand weights")
    p.add_argument("--e", type=_numbers, default=None, help="error signal (default zero)")
    p.add_argument("--model", choices=MODEL_KINDS, default="linear")
    p.add_argument("--limit", type=int, default=12, help=f"largest horizon to enumerate (at most {ENUMERATION_CAP})")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("design", parents=[common], help="draw one design realisation")
    p.add_argument("--kind", choices=DESIGN_KINDS, required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--washout", type=int, default=0)
    p.add_argument("--period", type=int, default=1)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--key", type=int, nargs="*", default=[], help="spawn key (e.g. replicate index)")
    p.set_defaults(func=cmd_design)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except (Nof1Error, ValueError, OSError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        if getattr(exc, "field", None):
            err["field"] = exc.field
        sys.stderr.write(json.dumps(err) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
