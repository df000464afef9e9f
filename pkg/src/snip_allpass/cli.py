"""Command-line front end.

Exit codes: 0 success, 2 infeasible or invalid input, 3 degenerate
construction, 4 simulation failure.
"""

import argparse
import csv
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import io
from .construct import MAX_RETRIES, design_allpass
from .dataset import points_from_arrays, validate_dataset
from .exceptions import (
    DegenerateConstruction,
    PickNotPositiveDefinite,
    SingularDenominator,
    SingularLeadingCoefficient,
    SnipError,
    ValidationError,
)
from .experiments import THREADS_ENV, ComparisonConfig, bench_timing, run_comparison, timing_ratios
from .gdopt import BarrierConfig, optimize_group_delays
from .pickmat import build_pick, is_positive_definite
from .polyfilter import (
    eval_filter,
    frequency_domain_filter,
    group_delay,
    lccde_filter,
    unit_circle_grid,
    unitarity_deviation,
)

EXIT_OK, EXIT_INVALID, EXIT_DEGENERATE, EXIT_SIMULATION = 0, 2, 3, 4


def fmt(x):
    """17 significant digits in scientific notation."""
    return f"{x:.16e}"


def fmt_complex(z):
    return f"{fmt(z.real)} {fmt(z.imag)}j"


def _print_matrix(M, out):
    for row in np.atleast_2d(M):
        print("  " + "  ".join(fmt_complex(v) for v in row), file=out)


class _Fail(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _barrier_from_args(args):
    kw = {}
    for name in ("mu_init", "mu_decay", "mu_final", "pd_margin", "newton_tol", "max_newton", "max_outer"):
        v = getattr(args, name, None)
        if v is not None:
            kw[name] = v
    try:
        return BarrierConfig(**kw)
    except ValueError as exc:
        raise _Fail(EXIT_INVALID, f"invalid barrier parameters: {exc}") from exc


def cmd_design(args, out):
    ds = io.load_dataset(args.dataset)
    ga = None
    if not ds.has_gammas:
        if any(g is not None for g in ds.gammas):
            raise _Fail(EXIT_INVALID, "either every point or no point may carry a gamma")
        omegas, As = ds.omegas, np.stack(ds.ratios)
        ga = optimize_group_delays(omegas, As, _barrier_from_args(args))
        ds = ds.with_gammas(ga.gammas)
        print(f"group delays optimized: trace {fmt(ga.achieved_trace)}, witness {fmt(ga.pd_witness)}", file=out)
    f = design_allpass(ds, max_retries=args.max_retries, seed=args.seed)
    if args.output:
        io.save_filter(f, args.output)
    print(f"degree {f.degree}", file=out)
    print(f"unitarity_deviation {fmt(unitarity_deviation(f, args.grid_size))}", file=out)
    for p in ds.raw_points():
        err = np.linalg.norm(eval_filter(f, p.omega) - p.A)
        F = group_delay(f, p.omega).F
        eig_err = np.abs(np.linalg.eigvalsh(F) - np.linalg.eigvalsh(p.gamma)).max()
        print(f"omega {fmt(p.omega)} interp_error {fmt(err)} gamma_spectrum_error {fmt(eig_err)}", file=out)
    return EXIT_OK


def cmd_check_pick(args, out):
    ds = io.load_dataset(args.dataset)
    P = build_pick(ds)
    res = is_positive_definite(P, args.margin)
    print(f"positive_definite {str(bool(res)).lower()}", file=out)
    print(f"min_eigenvalue {fmt(res.witness)}", file=out)
    if args.output:
        Path(args.output).write_text(json.dumps(io.pick_to_json(P)) + "\n")
    return EXIT_OK if res else EXIT_INVALID


def cmd_optimize_gd(args, out):
    doc = io.load_json(args.problem)
    if isinstance(doc, dict) and "points" in doc:
        pts = io.raw_points_from_json(doc)
        omegas, As = np.array([p.omega for p in pts]), np.stack([p.A for p in pts])
    else:
        omegas, As = io.gd_problem_from_json(doc)
    ga = optimize_group_delays(omegas, As, _barrier_from_args(args))
    print(f"achieved_trace {fmt(ga.achieved_trace)}", file=out)
    print(f"pd_witness {fmt(ga.pd_witness)}", file=out)
    print(f"converged {str(ga.converged).lower()}", file=out)
    if args.output:
        Path(args.output).write_text(json.dumps(io.gamma_assignment_to_json(ga), indent=1) + "\n")
    if args.dataset_output:
        ds = validate_dataset(points_from_arrays(omegas, As, ga.gammas))
        io.save_dataset(ds, args.dataset_output)
    return EXIT_OK


def cmd_eval(args, out):
    f = io.load_filter(args.filter)
    if args.grid is not None:
        if args.grid < 1:
            raise _Fail(EXIT_INVALID, "--grid needs a positive size")
        omegas = unit_circle_grid(args.grid)
        G = eval_filter(f, omegas)
        m = f.m
        header = ["omega"] + [f"{p}(G_{i + 1}{j + 1})" for i in range(m) for j in range(m) for p in ("re", "im")]
        target = open(args.output, "w", newline="") if args.output else out
        try:
            w = csv.writer(target)
            w.writerow(header)
            for omega, Gk in zip(omegas, G):
                row = [fmt(omega)]
                for v in Gk.ravel():
                    row += [fmt(v.real), fmt(v.imag)]
                w.writerow(row)
        finally:
            if args.output:
                target.close()
        return EXIT_OK
    for omega in args.omega:
        print(f"omega {fmt(omega)}", file=out)
        print("G", file=out)
        _print_matrix(eval_filter(f, omega), out)
        if args.group_delay:
            print("F", file=out)
            _print_matrix(group_delay(f, omega).F, out)
    return EXIT_OK


def cmd_simulate(args, out):
    f = io.load_filter(args.filter)
    t, x = io.signal_from_csv(args.signal)
    if x.shape[1] != f.m:
        raise _Fail(EXIT_INVALID, f"signal has {x.shape[1]} channels, filter expects {f.m}")
    if args.method == "fft":
        nfft = max(args.nfft, len(x))
        y = frequency_domain_filter(f, x, nfft)
    else:
        try:
            y = lccde_filter(f, x)
        except SingularLeadingCoefficient as exc:
            raise _Fail(EXIT_SIMULATION, f"{exc} (rerun with --method fft)") from exc
    io.signal_to_csv(y, args.output or out, t)
    return EXIT_OK


def _read_config(path):
    if path is None:
        return {}
    doc = io.load_json(path)
    if not isinstance(doc, dict):
        raise _Fail(EXIT_INVALID, "configuration must be a JSON object")
    return doc


def cmd_compare(args, out):
    doc = _read_config(args.config)
    if args.seed is not None:
        doc.setdefault("seed", args.seed)
    if args.threads is not None:
        doc["n_jobs"] = args.threads
    if "pdp_file" in doc:
        doc["pdp"] = io.load_json(doc.pop("pdp_file"))
    try:
        cfg = ComparisonConfig.from_dict(doc)
    except (TypeError, ValueError, KeyError) as exc:
        raise _Fail(EXIT_INVALID, f"invalid comparison config: {exc}") from exc
    report = run_comparison(cfg)
    prefix = Path(args.output)
    io.report_to_csv(report, prefix.with_suffix(".csv"))
    io.report_summary_json(report, prefix.with_suffix(".json"))
    for method, entry in report.summary()["methods"].items():
        flag = entry["flag"]
        print(
            f"{method} failure_rate {fmt(entry['failure_rate'])} "
            f"flag_median {fmt(flag['overall_median'] if flag['overall_median'] is not None else float('nan'))} "
            f"flag_max_at_points {fmt(flag['max_at_points'] if flag['max_at_points'] is not None else float('nan'))}",
            file=out,
        )
    return EXIT_OK


def cmd_bench(args, out):
    doc = _read_config(args.config)
    allowed = {"m_list", "n_points", "repetitions", "grid_size", "seed", "measure_memory"}
    unknown = set(doc) - allowed
    if unknown:
        raise _Fail(EXIT_INVALID, f"unknown bench settings {sorted(unknown)}")
    doc.setdefault("seed", args.seed)
    if args.memory:
        doc["measure_memory"] = True
    try:
        rows = bench_timing(**doc)
    except (TypeError, ValueError) as exc:
        raise _Fail(EXIT_INVALID, f"invalid bench config: {exc}") from exc
    ratios = timing_ratios(rows)
    prefix = Path(args.output)
    with open(prefix.with_suffix(".csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "m", "mean_ms", "peak_kb"])
        for r in rows:
            w.writerow([r.method, r.m, fmt(r.mean_ms), "" if r.peak_kb is None else fmt(r.peak_kb)])
    summary = {"rows": [r.__dict__ for r in rows], "ratio_geodesic_over_snip": {str(k): v for k, v in ratios.items()}}
    prefix.with_suffix(".json").write_text(json.dumps(summary, indent=1) + "\n")
    for m, ratio in sorted(ratios.items()):
        print(f"m {m} ratio_geodesic_over_snip {fmt(ratio)}", file=out)
    return EXIT_OK


def _add_barrier_flags(p):
    g = p.add_argument_group("barrier parameters")
    g.add_argument("--mu-init", dest="mu_init", type=float)
    g.add_argument("--mu-decay", dest="mu_decay", type=float)
    g.add_argument("--mu-final", dest="mu_final", type=float)
    g.add_argument("--pd-margin", dest="pd_margin", type=float)
    g.add_argument("--newton-tol", dest="newton_tol", type=float)
    g.add_argument("--max-newton", dest="max_newton", type=int)
    g.add_argument("--max-outer", dest="max_outer", type=int)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="snip-allpass",
        description="Matrix all-pass interpolation filters for unitary data on the unit circle.",
        epilog=f"Thread count for 'compare' defaults to ${THREADS_ENV} (1 if unset).",
    )
    parser.add_argument("--seed", type=int, default=0, help="seed for every random choice (default 0)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="design a filter from a JSON data set")
    p.add_argument("dataset")
    p.add_argument("-o", "--output", help="filter JSON to write")
    p.add_argument("--max-retries", type=int, default=MAX_RETRIES)
    p.add_argument("--grid-size", type=int, default=1024, help="unitarity audit grid")
    _add_barrier_flags(p)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("check-pick", help="test the Pick matrix of a data set")
    p.add_argument("dataset")
    p.add_argument("--margin", type=float, default=None)
    p.add_argument("-o", "--output", help="write the Pick matrix as JSON")
    p.set_defaults(func=cmd_check_pick)

    p = sub.add_parser("optimize-gd", help="choose minimum-trace group delays")
    p.add_argument("problem", help='JSON {"omegas", "As"} or a data set')
    p.add_argument("-o", "--output", help="GammaAssignment JSON to write")
    p.add_argument("--dataset-output", help="also write the completed data set")
    _add_barrier_flags(p)
    p.set_defaults(func=cmd_optimize_gd)

    p = sub.add_parser("eval", help="evaluate a filter's frequency response")
    p.add_argument("filter")
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--omega", type=float, nargs="+")
    grp.add_argument("--grid", type=int, help="uniform grid size; writes CSV")
    p.add_argument("--group-delay", action="store_true")
    p.add_argument("-o", "--output", help="CSV path for --grid (default stdout)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", help="run a signal through a filter")
    p.add_argument("filter")
    p.add_argument("signal", help="CSV: t, re(x_1), im(x_1), ...")
    p.add_argument("-o", "--output")
    p.add_argument("--method", choices=("lccde", "fft"), default="lccde")
    p.add_argument("--nfft", type=int, default=4096)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="all-pass versus geodesic precoder interpolation")
    p.add_argument("config", nargs="?", help="JSON ComparisonConfig fields")
    p.add_argument("-o", "--output", default="comparison", help="prefix for .csv and .json")
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bench", help="time per-frequency precoder reconstruction")
    p.add_argument("config", nargs="?", help="JSON bench settings")
    p.add_argument("-o", "--output", default="bench", help="prefix for .csv and .json")
    p.add_argument("--memory", action="store_true", help="also record peak allocations")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args, out)
    except _Fail as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except PickNotPositiveDefinite as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"witness {fmt(exc.witness)}", file=out)
        return EXIT_INVALID
    except DegenerateConstruction as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except SingularDenominator as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ValidationError, SnipError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
