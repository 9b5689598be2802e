"""Benchmark command line: ``paraode {solve,benchmark,compare}``."""

import argparse
import csv
import json
import logging
import math
import statistics
import sys
import time

import numpy as np

from . import ieks
from .prior import IWPPrior
from .problems import PROBLEMS, get_problem, rmse
from .scan import depth_bound, set_workers

logger = logging.getLogger(__name__)

METHODS = {"paraieks": ieks.para_ieks, "ieks": ieks.seq_ieks, "eks": ieks.eks_solve}

CSV_HEADER = [
    "problem",
    "method",
    "nu",
    "grid_size",
    "rmse",
    "runtime_seconds",
    "iterations",
    "sigma_hat",
    "converged",
    "combine_invocations",
    "sequential_depth",
]

EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED = 0, 1, 2


class UsageError(Exception):
    pass


def _csv_list(cast):
    def parse(text):
        try:
            return [cast(x) for x in text.split(",") if x.strip()]
        except ValueError as err:
            raise argparse.ArgumentTypeError(str(err)) from None

    return parse


def _check_names(names, known, what):
    for n in names:
        if n not in known:
            raise UsageError(f"unknown {what} {n!r}; choose from {', '.join(sorted(known))}")


def _check_grid_size(n):
    if n < 2:
        raise UsageError(f"grid too small: need at least 2 steps, got {n}")


def run(problem, method, nu, n, cfg=None):
    """Solve one problem; returns ``(report, runtime_seconds)``."""
    prob = get_problem(problem) if isinstance(problem, str) else problem
    prior = IWPPrior(nu, prob.ivp.d)
    grid = prob.grid(n)
    t0 = time.perf_counter()
    report = METHODS[method](prob.ivp, prior, grid, cfg)
    return report, time.perf_counter() - t0


def solution_dict(problem, method, nu, report):
    return {
        "problem": problem,
        "method": method,
        "nu": nu,
        "n": len(report.grid) - 1,
        "grid": report.grid.tolist(),
        "mean": report.mean.tolist(),
        "std": report.std.tolist(),
        "sigma_hat": report.sigma_hat,
        "iterations": report.iterations,
        "converged": report.converged,
    }


def cmd_solve(args):
    _check_names([args.problem], PROBLEMS, "problem")
    _check_names([args.method], METHODS, "method")
    _check_grid_size(args.n)
    report, _ = run(args.problem, args.method, args.nu, args.n)
    payload = solution_dict(args.problem, args.method, args.nu, report)
    text = json.dumps(payload)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def _scan_counts(report):
    fs, ss = report.scan_stats
    return (
        max(fs.combine_invocations, ss.combine_invocations),
        max(fs.sequential_depth, ss.sequential_depth),
    )


def benchmark_cell(problem, method, nu, n, repeats=3):
    """One row of the benchmark table (as a dict keyed by ``CSV_HEADER``)."""
    prob = get_problem(problem)
    row = dict(problem=problem, method=method, nu=nu, grid_size=n)
    try:
        run(prob, method, nu, n)  # warm-up
        times = []
        for _ in range(repeats):
            report, seconds = run(prob, method, nu, n)
            times.append(seconds)
        invocations, depth = _scan_counts(report) if method == "paraieks" else (0, 0)
        row.update(
            rmse=rmse(report.mean, prob.reference, report.grid),
            runtime_seconds=statistics.median(times),
            iterations=report.iterations,
            sigma_hat=report.sigma_hat,
            converged=report.converged,
            combine_invocations=invocations,
            sequential_depth=depth,
        )
    except Exception as err:  # recorded, sweep continues
        logger.warning("cell %s/%s/nu=%d/N=%d failed: %s", problem, method, nu, n, err)
        row.update(
            rmse="", runtime_seconds="", iterations="", sigma_hat="", converged=False,
            combine_invocations="", sequential_depth="",
        )
    return row


def benchmark_rows(problems, methods, nus, grid_sizes, repeats=3):
    for problem in problems:
        for method in methods:
            for nu in nus:
                for n in sorted(grid_sizes):
                    yield benchmark_cell(problem, method, nu, n, repeats)


def write_csv(rows, fh):
    writer = csv.DictWriter(fh, fieldnames=CSV_HEADER, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
        fh.flush()


def write_svg(rows, path, width=480, height=360, pad=50):
    """Log-log scatter of runtime against RMSE, one polyline per series."""
    series = {}
    for r in rows:
        if r["rmse"] in ("", None) or not r["rmse"] > 0:
            continue
        key = f'{r["problem"]} {r["method"]} nu={r["nu"]}'
        series.setdefault(key, []).append((math.log10(r["rmse"]), math.log10(max(r["runtime_seconds"], 1e-9))))
    pts = [p for s in series.values() for p in s]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">']
    if pts:
        xs, ys = [p[0] for p in pts], [p[1] for p in pts]
        x0, x1 = min(xs), max(xs) + 1e-9
        y0, y1 = min(ys), max(ys) + 1e-9

        def sx(x):
            return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

        def sy(y):
            return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

        colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
        for k, (name, s) in enumerate(sorted(series.items())):
            c = colors[k % len(colors)]
            line = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in s)
            parts.append(f'<polyline fill="none" stroke="{c}" points="{line}"/>')
            parts.append(f'<text x="{pad}" y="{14 + 12 * k}" font-size="10" fill="{c}">{name}</text>')
        parts.append(
            f'<text x="{width / 2}" y="{height - 10}" font-size="11">log10 RMSE</text>'
            f'<text x="5" y="{height / 2}" font-size="11">log10 s</text>'
        )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def cmd_benchmark(args):
    _check_names(args.problems, PROBLEMS, "problem")
    _check_names(args.methods, METHODS, "method")
    for n in args.grid_sizes:
        _check_grid_size(n)
    rows = []
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        write_csv(_collect(benchmark_rows(args.problems, args.methods, args.nu, args.grid_sizes, args.repeats), rows), out)
    finally:
        if args.out:
            out.close()
    if args.svg:
        write_svg(rows, args.svg)
    return EXIT_OK


def _collect(it, sink):
    for x in it:
        sink.append(x)
        yield x


COMPARE_GRIDS = (30, 100, 150)


def compare_problem(problem, nu, n, tolerance):
    par, _ = run(problem, "paraieks", nu, n)
    seq, _ = run(problem, "ieks", nu, n)
    diff = float(np.max(np.abs(par.marginals.mean - seq.marginals.mean)))
    same_iters = par.iterations == seq.iterations
    return diff <= tolerance and same_iters, diff, par.iterations, seq.iterations


def cmd_compare(args):
    _check_names(args.problems, PROBLEMS, "problem")
    ok = True
    for problem in args.problems:
        for nu in args.nu:
            for n in COMPARE_GRIDS:
                passed, diff, ip, iq = compare_problem(problem, nu, n, args.tolerance)
                ok &= passed
                status = "PASS" if passed else "FAIL"
                print(f"{status} {problem} nu={nu} N={n} max|dmean|={diff:.3e} iterations={ip}/{iq}")
    return EXIT_OK if ok else EXIT_ERROR


def build_parser():
    parser = argparse.ArgumentParser(prog="paraode", description=__doc__)
    parser.add_argument("--workers", type=int, default=None, help="work-pool width (default: CPU count)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one problem and dump the solution as JSON")
    p.add_argument("--problem", default="logistic")
    p.add_argument("--method", default="paraieks")
    p.add_argument("--nu", type=int, default=2)
    p.add_argument("--n", type=int, default=30, help="number of steps")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("benchmark", help="work-precision sweep, CSV output")
    p.add_argument("--problems", type=_csv_list(str), default=list(PROBLEMS))
    p.add_argument("--methods", type=_csv_list(str), default=["paraieks", "ieks"])
    p.add_argument("--nu", type=_csv_list(int), default=[1, 2])
    p.add_argument("--grid-sizes", type=_csv_list(int), default=[2**k for k in range(4, 13)])
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--out", default=None)
    p.add_argument("--svg", default=None)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("compare", help="check sequential and parallel IEKS agree")
    p.add_argument("--problems", type=_csv_list(str), default=list(PROBLEMS))
    p.add_argument("--nu", type=_csv_list(int), default=[2])
    p.add_argument("--tolerance", type=float, default=1e-8)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    if args.workers is not None:
        if args.workers < 1:
            print("error: --workers must be >= 1", file=sys.stderr)
            return EXIT_ERROR
        set_workers(args.workers)
    try:
        return args.func(args)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
