"""Command-line harness: experiment tables as CSV, optionally with figures.

Every subcommand is deterministic in (arguments, seed) and emits a CSV with
a header row to stdout or ``--out``.  Property checks are reported on
stderr; ``--check`` turns them into hard failures.  Exit codes: 0 success,
1 usage error, 2 failed check.

With ``--plot`` (requires ``--out``) the matching figure is rendered next
to the CSV as a PNG.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import experiments

DEFAULT_SEED = 20240613
DEFAULT_REPS = 10_000


class _Parser(argparse.ArgumentParser):
    # usage problems must exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(result: experiments.ExperimentResult, out: str | None) -> None:
    stream = open(out, "w", newline="") if out else sys.stdout
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(result.header)
        for row in result.rows:
            writer.writerow([_fmt(v) for v in row])
    finally:
        if out:
            stream.close()


def _report(result: experiments.ExperimentResult, check: bool) -> int:
    for key, value in result.summary.items():
        print(f"# {key}: {_fmt(value)}", file=sys.stderr)
    failed = 0
    for c in result.checks:
        status = "ok" if c.passed else "FAIL"
        detail = f" ({c.detail})" if c.detail else ""
        print(f"[{status}] {c.name}{detail}", file=sys.stderr)
        failed += not c.passed
    if check and failed:
        print(f"{failed} check(s) failed", file=sys.stderr)
        return 2
    return 0


def _positive(kind):
    def parse(text):
        value = kind(text)
        if value <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value

    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hbs", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--reps", type=_positive(int), default=DEFAULT_REPS)
        p.add_argument("--out", type=str, default=None, help="write CSV here instead of stdout")
        p.add_argument("--csv", action="store_true", help="emit CSV (the default; kept for compatibility)")
        p.add_argument("--check", action="store_true", help="fail (exit 2) if any property check fails")
        p.add_argument("--plot", action="store_true", help="render the matching figure next to --out")
        return p

    p = add("dist", "register-value pmf per load factor")
    p.add_argument("--lambda", dest="lambdas", type=float, action="append",
                   help="load factor; repeatable (default: 0, 16, 256, 32768)")

    p = add("bucket-size", "codeword bits per bucket as bucket width grows")
    p.add_argument("--n", type=_positive(int), default=2**30, help="stream size setting the load factor")
    p.add_argument("--m", type=_positive(int), default=2**15, help="register count")
    p.add_argument("--b", dest="bucket_sizes", type=_positive(int), action="append",
                   help="registers per bucket; repeatable")

    p = add("bucket-size-vs-lambda", "codeword bits per bucket across load factors")
    p.add_argument("--b", dest="bucket_sizes", type=_positive(int), action="append")
    p.add_argument("--lambda", dest="lambdas", type=float, action="append")

    p = add("mvp", "sketch sizes and memory-variance product per bit budget")
    p.add_argument("--m", type=_positive(int), default=2**15)
    p.add_argument("--budget", dest="budgets", type=_positive(int), action="append",
                   help="codeword-array bit budget; repeatable")
    p.add_argument("--b", dest="bucket_sizes", type=_positive(int), action="append",
                   help="registers per bucket, zipped with --budget")

    p = add("tree-changes", "codebook changes while the load factor sweeps up")
    p.add_argument("--m", type=_positive(int), default=2**10)
    p.add_argument("--n", type=_positive(int), default=10**6, help="largest cardinality probed")

    p = add("update-costs", "operation counters over a synthetic stream")
    p.add_argument("--m", type=_positive(int), default=4096)
    p.add_argument("--b", dest="bucket_size", type=_positive(int), default=32)
    p.add_argument("--n", type=_positive(int), default=10**6)

    p = add("accuracy", "Monte Carlo estimator error, compressed vs. plain")
    p.add_argument("--n", dest="ns", type=int, action="append",
                   help="true cardinality; repeatable (default: 0, 10^4, 10^6)")
    p.add_argument("--m", type=_positive(int), default=4096)
    p.add_argument("--b", dest="bucket_size", type=_positive(int), default=32)
    p.add_argument("--trials", type=_positive(int), default=200)

    return parser


class UsageError(Exception):
    pass


def run(args: argparse.Namespace) -> tuple[experiments.ExperimentResult, str]:
    cmd = args.command
    if cmd == "dist":
        lambdas = args.lambdas or [0.0, 2.0**4, 2.0**8, 2.0**15]
        return experiments.dist(lambdas), cmd
    if cmd == "bucket-size":
        bucket_sizes = args.bucket_sizes or [10, 20, 40, 80, 144, 160, 313, 320]
        return experiments.bucket_size(args.n, args.m, bucket_sizes, args.reps, args.seed), cmd
    if cmd == "bucket-size-vs-lambda":
        bucket_sizes = args.bucket_sizes or [10, 144, 313]
        lambdas = args.lambdas or [2.0**k for k in range(-1, 21)]
        return (
            experiments.bucket_size_vs_lambda(bucket_sizes, lambdas, args.reps, args.seed),
            cmd,
        )
    if cmd == "mvp":
        budgets = args.budgets or [64, 512, 1024]
        bucket_sizes = args.bucket_sizes or [
            experiments.DEFAULT_BUDGET_TO_B.get(b) for b in budgets
        ]
        if None in bucket_sizes or len(bucket_sizes) != len(budgets):
            raise UsageError("--b must be given once per --budget for non-standard budgets")
        return experiments.mvp(args.m, budgets, bucket_sizes), cmd
    if cmd == "tree-changes":
        return experiments.tree_changes(args.m, args.n), cmd
    if cmd == "update-costs":
        return experiments.update_costs(args.m, args.bucket_size, args.n, args.seed), cmd
    if cmd == "accuracy":
        ns = args.ns if args.ns is not None else [0, 10**4, 10**6]
        if any(n < 0 for n in ns):
            raise UsageError("--n must be >= 0")
        return experiments.accuracy(ns, args.m, args.bucket_size, args.trials, args.seed), cmd
    raise AssertionError(f"unhandled command {cmd}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.plot and not args.out:
        parser.error("--plot requires --out")
    try:
        result, command = run(args)
    except UsageError as exc:
        parser.error(str(exc))
    _write_csv(result, args.out)
    if args.plot:
        from . import plotting

        figure_path = str(Path(args.out).with_suffix(".png"))
        plotting.render(command, result.rows, figure_path)
        print(f"# figure: {figure_path}", file=sys.stderr)
    return _report(result, args.check)


if __name__ == "__main__":
    sys.exit(main())
