"""Command-line interface.

Subcommands: ``run`` (one bootstrap, prints the estimate report),
``bench`` (a speedup/efficiency sweep), ``verify`` (the mode-equivalence
suite) and ``synth`` (write a synthetic expression table).

Exit codes: 0 success, 1 usage error, 2 runtime error, 3 equivalence
violation.
"""

import argparse
import sys

from . import bench as bench_mod
from . import estimates, verify
from .dataset import load_table, synth_expression, write_table
from .engine import (
    DEFAULT_MAX_PLAN_BYTES,
    EngineLimits,
    ExecutionMode,
    default_workers,
    run_bootstrap,
)
from .errors import (
    EquivalenceViolationError,
    ParbootError,
    UnknownColumnError,
    UnknownStatisticError,
    UnsupportedViewError,
)
from .statistic import parse_statistic, require_view


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}\n{self.format_usage().rstrip()}")


def _add_source_flags(parser):
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--data", metavar="PATH", help="CSV table with header line")
    source.add_argument(
        "--synth", metavar="GxA+B",
        help="synthetic expression matrix, e.g. 7129x47+25",
    )


def _add_common_flags(parser):
    parser.add_argument("--statistic", required=True, metavar="NAME",
                        help="mean|median|sd[:col], ratio:x:u, per-column:stat:c1,c2")
    parser.add_argument("--stype", choices=("i", "f", "w"), default=None,
                        help="sample representation (default: statistic's canonical)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--max-plan-bytes", type=int, default=DEFAULT_MAX_PLAN_BYTES,
                        metavar="N", help="master-side memory ceiling")


def _parse_int_list(text, flag):
    try:
        values = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise _UsageError(f"{flag} expects a comma-separated integer list, got {text!r}")
    if not values:
        raise _UsageError(f"{flag} must not be empty")
    return values


def build_parser():
    parser = _Parser(prog="parboot", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one bootstrap and print estimates")
    _add_source_flags(run_p)
    _add_common_flags(run_p)
    run_p.add_argument("--resamples", type=int, default=999, metavar="R")
    run_p.add_argument("--mode", choices=("serial", "threaded", "multiprocess"),
                       default="serial")
    run_p.add_argument("--workers", type=int, default=None, metavar="K",
                       help="worker count (default: $PARBOOT_WORKERS or CPU count)")
    run_p.add_argument("--alpha", type=float, default=0.05)
    run_p.add_argument("--out", metavar="PATH", help="also write the report as CSV")
    run_p.set_defaults(func=_cmd_run)

    bench_p = sub.add_parser("bench", help="measure speedup/efficiency vs serial")
    _add_source_flags(bench_p)
    _add_common_flags(bench_p)
    bench_p.add_argument("--resamples", default="999", metavar="R[,R...]",
                         help="resample counts to sweep")
    bench_p.add_argument("--workers", default="1,2,4", metavar="LIST",
                         help="worker counts to sweep; 1 denotes the serial baseline")
    bench_p.add_argument("--mode", default="threaded", metavar="LIST",
                         help="mode set: serial,threaded,multiprocess")
    bench_p.add_argument("--reps", type=int, default=3,
                         help="timed repetitions per point (median is reported)")
    bench_p.add_argument("--out", metavar="PATH", help="write records CSV here")
    bench_p.set_defaults(func=_cmd_bench)

    verify_p = sub.add_parser("verify", help="run the mode-equivalence suite")
    verify_p.add_argument("--quick", action="store_true",
                          help="reduced matrix (smoke test)")
    verify_p.add_argument("--verbose", action="store_true")
    verify_p.set_defaults(func=_cmd_verify)

    synth_p = sub.add_parser("synth", help="write a synthetic expression table")
    synth_p.add_argument("--synth", required=True, metavar="GxA+B")
    synth_p.add_argument("--seed", type=int, default=0)
    synth_p.add_argument("--out", required=True, metavar="PATH")
    synth_p.set_defaults(func=_cmd_synth)
    return parser


def _load_data(args):
    if args.data is not None:
        return load_table(args.data)
    genes, g1, g2 = bench_mod.parse_synth_size(args.synth)
    data, _ = synth_expression(genes, g1, g2, seed=args.seed)
    return data


def _cmd_run(args):
    data = _load_data(args)
    spec = parse_statistic(args.statistic)
    if args.stype is not None:
        require_view(spec, args.stype)  # usage error before any work
    if args.mode == "serial":
        mode = ExecutionMode.serial()
    else:
        workers = args.workers if args.workers is not None else default_workers()
        mode = ExecutionMode(args.mode, workers)
    result = run_bootstrap(
        data, spec, args.resamples, stype=args.stype, seed=args.seed,
        mode=mode, limits=EngineLimits(args.max_plan_bytes),
    )
    report = estimates.build_report(result.t0, result.t, alpha=args.alpha)
    print(
        f"statistic={args.statistic} R={result.R} stype={result.stype.value} "
        f"seed={args.seed} mode={mode.kind} workers={mode.workers}"
    )
    print(estimates.render_text(report))
    timing = result.timing
    print(
        "timing (ms): plan={:.2f} scatter={:.2f} evaluate={:.2f} "
        "reduce={:.2f} total={:.2f}".format(
            timing.plan_ns / 1e6, timing.scatter_ns / 1e6,
            timing.evaluate_ns / 1e6, timing.reduce_ns / 1e6,
            timing.total_ns / 1e6,
        )
    )
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(estimates.render_csv(report))
        print(f"report written to {args.out}")
    return 0


def _cmd_bench(args):
    spec = parse_statistic(args.statistic)
    if args.stype is not None:
        require_view(spec, args.stype)
    source = args.data if args.data is not None else f"synth:{args.synth}"
    plan = bench_mod.BenchPlan(
        source=source,
        statistic=args.statistic,
        resamples=_parse_int_list(args.resamples, "--resamples"),
        stype=args.stype,
        seed=args.seed,
        workers=_parse_int_list(args.workers, "--workers"),
        repetitions=args.reps,
        modes=tuple(args.mode.split(",")),
        max_plan_bytes=args.max_plan_bytes,
    )
    records, skipped = bench_mod.run_bench(
        plan,
        progress=lambda r: print(
            f"{r.mode:>12} p={r.p:<3} total={r.t_total_ns / 1e6:10.2f} ms  "
            f"S={r.speedup:6.3f}  E={bench_mod.efficiency_percent(r.efficiency)}"
        ),
    )
    for point in skipped:
        print(f"{point.mode:>12} p={point.p:<3} R={point.R}: skipped: {point.reason}")
    if args.out:
        bench_mod.write_records(records, args.out)
        print(f"records written to {args.out}")
    return 0


def _cmd_verify(args):
    kwargs = {}
    if args.quick:
        kwargs = {
            "sizes": (5, 49),
            "resamples": (1, 7),
            "seeds": (0,),
            "modes": verify.parallel_modes(threaded=(2,), multiprocess=(2,)),
        }
    failures = 0
    total = 0

    def progress(case):
        nonlocal failures, total
        total += 1
        if not case.ok:
            failures += 1
            print(
                f"FAIL n={case.n} stat={case.statistic} R={case.R} "
                f"seed={case.seed} mode={case.mode.kind}:{case.mode.workers} "
                f"({case.detail})"
            )
        elif args.verbose:
            print(
                f"ok   n={case.n} stat={case.statistic} R={case.R} "
                f"seed={case.seed} mode={case.mode.kind}:{case.mode.workers}"
            )

    verify.run_suite(progress=progress, **kwargs)
    print(f"mode equivalence: {total - failures}/{total} cases bit-identical")
    if failures:
        raise EquivalenceViolationError(f"{failures} cases diverged from serial")
    return 0


def _cmd_synth(args):
    genes, g1, g2 = bench_mod.parse_synth_size(args.synth)
    data, labels = synth_expression(genes, g1, g2, seed=args.seed)
    write_table(data, args.out)
    print(
        f"wrote {args.out}: {data.n} rows x {data.ncols} columns "
        f"({labels.labels.count('ALL')} ALL + {labels.labels.count('AML')} AML)"
    )
    return 0


def cli_main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (UnknownStatisticError, UnsupportedViewError, UnknownColumnError) as exc:
        print(f"parboot: error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"parboot: error: {exc}", file=sys.stderr)
        return 1
    except EquivalenceViolationError as exc:
        print(f"parboot: equivalence violation: {exc}", file=sys.stderr)
        return 3
    except ParbootError as exc:
        print(f"parboot: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
