"""Benchmark harness: speedup and efficiency relative to serial runs.

A sweep measures the same bootstrap across execution modes and worker
counts.  Each point gets one untimed warmup run followed by ``reps``
timed runs; the reported time per field is the median across the timed
runs, which resists scheduler noise on shared desktops.  Every parallel
run's replicate matrix is checked bit-for-bit against the serial
baseline before its timing is recorded: a benchmark that computed
different numbers would be meaningless.

The serial point is always measured first per resample count; it is its
own baseline, so its speedup and efficiency are exactly 1.  A worker
count of 1 in the sweep denotes that serial baseline point.
"""

import statistics as stats
from dataclasses import dataclass, field

import numpy as np

from .dataset import load_table, synth_expression
from .engine import EngineLimits, ExecutionMode, run_bootstrap
from .errors import EquivalenceViolationError, PlanTooLargeError, ZeroTimeError
from .statistic import parse_statistic

RECORD_HEADER = (
    "mode,p,reps,t_plan_ns,t_scatter_ns,t_eval_ns,t_reduce_ns,t_total_ns,"
    "speedup,efficiency"
)


def compute_speedup(t_serial_ns, t_parallel_ns):
    """S = T_serial / T_p."""
    if t_serial_ns <= 0 or t_parallel_ns <= 0:
        raise ZeroTimeError("speedup needs two positive times")
    return t_serial_ns / t_parallel_ns


def compute_efficiency(speedup, p):
    """E = S / p, stored at full precision."""
    if p < 1:
        raise ValueError("worker count must be >= 1")
    return speedup / p


def efficiency_percent(efficiency):
    """Display form: percentage rounded to the nearest integer."""
    return f"{efficiency * 100:.0f}%"


@dataclass(frozen=True)
class BenchRecord:
    """One timed sweep point.  ``efficiency`` is derived, never stored."""

    mode: str
    p: int
    reps: int
    t_plan_ns: int
    t_scatter_ns: int
    t_eval_ns: int
    t_reduce_ns: int
    t_total_ns: int
    speedup: float

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("worker count must be >= 1")
        for name in ("t_plan_ns", "t_scatter_ns", "t_eval_ns", "t_reduce_ns",
                     "t_total_ns"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def efficiency(self):
        return compute_efficiency(self.speedup, self.p)


@dataclass(frozen=True)
class SkippedPoint:
    """A sweep point that could not run (for example over the plan limit)."""

    mode: str
    p: int
    R: int
    reason: str


@dataclass(frozen=True)
class BenchPlan:
    """What to measure: data source, statistic, and the sweep grid."""

    source: str                     # file path or "synth:GxA+B"
    statistic: str
    resamples: tuple
    stype: str = None               # None = statistic's canonical view
    seed: int = 0
    workers: tuple = (1, 2, 4)
    repetitions: int = 3
    modes: tuple = ("threaded",)
    max_plan_bytes: int = None      # None = engine default

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if list(self.workers) != sorted(set(self.workers)):
            raise ValueError("worker counts must be strictly increasing")
        if not self.workers or self.workers[0] < 1:
            raise ValueError("worker counts must be >= 1")
        if not self.resamples:
            raise ValueError("at least one resample count required")
        for kind in self.modes:
            if kind not in ("serial", "threaded", "multiprocess"):
                raise ValueError(f"unknown mode {kind!r}")


def parse_synth_size(text):
    """Parse 'GxA+B' into (genes, group1, group2)."""
    try:
        genes, rest = text.split("x", 1)
        g1, g2 = rest.split("+", 1)
        return int(genes), int(g1), int(g2)
    except ValueError:
        raise ValueError(
            f"cannot parse synthetic size {text!r}; expected GxA+B, "
            f"e.g. 7129x47+25"
        ) from None


def load_source(source):
    if source.startswith("synth:"):
        genes, g1, g2 = parse_synth_size(source[len("synth:"):])
        data, _ = synth_expression(genes, g1, g2, seed=0)
        return data
    return load_table(source)


def _median_int(values):
    return int(stats.median(values))


@dataclass
class _PointMeasurement:
    timings: list = field(default_factory=list)

    def record(self, timing):
        self.timings.append(timing)

    def medians(self):
        return {
            "t_plan_ns": _median_int([t.plan_ns for t in self.timings]),
            "t_scatter_ns": _median_int([t.scatter_ns for t in self.timings]),
            "t_eval_ns": _median_int([t.evaluate_ns for t in self.timings]),
            "t_reduce_ns": _median_int([t.reduce_ns for t in self.timings]),
            "t_total_ns": _median_int([t.total_ns for t in self.timings]),
        }


def _measure_point(data, spec, R, stype, seed, mode, limits, reps, baseline_t=None):
    """Warmup plus ``reps`` timed runs; verify replicates against baseline."""
    measurement = _PointMeasurement()
    result = None
    for i in range(reps + 1):
        result = run_bootstrap(
            data, spec, R, stype=stype, seed=seed, mode=mode, limits=limits
        )
        if baseline_t is not None and not (
            np.array_equal(result.t, baseline_t[1])
            and np.array_equal(result.t0, baseline_t[0])
        ):
            raise EquivalenceViolationError(
                f"{mode.kind} run with {mode.workers} workers produced "
                f"replicates different from the serial baseline at R={R}"
            )
        if i > 0:  # first run is the untimed warmup
            measurement.record(result.timing)
    return measurement.medians(), (result.t0, result.t)


def run_bench(plan, progress=None):
    """Execute a sweep; returns (records, skipped) in sweep order."""
    data = load_source(plan.source)
    spec = parse_statistic(plan.statistic)
    limits = (
        EngineLimits(plan.max_plan_bytes)
        if plan.max_plan_bytes is not None
        else EngineLimits()
    )
    records = []
    skipped = []

    def note(record):
        records.append(record)
        if progress is not None:
            progress(record)

    for R in plan.resamples:
        try:
            serial_medians, baseline = _measure_point(
                data, spec, R, plan.stype, plan.seed,
                ExecutionMode.serial(), limits, plan.repetitions,
            )
        except PlanTooLargeError as exc:
            skipped.append(SkippedPoint("serial", 1, R, str(exc)))
            for kind in plan.modes:
                if kind == "serial":
                    continue
                for k in plan.workers:
                    if k > 1:
                        skipped.append(SkippedPoint(kind, k, R, str(exc)))
            continue
        serial_total = serial_medians["t_total_ns"]
        note(BenchRecord("serial", 1, plan.repetitions, speedup=1.0, **serial_medians))
        for kind in plan.modes:
            if kind == "serial":
                continue
            for k in plan.workers:
                if k == 1:
                    continue  # p=1 is the serial baseline point
                mode = ExecutionMode(kind, k)
                medians, _ = _measure_point(
                    data, spec, R, plan.stype, plan.seed, mode, limits,
                    plan.repetitions, baseline_t=baseline,
                )
                note(
                    BenchRecord(
                        kind, k, plan.repetitions,
                        speedup=compute_speedup(serial_total, medians["t_total_ns"]),
                        **medians,
                    )
                )
    return records, skipped


def format_records(records):
    """CSV rendering with the fixed header."""
    lines = [RECORD_HEADER]
    for r in records:
        lines.append(
            ",".join(
                (
                    r.mode,
                    str(r.p),
                    str(r.reps),
                    str(r.t_plan_ns),
                    str(r.t_scatter_ns),
                    str(r.t_eval_ns),
                    str(r.t_reduce_ns),
                    str(r.t_total_ns),
                    repr(r.speedup),
                    repr(r.efficiency),
                )
            )
        )
    return "\n".join(lines) + "\n"


def write_records(records, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_records(records))


def parse_records(text):
    """Inverse of format_records; efficiency is recomputed, not trusted."""
    lines = [line for line in text.strip().split("\n") if line]
    if not lines or lines[0] != RECORD_HEADER:
        raise ValueError("not a bench record file: header mismatch")
    records = []
    for line in lines[1:]:
        fields = line.split(",")
        if len(fields) != 10:
            raise ValueError(f"bad record line: {line!r}")
        records.append(
            BenchRecord(
                mode=fields[0],
                p=int(fields[1]),
                reps=int(fields[2]),
                t_plan_ns=int(fields[3]),
                t_scatter_ns=int(fields[4]),
                t_eval_ns=int(fields[5]),
                t_reduce_ns=int(fields[6]),
                t_total_ns=int(fields[7]),
                speedup=float(fields[8]),
            )
        )
    return records


def read_records(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_records(fh.read())
