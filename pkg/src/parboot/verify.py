"""Mode-equivalence verification.

The engine's central guarantee is that serial and parallel runs of the
same (data, statistic, R, stype, seed) produce bit-identical (t0, t).
This module runs that check over a built-in matrix of cases: small
two-column tables of several sizes, all built-in statistic kinds,
several resample counts and seeds, threaded and multiprocess modes at
several worker counts.

Cases where the statistic is undefined for the data (sample standard
deviation of a single observation) must fail identically instead:
same error type at the same (rank, resample index) in every mode.
"""

from dataclasses import dataclass

import numpy as np

from . import rng
from .dataset import Dataset
from .engine import ExecutionMode, run_bootstrap
from .errors import ParbootError
from .statistic import parse_statistic

SIZES = (1, 5, 49, 200)
STATISTICS = ("mean", "median", "sd", "ratio:x:u")
RESAMPLES = (1, 7, 999)
SEEDS = (0, 42)
THREADED_WORKERS = (2, 3, 8)
MULTIPROCESS_WORKERS = (2, 4)


@dataclass(frozen=True)
class CaseResult:
    n: int
    statistic: str
    R: int
    seed: int
    mode: ExecutionMode
    ok: bool
    detail: str = ""


def make_table(n, seed):
    """Deterministic two-column positive table for equivalence cases."""
    x = 1.0 + 4.0 * rng.uniform01(seed, 0, n)
    u = 0.5 + 2.0 * rng.uniform01(seed, n, n)
    return Dataset(("x", "u"), (x, u))


def _outcome(data, statistic, R, seed, mode):
    """(t0, t) on success, or a comparable error signature on failure."""
    try:
        result = run_bootstrap(data, parse_statistic(statistic), R, seed=seed, mode=mode)
        return ("ok", result.t0, result.t)
    except ParbootError as exc:
        rank = getattr(exc, "rank", None)
        index = getattr(exc, "resample_index", None)
        return ("error", type(exc).__name__, rank, index)


def _compare(baseline, candidate):
    if baseline[0] != candidate[0]:
        return False, f"serial {baseline[0]} vs parallel {candidate[0]}"
    if baseline[0] == "error":
        if baseline[1:] != candidate[1:]:
            return False, f"error signatures differ: {baseline[1:]} vs {candidate[1:]}"
        return True, ""
    if not np.array_equal(baseline[1], candidate[1]):
        return False, "t0 differs"
    if not np.array_equal(baseline[2], candidate[2]):
        return False, "replicate matrix differs"
    return True, ""


def parallel_modes(threaded=THREADED_WORKERS, multiprocess=MULTIPROCESS_WORKERS):
    modes = [ExecutionMode.threaded(k) for k in threaded]
    modes += [ExecutionMode.multiprocess(k) for k in multiprocess]
    return modes


def run_suite(
    sizes=SIZES,
    statistics=STATISTICS,
    resamples=RESAMPLES,
    seeds=SEEDS,
    modes=None,
    progress=None,
):
    """Run the full matrix; returns a list of CaseResult."""
    modes = parallel_modes() if modes is None else modes
    results = []
    for n in sizes:
        for seed in seeds:
            data = make_table(n, seed)
            for statistic in statistics:
                for R in resamples:
                    baseline = _outcome(data, statistic, R, seed, ExecutionMode.serial())
                    for mode in modes:
                        candidate = _outcome(data, statistic, R, seed, mode)
                        ok, detail = _compare(baseline, candidate)
                        case = CaseResult(n, statistic, R, seed, mode, ok, detail)
                        results.append(case)
                        if progress is not None:
                            progress(case)
    return results


def all_equivalent(results):
    return all(case.ok for case in results)
