"""Parallel bootstrap execution.

The pipeline is always the same four phases, whatever the execution
mode:

1. plan     - all resample indices drawn serially on the master;
2. scatter  - dataset, statistic and each worker's contiguous slice of
              plan rows delivered to the workers;
3. evaluate - every worker computes its replicates locally, in plan
              order, with no cross-worker communication;
4. reduce   - per-worker result lists combined pairwise up a binary
              tree into the R x p replicate matrix.

Because the plan is fixed before any parallelism starts, each replicate
is a pure function of its plan row, and the reduce step is ordered
concatenation, the resulting (t0, t) is bit-identical across execution
modes and worker counts.

Modes:

* serial: one in-process worker, no scatter cost;
* threaded: k in-process workers sharing the dataset and plan by
  reference;
* multiprocess: k local worker processes, each receiving a full copy of
  the dataset over a length-prefixed byte-stream channel
  (:mod:`parboot.wire`).  Shared payloads fan out along a binary tree
  of depth ceil(log2 k); plan slices are pushed point to point.  This
  emulates one-process-per-node execution, including its distribution
  and gathering costs, on a single machine.

Each phase is timed separately; in multiprocess mode the evaluate phase
runs from the last scatter byte to the last gathered result, so it
includes result upload time.
"""

import os
import socket
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import multiprocessing
import numpy as np

from . import wire
from .dataset import Dataset
from .errors import (
    ChannelClosedError,
    EvaluationError,
    MissingRankError,
    OverlappingBlocksError,
    PlanTooLargeError,
    WorkerSpawnFailure,
)
from .plan import (
    RngConfig,
    Stype,
    generate_plan,
    identity_view,
    plan_bytes,
)
from .statistic import (
    StatisticSpec,
    canonical_stype,
    eval_rows,
    eval_statistic,
    parse_statistic,
    probe_dimension,
    require_view,
)

DEFAULT_MAX_PLAN_BYTES = 1 << 30  # 1 GiB
WORKERS_ENV_VAR = "PARBOOT_WORKERS"

_EVAL_CHUNK = 2048
_MODE_KINDS = ("serial", "threaded", "multiprocess")


@dataclass(frozen=True)
class ExecutionMode:
    kind: str
    workers: int = 1

    def __post_init__(self):
        if self.kind not in _MODE_KINDS:
            raise ValueError(f"unknown mode {self.kind!r}")
        if self.workers < 1:
            raise ValueError("worker count must be >= 1")
        if self.kind == "serial" and self.workers != 1:
            raise ValueError("serial mode has exactly one worker")

    @classmethod
    def serial(cls):
        return cls("serial", 1)

    @classmethod
    def threaded(cls, k):
        return cls("threaded", k)

    @classmethod
    def multiprocess(cls, k):
        return cls("multiprocess", k)


@dataclass(frozen=True)
class EngineLimits:
    """Master-side memory ceiling for the plan plus gathered replicates."""

    max_plan_bytes: int = DEFAULT_MAX_PLAN_BYTES

    def __post_init__(self):
        if self.max_plan_bytes <= 0:
            raise ValueError("max_plan_bytes must be positive")


@dataclass(frozen=True)
class WorkerBlock:
    rank: int
    start: int
    length: int


@dataclass
class LocalResults:
    rank: int
    start: int
    replicates: np.ndarray  # (length, p), plan-row order


@dataclass(frozen=True)
class PhaseTimings:
    plan_ns: int
    scatter_ns: int
    evaluate_ns: int
    reduce_ns: int
    total_ns: int


@dataclass(frozen=True)
class BootResult:
    t0: np.ndarray
    t: np.ndarray  # (R, p); row i belongs to plan row i in every mode
    R: int
    stype: Stype
    rng_config: RngConfig
    mode: ExecutionMode
    timing: PhaseTimings


def default_workers():
    """Worker count when none is given: env override, else CPU count."""
    value = os.environ.get(WORKERS_ENV_VAR)
    if value:
        count = int(value)
        if count < 1:
            raise ValueError(f"{WORKERS_ENV_VAR} must be >= 1, got {value}")
        return count
    return os.cpu_count() or 1


def partition(R, k):
    """Split [0, R) into k contiguous blocks, lengths within one.

    The first R mod k ranks get the longer blocks.  Ranks beyond R get
    empty blocks positioned at the end of the range.
    """
    if R < 1 or k < 1:
        raise ValueError("R and k must be >= 1")
    base, rem = divmod(R, k)
    blocks = []
    start = 0
    for rank in range(k):
        length = base + (1 if rank < rem else 0)
        blocks.append(WorkerBlock(rank, start, length))
        start += length
    return blocks


def fanout_levels(k):
    """Binary-tree broadcast waves for ranks 1..k-1.

    Rank 0 receives the payload directly from the master; afterwards
    each wave doubles the set of holders: [1], [2, 3], [4..7], ...
    ceil(log2 k) waves in total.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    levels = []
    have = 1
    while have < k:
        levels.append(list(range(have, min(2 * have, k))))
        have *= 2
    return levels


class _CancelledRun(Exception):
    """Internal: another worker already failed; abandon this block."""


def evaluate_block(data, spec, rows, stype, rank=0, start=0, p=None, cancel=None):
    """Evaluate one worker's plan rows, in plan order.

    Raises :class:`EvaluationError` carrying (rank, resample index) if
    the statistic produces a non-finite replicate.
    """
    if p is None:
        p = probe_dimension(spec, data)
    out = np.empty((rows.shape[0], p), dtype=np.float64)
    for s in range(0, rows.shape[0], _EVAL_CHUNK):
        if cancel is not None and cancel.is_set():
            raise _CancelledRun()
        chunk = eval_rows(spec, data, rows[s:s + _EVAL_CHUNK], stype)
        finite = np.isfinite(chunk).all(axis=1)
        if not finite.all():
            bad = int(np.argmin(finite))
            raise EvaluationError(
                rank, start + s + bad, "statistic produced a non-finite value"
            )
        out[s:s + chunk.shape[0]] = chunk
    return LocalResults(rank, start, out)


def _merge_blocks(a, b):
    """Ordered concatenation of two adjacent (start, replicates) blocks."""
    a_start, a_vals = a
    b_start, b_vals = b
    if a_vals.shape[0] == 0:
        return b
    if b_vals.shape[0] == 0:
        return a
    end = a_start + a_vals.shape[0]
    if b_start < end:
        raise OverlappingBlocksError(
            f"blocks overlap: [{a_start}, {end}) and "
            f"[{b_start}, {b_start + b_vals.shape[0]})"
        )
    if b_start > end:
        raise MissingRankError(
            f"gap in replicate coverage between row {end} and row {b_start}"
        )
    return a_start, np.concatenate((a_vals, b_vals), axis=0)


def tree_reduce(locals_list, k, expected_rows=None):
    """Combine per-worker result lists pairwise up a binary tree.

    The combine operation is rank-ordered concatenation, so the result
    equals a linear left-fold of the same lists; the tree shape only
    changes the work schedule, giving ceil(log2 k) combine levels.
    """
    ranks = sorted(lr.rank for lr in locals_list)
    if ranks != list(range(k)):
        missing = sorted(set(range(k)) - set(ranks))
        raise MissingRankError(
            f"expected one result list per rank 0..{k - 1}; missing {missing}"
        )
    by_rank = sorted(locals_list, key=lambda lr: lr.rank)
    items = [(lr.start, lr.replicates) for lr in by_rank]
    while len(items) > 1:
        merged = []
        for i in range(0, len(items), 2):
            if i + 1 < len(items):
                merged.append(_merge_blocks(items[i], items[i + 1]))
            else:
                merged.append(items[i])
        items = merged
    start, matrix = items[0]
    if matrix.shape[0] and start != 0:
        raise MissingRankError(f"result matrix starts at row {start}, not 0")
    if expected_rows is not None and matrix.shape[0] != expected_rows:
        raise MissingRankError(
            f"result matrix has {matrix.shape[0]} rows, expected {expected_rows}"
        )
    return matrix


def _exec_serial(data, spec, plan_rows, stype, p):
    s0 = time.perf_counter_ns()
    scatter_ns = time.perf_counter_ns() - s0  # sharing by reference
    e0 = time.perf_counter_ns()
    local = evaluate_block(data, spec, plan_rows, stype, rank=0, start=0, p=p)
    evaluate_ns = time.perf_counter_ns() - e0
    return [local], scatter_ns, evaluate_ns


def _exec_threaded(data, spec, plan_rows, stype, p, k):
    s0 = time.perf_counter_ns()
    blocks = partition(plan_rows.shape[0], k)
    slices = [plan_rows[b.start:b.start + b.length] for b in blocks]
    scatter_ns = time.perf_counter_ns() - s0
    e0 = time.perf_counter_ns()
    cancel = threading.Event()
    locals_list = []
    first_error = None
    with ThreadPoolExecutor(max_workers=k) as pool:
        futures = [
            pool.submit(
                evaluate_block, data, spec, slices[b.rank], stype,
                b.rank, b.start, p, cancel,
            )
            for b in blocks
        ]
        for future in futures:
            try:
                locals_list.append(future.result())
            except _CancelledRun:
                pass
            except Exception as exc:
                cancel.set()
                if first_error is None:
                    first_error = exc
    if first_error is not None:
        raise first_error
    evaluate_ns = time.perf_counter_ns() - e0
    return locals_list, scatter_ns, evaluate_ns


def _worker_main(rank, sock):
    """Worker process loop: receive payloads, evaluate, reply, shut down."""
    data = None
    spec = None
    while True:
        try:
            tag, payload = wire.recv_frame(sock)
        except (EOFError, OSError):
            return
        if tag == wire.SHUTDOWN:
            return
        if tag == wire.DATASET:
            data = wire.decode_dataset(payload)
        elif tag == wire.SPEC:
            spec = wire.decode_spec(payload)
            wire.send_frame(sock, wire.ACK)
        elif tag == wire.PLAN_BLOCK:
            start, stype, rows = wire.decode_plan_block(payload)
            try:
                p = probe_dimension(spec, data)
                local = evaluate_block(data, spec, rows, stype, rank, start, p)
                wire.send_frame(
                    sock, wire.RESULTS,
                    wire.encode_results(rank, start, local.replicates),
                )
            except EvaluationError as exc:
                wire.send_frame(
                    sock, wire.ERROR,
                    wire.encode_error(rank, exc.resample_index, exc.detail),
                )
            except Exception as exc:
                wire.send_frame(
                    sock, wire.ERROR,
                    wire.encode_error(rank, None, f"{type(exc).__name__}: {exc}"),
                )


def _worker_entry(rank, sock):
    try:
        _WORKER_TARGET(rank, sock)
    finally:
        sock.close()


# Indirection so tests can substitute a misbehaving worker.
_WORKER_TARGET = _worker_main


def _mp_context():
    methods = multiprocessing.get_all_start_methods()
    return multiprocessing.get_context("fork" if "fork" in methods else None)


class _MultiProcessSession:
    """Master side of one multiprocess run: k workers over socket pairs."""

    def __init__(self, k):
        self.k = k
        self.socks = []
        self.procs = []

    def spawn(self):
        ctx = _mp_context()
        for rank in range(self.k):
            parent, child = socket.socketpair()
            try:
                proc = ctx.Process(
                    target=_worker_entry, args=(rank, child), daemon=True
                )
                proc.start()
            except OSError as exc:
                parent.close()
                child.close()
                self.shutdown()
                raise WorkerSpawnFailure(
                    f"could not spawn worker rank {rank}: {exc}"
                ) from exc
            child.close()
            self.socks.append(parent)
            self.procs.append(proc)

    def _deliver(self, rank, dataset_chunks, spec_payload):
        try:
            wire.send_frame(self.socks[rank], wire.DATASET, dataset_chunks)
            wire.send_frame(self.socks[rank], wire.SPEC, spec_payload)
            tag, _ = wire.recv_frame(self.socks[rank])
        except (EOFError, OSError, BrokenPipeError) as exc:
            raise ChannelClosedError(rank, str(exc)) from exc
        if tag != wire.ACK:
            raise ChannelClosedError(rank, f"expected ACK, got tag {tag}")

    def broadcast(self, data, spec):
        """Tree fan-out of the shared payloads, one synchronized wave at
        a time; sends within a wave run concurrently."""
        dataset_chunks = wire.encode_dataset(data)
        spec_payload = wire.encode_spec(spec)
        for targets in [[0]] + fanout_levels(self.k):
            if len(targets) == 1:
                self._deliver(targets[0], dataset_chunks, spec_payload)
                continue
            with ThreadPoolExecutor(max_workers=len(targets)) as pool:
                futures = {
                    pool.submit(self._deliver, r, dataset_chunks, spec_payload): r
                    for r in targets
                }
                for future in futures:
                    future.result()

    def send_plan(self, plan_rows, blocks, stype, n):
        for block in blocks:
            rows = plan_rows[block.start:block.start + block.length]
            try:
                wire.send_frame(
                    self.socks[block.rank], wire.PLAN_BLOCK,
                    wire.encode_plan_block(block.start, n, stype, rows),
                )
            except (OSError, BrokenPipeError) as exc:
                raise ChannelClosedError(block.rank, str(exc)) from exc

    def collect(self):
        """One RESULTS or ERROR frame per rank; raise after draining."""
        locals_list = []
        failure = None
        for rank in range(self.k):
            try:
                tag, payload = wire.recv_frame(self.socks[rank])
            except (EOFError, OSError) as exc:
                failure = failure or ChannelClosedError(rank, str(exc))
                continue
            if tag == wire.RESULTS:
                got_rank, start, replicates = wire.decode_results(payload)
                locals_list.append(LocalResults(got_rank, start, replicates))
            elif tag == wire.ERROR:
                got_rank, index, message = wire.decode_error(payload)
                failure = failure or EvaluationError(got_rank, index, message)
            else:
                failure = failure or ChannelClosedError(
                    rank, f"unexpected tag {tag}"
                )
        if failure is not None:
            raise failure
        return locals_list

    def shutdown(self):
        for sock in self.socks:
            try:
                wire.send_frame(sock, wire.SHUTDOWN)
            except OSError:
                pass
        for proc in self.procs:
            proc.join(timeout=5)
            if proc.is_alive():
                proc.terminate()
                proc.join(timeout=5)
        for sock in self.socks:
            try:
                sock.close()
            except OSError:
                pass
        self.socks = []
        self.procs = []


def _exec_multiprocess(data, spec, plan_rows, stype, p, k):
    session = _MultiProcessSession(k)
    try:
        s0 = time.perf_counter_ns()
        session.spawn()
        blocks = partition(plan_rows.shape[0], k)
        session.broadcast(data, spec)
        session.send_plan(plan_rows, blocks, stype, data.n)
        scatter_ns = time.perf_counter_ns() - s0
        e0 = time.perf_counter_ns()
        locals_list = session.collect()
        evaluate_ns = time.perf_counter_ns() - e0
    finally:
        session.shutdown()
    return locals_list, scatter_ns, evaluate_ns


def run_bootstrap(data, spec, R, stype=None, seed=0, mode=None, limits=None):
    """Run one full bootstrap and return its :class:`BootResult`.

    Parameters
    ----------
    data : Dataset
    spec : StatisticSpec or str
        A spec object or a CLI-style statistic name.
    R : int
        Number of resamples.
    stype : Stype, str or None
        Sample representation handed to the statistic; defaults to the
        statistic's canonical representation.
    seed : int or RngConfig
    mode : ExecutionMode or None (serial)
    limits : EngineLimits or None

    For fixed (data, spec, R, stype, seed) the returned (t0, t) is
    bit-identical for every mode and worker count.
    """
    start_ns = time.perf_counter_ns()
    if not isinstance(data, Dataset):
        raise TypeError("data must be a Dataset")
    if isinstance(spec, str):
        spec = parse_statistic(spec)
    if not isinstance(spec, StatisticSpec):
        raise TypeError("spec must be a StatisticSpec or statistic name")
    if R < 1:
        raise ValueError("R must be >= 1")
    mode = mode or ExecutionMode.serial()
    limits = limits or EngineLimits()
    rng_config = seed if isinstance(seed, RngConfig) else RngConfig(seed)
    stype = canonical_stype(spec) if stype is None else Stype(stype)
    require_view(spec, stype)

    p = probe_dimension(spec, data)
    required = required_master_bytes(data.n, R, p)
    if required > limits.max_plan_bytes:
        raise PlanTooLargeError(
            required, limits.max_plan_bytes,
            what=f"resample plan plus gathered replicates for n={data.n}, R={R}",
        )

    t0_value = eval_statistic(spec, data, identity_view(stype, data.n))

    plan0 = time.perf_counter_ns()
    plan = generate_plan(data.n, R, rng_config)
    plan_ns = time.perf_counter_ns() - plan0

    if mode.kind == "serial":
        locals_list, scatter_ns, evaluate_ns = _exec_serial(
            data, spec, plan.rows, stype, p
        )
    elif mode.kind == "threaded":
        locals_list, scatter_ns, evaluate_ns = _exec_threaded(
            data, spec, plan.rows, stype, p, mode.workers
        )
    else:
        locals_list, scatter_ns, evaluate_ns = _exec_multiprocess(
            data, spec, plan.rows, stype, p, mode.workers
        )

    reduce0 = time.perf_counter_ns()
    t = tree_reduce(locals_list, mode.workers, expected_rows=R)
    reduce_ns = time.perf_counter_ns() - reduce0

    timing = PhaseTimings(
        plan_ns=plan_ns,
        scatter_ns=scatter_ns,
        evaluate_ns=evaluate_ns,
        reduce_ns=reduce_ns,
        total_ns=time.perf_counter_ns() - start_ns,
    )
    return BootResult(
        t0=t0_value, t=t, R=R, stype=stype, rng_config=rng_config,
        mode=mode, timing=timing,
    )


def required_master_bytes(n, R, p):
    """Master-side bytes for the plan plus the gathered R x p matrix."""
    return plan_bytes(n, R) + R * p * 8
