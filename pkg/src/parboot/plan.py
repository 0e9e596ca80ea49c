"""Resample plans: every random index a run will use, generated up front.

Plan generation is deliberately serial and master-only.  All R rows of
n with-replacement indices come from a single deterministic stream (see
:mod:`parboot.rng`), in resample order, before any parallel work
starts.  Parallel execution therefore consumes exactly the same
randomness as serial execution, which is what makes the two paths
bit-comparable.
"""

import enum
import struct
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import (
    ArithmeticOverflowError,
    IndexOutOfRangeError,
    PlanTooLargeError,
    ZeroTotalError,
)

# Size model: 8 bytes per index plus a fixed header, matching the dump
# file layout below.
INDEX_BYTES = 8
HEADER_BYTES = 32

_DUMP_MAGIC = b"RPLN"
_DUMP_VERSION = 1
_DUMP_HEADER = struct.Struct("<4sIQQQ")  # magic, version, n, R, seed

_WEIGHT_SUM_TOL = 1e-12

# Instrumentation: bumped once per generate_plan call so tests can
# observe that a run generates its plan exactly once.
_generation_count = 0


def generation_count():
    return _generation_count


class Stype(str, enum.Enum):
    """How a resample is presented to the statistic."""

    INDICES = "i"
    FREQUENCIES = "f"
    WEIGHTS = "w"


@dataclass(frozen=True)
class RngConfig:
    """Fully specified generator identity: seed plus algorithm tag."""

    seed: int
    algorithm: str = rng.ALGORITHM

    def __post_init__(self):
        if not 0 <= self.seed < 1 << 64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")
        if self.algorithm != rng.ALGORITHM:
            raise ValueError(
                f"unknown generator {self.algorithm!r}; this build provides "
                f"{rng.ALGORITHM!r}"
            )


@dataclass(frozen=True)
class SampleView:
    """One resample in the representation a statistic asked for."""

    stype: Stype
    values: np.ndarray = field(compare=False)

    def __post_init__(self):
        v = self.values
        if self.stype is Stype.FREQUENCIES:
            total = int(v.sum())
            if total != v.shape[0]:
                raise ValueError(
                    f"frequencies must sum to n={v.shape[0]}, got {total}"
                )
        elif self.stype is Stype.WEIGHTS:
            if abs(float(v.sum()) - 1.0) > _WEIGHT_SUM_TOL:
                raise ValueError("weights must sum to 1")

    @property
    def n(self):
        return self.values.shape[0]


def indices_view(indices):
    return SampleView(Stype.INDICES, np.asarray(indices, dtype=np.int64))


def frequencies_view(freqs):
    return SampleView(Stype.FREQUENCIES, np.asarray(freqs, dtype=np.int64))


def weights_view(weights):
    return SampleView(Stype.WEIGHTS, np.asarray(weights, dtype=np.float64))


def identity_view(stype, n):
    """The view under which a statistic reproduces its original-data value."""
    stype = Stype(stype)
    if stype is Stype.INDICES:
        return indices_view(np.arange(n, dtype=np.int64))
    if stype is Stype.FREQUENCIES:
        return frequencies_view(np.ones(n, dtype=np.int64))
    return weights_view(np.full(n, 1.0 / n))


def row_view(row, n, stype):
    """Convert one plan row to the requested sample representation."""
    stype = Stype(stype)
    if stype is Stype.INDICES:
        return indices_view(row)
    freqs = indices_to_frequencies(row, n)
    if stype is Stype.FREQUENCIES:
        return frequencies_view(freqs)
    return weights_view(frequencies_to_weights(freqs))


@dataclass(frozen=True)
class ResamplePlan:
    """R rows of n resample indices plus the config that produced them."""

    rows: np.ndarray = field(compare=False)
    rng_config: RngConfig

    @property
    def R(self):
        return self.rows.shape[0]

    @property
    def n(self):
        return self.rows.shape[1]


def plan_bytes(n, R):
    """Bytes needed to hold an R x n index plan, incl. header overhead.

    Computed exactly; totals that do not fit in 64 bits are reported as
    an error rather than silently wrapped.
    """
    if n < 1 or R < 1:
        raise ValueError("n and R must be >= 1")
    total = R * n * INDEX_BYTES + HEADER_BYTES
    if total >= 1 << 64:
        raise ArithmeticOverflowError(
            f"plan size R*n*{INDEX_BYTES}+{HEADER_BYTES} overflows 64-bit "
            f"arithmetic for n={n}, R={R}"
        )
    return total


def generate_plan(n, R, rng_config, max_bytes=None):
    """Draw the full R x n index plan from the configured generator.

    Deterministic in ``rng_config`` and independent of worker count or
    execution mode.  ``max_bytes``, when given, bounds the in-memory
    plan size before anything is allocated.
    """
    if n < 1 or R < 1:
        raise ValueError("n and R must be >= 1")
    if isinstance(rng_config, int):
        rng_config = RngConfig(rng_config)
    needed = plan_bytes(n, R)
    if max_bytes is not None and needed > max_bytes:
        raise PlanTooLargeError(needed, max_bytes)
    global _generation_count
    _generation_count += 1
    flat = rng.draw_indices(rng_config.seed, n, R * n)
    rows = flat.reshape(R, n)
    rows.setflags(write=False)
    return ResamplePlan(rows, rng_config)


def indices_to_frequencies(row, n):
    """Count occurrences of each observation index in one resample row."""
    row = np.asarray(row, dtype=np.int64)
    if row.size and (row.min() < 0 or row.max() >= n):
        raise IndexOutOfRangeError(
            f"indices must lie in [0, {n}), got range "
            f"[{row.min()}, {row.max()}]"
        )
    return np.bincount(row, minlength=n).astype(np.int64)


def frequencies_to_weights(freqs):
    """Normalize per-observation counts to weights summing to 1."""
    freqs = np.asarray(freqs)
    total = int(freqs.sum())
    if total == 0:
        raise ZeroTotalError("frequency vector sums to zero")
    return freqs / float(total)


def write_plan(plan, path):
    """Dump a plan: 32-byte header then row-major little-endian indices."""
    header = _DUMP_HEADER.pack(
        _DUMP_MAGIC, _DUMP_VERSION, plan.n, plan.R, plan.rng_config.seed
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(plan.rows.astype("<i8", copy=False).tobytes())


def read_plan(path):
    with open(path, "rb") as fh:
        header = fh.read(_DUMP_HEADER.size)
        if len(header) != _DUMP_HEADER.size:
            raise ValueError(f"{path}: truncated plan header")
        magic, version, n, R, seed = _DUMP_HEADER.unpack(header)
        if magic != _DUMP_MAGIC:
            raise ValueError(f"{path}: not a plan dump")
        if version != _DUMP_VERSION:
            raise ValueError(f"{path}: unsupported plan version {version}")
        body = fh.read()
    rows = np.frombuffer(body, dtype="<i8")
    if rows.size != n * R:
        raise ValueError(f"{path}: expected {n * R} indices, found {rows.size}")
    rows = rows.astype(np.int64).reshape(R, n)
    if rows.size and (rows.min() < 0 or rows.max() >= n):
        raise IndexOutOfRangeError(f"{path}: plan contains out-of-range indices")
    rows.setflags(write=False)
    return ResamplePlan(rows, RngConfig(seed))
