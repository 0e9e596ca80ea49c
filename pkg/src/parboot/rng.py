"""Deterministic counter-based random number generation.

Everything random in this package derives from one fixed generator so
that a (seed, stream position) pair maps to the same output on every
platform.  The generator is SplitMix64 used in counter mode: the k-th
64-bit word of a stream is

    word(seed, k) = mix64(seed + (k + 1) * 0x9E3779B97F4A7C15)   (mod 2^64)

where ``mix64`` is the SplitMix64 finalizer (xor-shift / multiply /
xor-shift / multiply / xor-shift).  There is no sequential state: any
word can be computed directly from its counter, which keeps generation
reproducible no matter how it is chunked internally.

Bounded draws in [0, n) use masked rejection sampling, which is free of
modulo bias.  Each 64-bit word is split into equal lanes, least
significant lane first; the lane width is the smallest of 16, 32 or 64
bits whose range covers n.  A lane is masked down to
``2^ceil(log2 n) - 1`` and accepted iff the masked value is below n.
Accepted values, in stream order, are the draws.  The special case
n == 1 consumes no words and yields zeros.

Index generation runs through a numba kernel when numba is importable
and falls back to a chunked numpy implementation otherwise; both
produce identical streams (this is enforced by the test suite against
an independently written reference).
"""

import numpy as np

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    _HAVE_NUMBA = False

# Set to False to force the numpy fallback (used by tests to cross-check
# the two implementations).
USE_NUMBA = True

ALGORITHM = "splitmix64-lane-v1"

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_MAX_N = 1 << 62
# Always-store compaction may write up to 3 slots past the requested
# count; buffers passed to the kernels need this much slack.
_SLACK = 3


def _mask_for(n):
    """Smallest all-ones mask covering n - 1."""
    return (1 << (n - 1).bit_length()) - 1 if n > 1 else 0


def _lane_bits(n):
    if n <= 1 << 16:
        return 16
    if n <= 1 << 32:
        return 32
    return 64


def words(seed, start, count):
    """Return ``count`` stream words for counters [start, start + count)."""
    s = np.uint64(seed)
    golden = np.uint64(_GOLDEN)
    m1 = np.uint64(_MIX1)
    m2 = np.uint64(_MIX2)
    c = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    z = s + c * golden
    z = (z ^ (z >> np.uint64(30))) * m1
    z = (z ^ (z >> np.uint64(27))) * m2
    return z ^ (z >> np.uint64(31))


def uniform01(seed, start, count):
    """Floats in [0, 1) with 53-bit resolution, one per stream word."""
    return (words(seed, start, count) >> np.uint64(11)) * (2.0 ** -53)


if _HAVE_NUMBA:

    @numba.njit(cache=True)
    def _fill_lanes16(seed, n, count, out):  # pragma: no cover - jitted
        golden = np.uint64(_GOLDEN)
        m1 = np.uint64(_MIX1)
        m2 = np.uint64(_MIX2)
        un = np.int64(n)
        v = n - 1
        nbits = 0
        while v > 0:
            v >>= 1
            nbits += 1
        mask = np.uint64((1 << nbits) - 1)
        chunk = 1 << 14
        buf = np.empty(chunk, np.uint64)
        filled = 0
        c = np.uint64(0)
        s = np.uint64(seed)
        one = np.uint64(1)
        while filled < count:
            for i in range(chunk):
                z = s + (c + np.uint64(i) + one) * golden
                z = (z ^ (z >> np.uint64(30))) * m1
                z = (z ^ (z >> np.uint64(27))) * m2
                buf[i] = z ^ (z >> np.uint64(31))
            c += np.uint64(chunk)
            i = 0
            while i < chunk and filled < count:
                w = buf[i]
                cand = np.int64(w & mask)
                out[filled] = cand
                filled += np.int64(cand < un)
                cand = np.int64((w >> np.uint64(16)) & mask)
                out[filled] = cand
                filled += np.int64(cand < un)
                cand = np.int64((w >> np.uint64(32)) & mask)
                out[filled] = cand
                filled += np.int64(cand < un)
                cand = np.int64((w >> np.uint64(48)) & mask)
                out[filled] = cand
                filled += np.int64(cand < un)
                i += 1

    @numba.njit(cache=True)
    def _fill_lanes32(seed, n, count, out):  # pragma: no cover - jitted
        golden = np.uint64(_GOLDEN)
        m1 = np.uint64(_MIX1)
        m2 = np.uint64(_MIX2)
        un = np.int64(n)
        v = n - 1
        nbits = 0
        while v > 0:
            v >>= 1
            nbits += 1
        mask = np.uint64((1 << nbits) - 1)
        chunk = 1 << 14
        buf = np.empty(chunk, np.uint64)
        filled = 0
        c = np.uint64(0)
        s = np.uint64(seed)
        one = np.uint64(1)
        while filled < count:
            for i in range(chunk):
                z = s + (c + np.uint64(i) + one) * golden
                z = (z ^ (z >> np.uint64(30))) * m1
                z = (z ^ (z >> np.uint64(27))) * m2
                buf[i] = z ^ (z >> np.uint64(31))
            c += np.uint64(chunk)
            i = 0
            while i < chunk and filled < count:
                w = buf[i]
                cand = np.int64(w & mask)
                out[filled] = cand
                filled += np.int64(cand < un)
                cand = np.int64((w >> np.uint64(32)) & mask)
                out[filled] = cand
                filled += np.int64(cand < un)
                i += 1

    @numba.njit(cache=True)
    def _fill_lanes64(seed, n, count, out):  # pragma: no cover - jitted
        golden = np.uint64(_GOLDEN)
        m1 = np.uint64(_MIX1)
        m2 = np.uint64(_MIX2)
        un = np.uint64(n)
        v = n - 1
        nbits = 0
        while v > 0:
            v >>= 1
            nbits += 1
        mask = np.uint64((1 << nbits) - 1)
        chunk = 1 << 14
        filled = 0
        c = np.uint64(0)
        s = np.uint64(seed)
        one = np.uint64(1)
        while filled < count:
            for i in range(chunk):
                z = s + (c + np.uint64(i) + one) * golden
                z = (z ^ (z >> np.uint64(30))) * m1
                z = (z ^ (z >> np.uint64(27))) * m2
                w = (z ^ (z >> np.uint64(31))) & mask
                out[filled] = np.int64(w)
                filled += np.int64(w < un)
                if filled >= count:
                    break
            c += np.uint64(chunk)


def _draw_numpy(seed, n, count, out):
    """Chunked numpy implementation of the same lane stream."""
    bits = _lane_bits(n)
    mask = np.uint64(_mask_for(n))
    shifts = [np.uint64(b) for b in range(0, 64, bits)]
    filled = 0
    c = 0
    chunk = 1 << 16
    while filled < count:
        w = words(seed, c, chunk)
        c += chunk
        lanes = np.empty((chunk, len(shifts)), dtype=np.uint64)
        for j, sh in enumerate(shifts):
            lanes[:, j] = (w >> sh) & mask
        flat = lanes.ravel()
        acc = flat[flat < np.uint64(n)]
        take = min(acc.size, count - filled)
        out[filled:filled + take] = acc[:take].astype(np.int64)
        filled += take


def draw_indices(seed, n, count):
    """Draw ``count`` uniform integers in [0, n) from the seed's stream.

    Pure function of (seed, n, count); the same arguments always yield
    the same array, regardless of the backing implementation.
    """
    if not 1 <= n <= _MAX_N:
        raise ValueError(f"n must be in [1, 2^62], got {n}")
    if count < 0:
        raise ValueError("count must be non-negative")
    base = np.empty(count + _SLACK, dtype=np.int64)
    if n == 1:
        base[:] = 0
        return base[:count]
    if count == 0:
        return base[:0]
    if USE_NUMBA and _HAVE_NUMBA:
        if n <= 1 << 16:
            _fill_lanes16(seed, n, count, base)
        elif n <= 1 << 32:
            _fill_lanes32(seed, n, count, base)
        else:
            _fill_lanes64(seed, n, count, base)
    else:
        _draw_numpy(seed, n, count, base)
    return base[:count]
