"""Statistics evaluated on each resample.

Built-in kinds:

``mean``, ``median``, ``sd``
    Scalar statistics over one column (the table's first column unless
    one is named).  For index and frequency views the resampled values
    are materialized first, then the plain statistic is computed, so
    the statistic sees an ordinary resampled dataset.  ``mean`` also
    accepts a weights view (sum of value*weight); ``median`` and ``sd``
    need a materialized resample and reject weights.

``ratio:<xcol>:<ucol>``
    Weighted ratio sum(x*w)/sum(u*w); accepts only the weights view.

``per-column:<stat>:<c1,c2,...>``
    A vector statistic applying one of the scalar kinds independently
    to several columns.

Evaluation is vectorized over blocks of resamples; results are
identical bit for bit to evaluating one row at a time (per-row
order statistics and per-row reductions do not depend on how rows are
grouped).  Adding a statistic kind means registering a block function
in ``_MATERIALIZED`` plus entries in the view/arity tables below; there
is deliberately no way to inject statistic code at run time.
"""

from dataclasses import dataclass

import numpy as np

from .errors import UnknownColumnError, UnknownStatisticError, UnsupportedViewError
from .plan import Stype, SampleView, identity_view, indices_to_frequencies

SCALAR_KINDS = ("mean", "median", "sd")
KINDS = SCALAR_KINDS + ("ratio", "per-column")

# Which sample representations each kind can evaluate.
_ACCEPTED = {
    "mean": frozenset((Stype.INDICES, Stype.FREQUENCIES, Stype.WEIGHTS)),
    "median": frozenset((Stype.INDICES, Stype.FREQUENCIES)),
    "sd": frozenset((Stype.INDICES, Stype.FREQUENCIES)),
    "ratio": frozenset((Stype.WEIGHTS,)),
}

_BATCH_TARGET = 2 << 20  # gathered elements per evaluation batch


@dataclass(frozen=True)
class StatisticSpec:
    """A named statistic plus the columns it reads."""

    kind: str
    columns: tuple = ()
    inner: str = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnknownStatisticError(f"unknown statistic kind {self.kind!r}")
        if self.kind == "ratio" and len(self.columns) != 2:
            raise UnknownStatisticError("ratio needs exactly two columns")
        if self.kind == "per-column":
            if self.inner not in SCALAR_KINDS:
                raise UnknownStatisticError(
                    f"per-column inner statistic must be one of {SCALAR_KINDS}"
                )
            if not self.columns:
                raise UnknownStatisticError("per-column needs at least one column")
        if self.kind in SCALAR_KINDS and len(self.columns) > 1:
            raise UnknownStatisticError(f"{self.kind} takes at most one column")


def parse_statistic(text):
    """Parse a CLI statistic name.

    Grammar: ``mean`` | ``median`` | ``sd`` (optionally ``:<column>``),
    ``ratio:<xcol>:<ucol>``, ``per-column:<stat>:<col1,col2,...>``.
    """
    parts = text.split(":")
    kind = parts[0]
    if kind in SCALAR_KINDS:
        if len(parts) == 1:
            return StatisticSpec(kind)
        if len(parts) == 2 and parts[1]:
            return StatisticSpec(kind, (parts[1],))
    elif kind == "ratio":
        if len(parts) == 3 and parts[1] and parts[2]:
            return StatisticSpec("ratio", (parts[1], parts[2]))
    elif kind == "per-column":
        if len(parts) == 3:
            cols = tuple(c for c in parts[2].split(",") if c)
            if parts[1] in SCALAR_KINDS and cols:
                return StatisticSpec("per-column", cols, parts[1])
    raise UnknownStatisticError(
        f"cannot parse statistic {text!r}; expected mean|median|sd[:col], "
        f"ratio:<xcol>:<ucol> or per-column:<stat>:<col1,col2,...>"
    )


def statistic_token(spec):
    """Inverse of parse_statistic; used on the wire and in reports."""
    if spec.kind == "per-column":
        return f"per-column:{spec.inner}:{','.join(spec.columns)}"
    if spec.columns:
        return f"{spec.kind}:{':'.join(spec.columns)}"
    return spec.kind


def accepted_stypes(spec):
    if spec.kind == "per-column":
        return _ACCEPTED[spec.inner]
    return _ACCEPTED[spec.kind]


def canonical_stype(spec):
    """The representation t0 evaluates under (indices when accepted)."""
    if Stype.INDICES in accepted_stypes(spec):
        return Stype.INDICES
    return Stype.WEIGHTS


def resolve_columns(spec, data):
    """Concrete column names the statistic reads, validated against data."""
    if spec.kind in SCALAR_KINDS and not spec.columns:
        cols = (data.names[0],)
    else:
        cols = spec.columns
    for name in cols:
        if not data.has_column(name):
            raise UnknownColumnError(
                f"statistic references column {name!r}, not in table "
                f"{list(data.names)!r}"
            )
    return cols


def probe_dimension(spec, data):
    """Output dimension p of the statistic against this dataset."""
    cols = resolve_columns(spec, data)
    return len(cols) if spec.kind == "per-column" else 1


def _mean_rows(block):
    return block.mean(axis=1)


def _median_rows(block):
    # Selection, not a full sort; even lengths average the two middles.
    n = block.shape[1]
    mid = n // 2
    if n % 2:
        return np.partition(block, mid, axis=1)[:, mid]
    part = np.partition(block, (mid - 1, mid), axis=1)
    return 0.5 * (part[:, mid - 1] + part[:, mid])


def _sd_rows(block):
    # Two-pass sample standard deviation, divisor n - 1.
    n = block.shape[1]
    mean = block.mean(axis=1)
    dev = block - mean[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.sqrt((dev * dev).sum(axis=1) / (n - 1))


_MATERIALIZED = {"mean": _mean_rows, "median": _median_rows, "sd": _sd_rows}


def require_view(spec, stype):
    """Validate that the statistic accepts this representation."""
    stype = Stype(stype)
    if stype not in accepted_stypes(spec):
        allowed = ", ".join(sorted(s.value for s in accepted_stypes(spec)))
        raise UnsupportedViewError(
            f"statistic {statistic_token(spec)!r} does not accept stype "
            f"{stype.value!r} (allowed: {allowed})"
        )
    return stype


def _eval_indices_block(spec, data, cols, rows, out):
    for j, name in enumerate(cols):
        col = data.column(name)
        kind = spec.inner if spec.kind == "per-column" else spec.kind
        fn = _MATERIALIZED[kind]
        batch = max(1, min(256, _BATCH_TARGET // max(rows.shape[1], 1)))
        for s in range(0, rows.shape[0], batch):
            block = np.take(col, rows[s:s + batch])
            out[s:s + batch, j] = fn(block)


def _eval_frequencies_block(spec, data, cols, rows_or_freqs, out, already_freqs):
    n = data.n
    kind = spec.inner if spec.kind == "per-column" else spec.kind
    fn = _MATERIALIZED[kind]
    for i in range(rows_or_freqs.shape[0]):
        freqs = (
            rows_or_freqs[i]
            if already_freqs
            else indices_to_frequencies(rows_or_freqs[i], n)
        )
        for j, name in enumerate(cols):
            xs = np.repeat(data.column(name), freqs)
            out[i, j] = fn(xs[None, :])[0]


def _weights_matrix(rows, n):
    # Batched per-row frequency counts via one offset bincount.
    count = rows.shape[0]
    offsets = np.arange(count, dtype=np.int64)[:, None] * n
    freqs = np.bincount((rows + offsets).ravel(), minlength=count * n)
    return freqs.reshape(count, n) / float(n)


def _eval_weights_block(spec, data, cols, weights, out):
    if spec.kind == "ratio":
        x = data.column(cols[0])
        u = data.column(cols[1])
        out[:, 0] = (x[None, :] * weights).sum(axis=1) / (
            (u[None, :] * weights).sum(axis=1)
        )
        return
    kind = spec.inner if spec.kind == "per-column" else spec.kind
    if kind != "mean":
        raise UnsupportedViewError(
            f"{kind} needs a materialized resample and cannot use weights"
        )
    for j, name in enumerate(cols):
        col = data.column(name)
        out[:, j] = (col[None, :] * weights).sum(axis=1)


def eval_rows(spec, data, rows, stype):
    """Evaluate the statistic on a block of plan rows.

    ``rows`` is an integer array of shape (B, n); each row is converted
    to the requested representation and evaluated.  Returns a float64
    array of shape (B, p).  Results do not depend on how rows are
    blocked together.
    """
    stype = require_view(spec, stype)
    cols = resolve_columns(spec, data)
    p = probe_dimension(spec, data)
    out = np.empty((rows.shape[0], p), dtype=np.float64)
    if rows.shape[0] == 0:
        return out
    if stype is Stype.INDICES:
        _eval_indices_block(spec, data, cols, rows, out)
    elif stype is Stype.FREQUENCIES:
        _eval_frequencies_block(spec, data, cols, rows, out, already_freqs=False)
    else:
        _eval_weights_block(spec, data, cols, _weights_matrix(rows, data.n), out)
    return out


def eval_statistic(spec, data, view):
    """Evaluate the statistic under one sample view.

    Pure in (spec, data, view).  Under the identity view of any
    accepted representation this reproduces the statistic of the
    original data.
    """
    if not isinstance(view, SampleView):
        raise TypeError("view must be a SampleView")
    stype = require_view(spec, view.stype)
    if view.n != data.n:
        raise ValueError(f"view covers {view.n} observations, data has {data.n}")
    cols = resolve_columns(spec, data)
    p = probe_dimension(spec, data)
    out = np.empty((1, p), dtype=np.float64)
    if stype is Stype.INDICES:
        _eval_indices_block(spec, data, cols, view.values[None, :], out)
    elif stype is Stype.FREQUENCIES:
        _eval_frequencies_block(
            spec, data, cols, view.values[None, :], out, already_freqs=True
        )
    else:
        _eval_weights_block(spec, data, cols, view.values[None, :].astype(np.float64), out)
    return out[0]


def t0(spec, data):
    """The statistic on the original data (the bias reference point)."""
    return eval_statistic(spec, data, identity_view(canonical_stype(spec), data.n))
