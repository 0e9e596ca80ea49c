"""Summaries of a replicate matrix: bias, standard error, percentile CIs.

All functions treat each output dimension of a vector statistic
independently and operate on the gathered R x p replicate matrix.
Confidence intervals use the percentile method with (R+1)-scaled order
statistic ranks, clamped to [1, R]; endpoints are therefore always
elements of the replicate sample.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AlphaOutOfRangeError,
    EmptyReplicatesError,
    InsufficientReplicatesError,
)


@dataclass(frozen=True)
class EstimateReport:
    """Per-dimension bootstrap summaries at confidence level 1 - alpha."""

    t0: np.ndarray
    bias: np.ndarray
    se: np.ndarray
    ci_lower: np.ndarray
    ci_upper: np.ndarray
    alpha: float

    @property
    def dimensions(self):
        return self.t0.shape[0]


def _as_matrix(t):
    t = np.asarray(t, dtype=np.float64)
    if t.ndim == 1:
        t = t[:, None]
    return t


def bias(t0, t):
    """Mean of the replicates minus the original-data statistic."""
    t = _as_matrix(t)
    if t.shape[0] == 0:
        raise EmptyReplicatesError("no replicates")
    t0 = np.atleast_1d(np.asarray(t0, dtype=np.float64))
    if t0.shape[0] != t.shape[1]:
        raise ValueError(
            f"t0 has dimension {t0.shape[0]}, replicates have {t.shape[1]}"
        )
    return t.mean(axis=0) - t0


def standard_error(t):
    """Sample standard deviation of each replicate column, divisor R - 1."""
    t = _as_matrix(t)
    if t.shape[0] < 2:
        raise InsufficientReplicatesError(
            f"standard error needs at least 2 replicates, got {t.shape[0]}"
        )
    return t.std(axis=0, ddof=1)


def percentile_ci(t, alpha):
    """Percentile interval endpoints per dimension.

    Ranks are floor((R+1)*alpha/2) and ceil((R+1)*(1-alpha/2)), 1-based
    and clamped to [1, R].
    """
    if not 0.0 < alpha < 1.0:
        raise AlphaOutOfRangeError(f"alpha must be in (0, 1), got {alpha}")
    t = _as_matrix(t)
    R = t.shape[0]
    if (R + 1) * alpha / 2.0 < 1.0:
        raise InsufficientReplicatesError(
            f"R={R} is too small for a {1 - alpha:.3g} interval; "
            f"need (R+1)*alpha/2 >= 1"
        )
    lo_rank = min(max(math.floor((R + 1) * alpha / 2.0), 1), R)
    hi_rank = min(max(math.ceil((R + 1) * (1.0 - alpha / 2.0)), 1), R)
    ordered = np.sort(t, axis=0)
    return ordered[lo_rank - 1], ordered[hi_rank - 1]


def build_report(t0, t, alpha=0.05):
    """Assemble the full per-dimension report for one bootstrap run."""
    t = _as_matrix(t)
    t0 = np.atleast_1d(np.asarray(t0, dtype=np.float64))
    lower, upper = percentile_ci(t, alpha)
    return EstimateReport(
        t0=t0,
        bias=bias(t0, t),
        se=standard_error(t),
        ci_lower=lower,
        ci_upper=upper,
        alpha=alpha,
    )


def render_text(report):
    """Plain-text table, one row per output dimension."""
    headers = ("dim", "t0", "bias", "se", "ci_lower", "ci_upper")
    rows = [
        (
            str(j),
            f"{report.t0[j]:.6g}",
            f"{report.bias[j]:.6g}",
            f"{report.se[j]:.6g}",
            f"{report.ci_lower[j]:.6g}",
            f"{report.ci_upper[j]:.6g}",
        )
        for j in range(report.dimensions)
    ]
    widths = [
        max(len(headers[c]), *(len(r[c]) for r in rows)) for c in range(len(headers))
    ]
    lines = [
        "  ".join(h.rjust(w) for h, w in zip(headers, widths)),
        "  ".join("-" * w for w in widths),
    ]
    lines += ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in rows]
    lines.append(f"percentile interval at alpha={report.alpha:g}")
    return "\n".join(lines)


def render_csv(report):
    """Machine-readable form: dimension,t0,bias,se,ci_lower,ci_upper."""
    lines = ["dimension,t0,bias,se,ci_lower,ci_upper"]
    for j in range(report.dimensions):
        lines.append(
            ",".join(
                (
                    str(j),
                    repr(float(report.t0[j])),
                    repr(float(report.bias[j])),
                    repr(float(report.se[j])),
                    repr(float(report.ci_lower[j])),
                    repr(float(report.ci_upper[j])),
                )
            )
        )
    return "\n".join(lines) + "\n"
