"""Column-oriented numeric tables and their ingestion.

A :class:`Dataset` is an ordered set of named float64 columns of equal
length n.  Values are validated to be finite at construction, and the
backing arrays are frozen, so a dataset can be shared read-only across
any number of workers.

Tables are read and written as comma-separated text with a mandatory
header line, LF line endings, ``.`` decimal separator, no quoting and
no missing fields.  Floats are rendered in shortest round-trip form so
that ``load_table(write_table(d))`` reproduces ``d`` bit for bit.
"""

import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import (
    DatasetError,
    EmptyTableError,
    MissingFileError,
    NonNumericFieldError,
    RaggedRowError,
    ZeroDimensionError,
)
from . import rng


class Dataset:
    """Immutable table of named float64 columns of equal length."""

    __slots__ = ("names", "columns", "_by_name")

    def __init__(self, names, columns):
        names = tuple(names)
        if not names:
            raise DatasetError("a dataset needs at least one column")
        if len(set(names)) != len(names):
            raise DatasetError("column names must be unique")
        if any(not name for name in names):
            raise DatasetError("column names must be non-empty")
        if len(columns) != len(names):
            raise DatasetError("one array per column name required")
        arrays = []
        n = None
        for name, col in zip(names, columns):
            arr = np.ascontiguousarray(col, dtype=np.float64)
            if arr.ndim != 1:
                raise DatasetError(f"column {name!r} is not one-dimensional")
            if n is None:
                n = arr.shape[0]
            elif arr.shape[0] != n:
                raise DatasetError(
                    f"column {name!r} has length {arr.shape[0]}, expected {n}"
                )
            if not np.isfinite(arr).all():
                raise DatasetError(f"column {name!r} contains NaN or infinity")
            arr.setflags(write=False)
            arrays.append(arr)
        if n == 0:
            raise DatasetError("columns must hold at least one observation")
        self.names = names
        self.columns = tuple(arrays)
        self._by_name = dict(zip(names, arrays))

    @property
    def n(self):
        return self.columns[0].shape[0]

    @property
    def ncols(self):
        return len(self.columns)

    def column(self, name):
        try:
            return self._by_name[name]
        except KeyError:
            raise DatasetError(f"no such column: {name!r}") from None

    def has_column(self, name):
        return name in self._by_name

    def __repr__(self):
        return f"Dataset(n={self.n}, columns={list(self.names)!r})"


@dataclass(frozen=True)
class GroupLabels:
    """Category code per sample column of a synthetic expression matrix."""

    labels: tuple

    def __len__(self):
        return len(self.labels)


def load_table(path):
    """Parse a comma-separated table with a header line into a Dataset."""
    if not os.path.exists(path):
        raise MissingFileError(f"no such file: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise EmptyTableError(f"{path}: empty file")
    names = lines[0].split(",")
    ncols = len(names)
    if len(lines) == 1:
        raise EmptyTableError(f"{path}: header but no data rows")
    rows = len(lines) - 1
    cols = [np.empty(rows, dtype=np.float64) for _ in range(ncols)]
    for i, line in enumerate(lines[1:]):
        fields = line.split(",")
        if len(fields) != ncols:
            raise RaggedRowError(i + 2, ncols, len(fields))
        for j, field in enumerate(fields):
            try:
                value = float(field)
            except ValueError:
                raise NonNumericFieldError(i + 2, names[j], field) from None
            if not math.isfinite(value):
                raise NonNumericFieldError(i + 2, names[j], field)
            cols[j][i] = value
    return Dataset(names, cols)


def write_table(dataset, path):
    """Write a Dataset in the same format load_table reads.

    Floats use repr's shortest round-trip rendering, so reading the file
    back reproduces the dataset exactly.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(dataset.names))
        fh.write("\n")
        cols = dataset.columns
        for i in range(dataset.n):
            fh.write(",".join(repr(float(col[i])) for col in cols))
            fh.write("\n")


def synth_expression(genes, samples_group1, samples_group2, seed):
    """Build a deterministic synthetic expression matrix.

    The table has one row per gene (n = genes) and one column per
    sample, the first group labelled ``ALL`` and the second ``AML``.
    Values follow a log-normal-like positive distribution; every tenth
    gene carries a fixed upward mean shift in the second group.  The
    output is a pure function of the arguments.
    """
    if genes < 1:
        raise ZeroDimensionError(f"genes must be >= 1, got {genes}")
    if samples_group1 < 1 or samples_group2 < 1:
        raise ZeroDimensionError("both sample groups must be >= 1")
    total_samples = samples_group1 + samples_group2
    count = genes + genes * total_samples
    # Box-Muller on consecutive uniform pairs; one extra draw pads to even.
    u = rng.uniform01(seed, 0, 2 * ((count + 1) // 2) + 2)
    u1 = np.clip(u[0::2][: (count + 1) // 2], 1e-16, None)
    u2 = u[1::2][: (count + 1) // 2]
    radius = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    normals = np.concatenate([radius * np.cos(theta), radius * np.sin(theta)])[:count]

    gene_level = 2.0 + 0.8 * normals[:genes]
    noise = normals[genes:].reshape(genes, total_samples)
    log_values = gene_level[:, None] + 0.35 * noise
    shifted = np.arange(genes) % 10 == 0
    log_values[shifted, samples_group1:] += 0.6
    values = np.exp(log_values)

    width1 = len(str(samples_group1))
    width2 = len(str(samples_group2))
    names = [f"ALL{i + 1:0{width1}d}" for i in range(samples_group1)]
    names += [f"AML{i + 1:0{width2}d}" for i in range(samples_group2)]
    data = Dataset(names, [values[:, j] for j in range(total_samples)])
    labels = GroupLabels(("ALL",) * samples_group1 + ("AML",) * samples_group2)
    return data, labels
