"""Exception types raised across the package."""


class ParbootError(Exception):
    """Base class for all parboot errors."""


# --- dataset ingestion -------------------------------------------------

class DatasetError(ParbootError):
    """A dataset invariant was violated at construction."""


class MissingFileError(ParbootError):
    pass


class RaggedRowError(ParbootError):
    def __init__(self, line_number, expected, got):
        self.line_number = line_number
        self.expected = expected
        self.got = got
        super().__init__(
            f"line {line_number}: expected {expected} fields, got {got}"
        )


class NonNumericFieldError(ParbootError):
    def __init__(self, line_number, column, text):
        self.line_number = line_number
        self.column = column
        self.text = text
        super().__init__(
            f"line {line_number}, column {column!r}: not a finite number: {text!r}"
        )


class EmptyTableError(ParbootError):
    pass


class ZeroDimensionError(ParbootError):
    pass


# --- resample plan -----------------------------------------------------

class PlanTooLargeError(ParbootError):
    def __init__(self, required_bytes, max_bytes, what="resample plan"):
        self.required_bytes = required_bytes
        self.max_bytes = max_bytes
        super().__init__(
            f"{what} needs {required_bytes} bytes, exceeding the configured "
            f"ceiling of {max_bytes} bytes"
        )


class IndexOutOfRangeError(ParbootError):
    pass


class ZeroTotalError(ParbootError):
    pass


class ArithmeticOverflowError(ParbootError):
    pass


# --- statistics --------------------------------------------------------

class UnknownColumnError(ParbootError):
    pass


class UnsupportedViewError(ParbootError):
    pass


class UnknownStatisticError(ParbootError):
    pass


# --- engine ------------------------------------------------------------

class WorkerSpawnFailure(ParbootError):
    pass


class ChannelClosedError(ParbootError):
    def __init__(self, rank, detail=""):
        self.rank = rank
        msg = f"channel to worker rank {rank} closed unexpectedly"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class MissingRankError(ParbootError):
    pass


class OverlappingBlocksError(ParbootError):
    pass


class EvaluationError(ParbootError):
    """A statistic failed on one resample; carries (rank, resample index)."""

    def __init__(self, rank, resample_index, detail):
        self.rank = rank
        self.resample_index = resample_index
        self.detail = detail
        where = f"worker rank {rank}"
        if resample_index is not None:
            where += f", resample {resample_index}"
        super().__init__(f"statistic failed on {where}: {detail}")


# --- estimates ---------------------------------------------------------

class EmptyReplicatesError(ParbootError):
    pass


class InsufficientReplicatesError(ParbootError):
    pass


class AlphaOutOfRangeError(ParbootError):
    pass


# --- bench -------------------------------------------------------------

class ZeroTimeError(ParbootError):
    pass


class EquivalenceViolationError(ParbootError):
    """A parallel run produced different replicates than the serial run."""
