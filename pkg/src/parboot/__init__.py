"""Parallel bootstrap resampling with a reproducibility guarantee.

The resample plan is generated serially on the master from a
counter-based generator, statistic evaluation is embarrassingly
parallel, and results are combined by ordered tree reduction, so serial
and parallel runs of the same configuration produce bit-identical
replicates.  See README.md for a tour.
"""

from .dataset import Dataset, GroupLabels, load_table, synth_expression, write_table
from .engine import (
    BootResult,
    EngineLimits,
    ExecutionMode,
    evaluate_block,
    fanout_levels,
    partition,
    run_bootstrap,
    tree_reduce,
)
from .estimates import EstimateReport, bias, build_report, percentile_ci, standard_error
from .plan import (
    ResamplePlan,
    RngConfig,
    SampleView,
    Stype,
    frequencies_to_weights,
    generate_plan,
    identity_view,
    indices_to_frequencies,
    plan_bytes,
    read_plan,
    write_plan,
)
from .statistic import (
    StatisticSpec,
    eval_statistic,
    parse_statistic,
    probe_dimension,
    t0,
)
from .bench import (
    BenchPlan,
    BenchRecord,
    compute_efficiency,
    compute_speedup,
    efficiency_percent,
    run_bench,
)

__version__ = "0.1.0"

__all__ = [
    "BenchPlan",
    "BenchRecord",
    "BootResult",
    "Dataset",
    "EngineLimits",
    "EstimateReport",
    "ExecutionMode",
    "GroupLabels",
    "ResamplePlan",
    "RngConfig",
    "SampleView",
    "StatisticSpec",
    "Stype",
    "bias",
    "build_report",
    "compute_efficiency",
    "compute_speedup",
    "efficiency_percent",
    "eval_statistic",
    "evaluate_block",
    "fanout_levels",
    "frequencies_to_weights",
    "generate_plan",
    "identity_view",
    "indices_to_frequencies",
    "load_table",
    "parse_statistic",
    "partition",
    "percentile_ci",
    "plan_bytes",
    "probe_dimension",
    "read_plan",
    "run_bench",
    "run_bootstrap",
    "standard_error",
    "synth_expression",
    "t0",
    "tree_reduce",
    "write_plan",
    "write_table",
]
