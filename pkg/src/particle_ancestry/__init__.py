"""Weighted particle systems with recorded genealogy.

Forward simulation of resampling particle systems, reverse-time
ancestral partitions with an exactly-checkable one-step transition
formula, exact and Monte Carlo evaluation of a conditional
parent-attachment probability in a two-state model, and an empirically
verified coupling that splits the two resampling steps into independent
pieces.
"""

from .analytic import (
    AnalyticReport,
    CounterexampleParams,
    analytic_report,
    f_weight,
    r_curve,
)
from .conditional import (
    ConditionalEstimate,
    DiagnosticEntry,
    DiagnosticsReport,
    ReportRow,
    StateCounts,
    brute_force_conditional,
    counterexample_report,
    exact_conditional,
    limit_diagnostics,
    mc_conditional,
)
from .coupling import (
    CoupledDraw,
    IndependenceResult,
    MismatchReport,
    MismatchRow,
    coupled_draw,
    independence_test,
    mismatch_rates,
)
from .errors import (
    CoarseningError,
    DegenerateTableError,
    ParameterError,
    ResourceError,
    ZeroSupportError,
)
from .genealogy import (
    MergeSpec,
    Partition,
    all_partitions,
    brute_force_transition,
    coarsenings,
    merge_spec,
    mohle_transition,
    mrca_time,
    parse_partition,
    partition_at,
)
from .simulate import (
    DiscreteModel,
    OffspringCounts,
    Trajectory,
    categorical_ancestors,
    offspring_counts,
    simulate,
    two_state_model,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticReport",
    "CounterexampleParams",
    "analytic_report",
    "f_weight",
    "r_curve",
    "ConditionalEstimate",
    "DiagnosticEntry",
    "DiagnosticsReport",
    "ReportRow",
    "StateCounts",
    "brute_force_conditional",
    "counterexample_report",
    "exact_conditional",
    "limit_diagnostics",
    "mc_conditional",
    "CoupledDraw",
    "IndependenceResult",
    "MismatchReport",
    "MismatchRow",
    "coupled_draw",
    "independence_test",
    "mismatch_rates",
    "CoarseningError",
    "DegenerateTableError",
    "ParameterError",
    "ResourceError",
    "ZeroSupportError",
    "MergeSpec",
    "Partition",
    "all_partitions",
    "brute_force_transition",
    "coarsenings",
    "merge_spec",
    "mohle_transition",
    "mrca_time",
    "parse_partition",
    "partition_at",
    "DiscreteModel",
    "OffspringCounts",
    "Trajectory",
    "categorical_ancestors",
    "offspring_counts",
    "simulate",
    "two_state_model",
    "__version__",
]
