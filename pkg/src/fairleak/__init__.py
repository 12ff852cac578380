"""Reconstruct protected attributes from fairness queries, and defend against it."""

from .errors import (
    AmbiguousResponseError,
    DataFormatError,
    DegenerateColumnError,
    DivergenceError,
    DomainError,
    EmptyGroupError,
    FairleakError,
    InfeasibleError,
    NonConvergenceError,
    RankDeficientError,
    ZeroResponseError,
)
from .fairness import (
    Dataset,
    GroupSums,
    Mechanism,
    Metric,
    PredictionMatrix,
    QueryBatch,
    equal_opportunity,
    group_sums,
    metric_batch,
    statistical_parity,
)
from .solvers import LinearSystem, SparseSolution, basis_pursuit, omp, solve_full_rank
from .reconstruction import (
    UNKNOWN,
    AttackPlan,
    PartitionResult,
    ReconstructionReport,
    Strategy,
    leakage,
    partition_abs_sp,
    plan_compressed_sensing,
    plan_double_query,
    plan_full_rank,
    plan_random_binary,
    plan_single_query,
    probe_group_sizes,
    reveal_compressed_sensing,
    reveal_double_query,
    reveal_equal_opportunity,
    reveal_full_rank,
    reveal_single_query,
    sizes_from_probe,
    with_probe,
)
from .privacy import (
    NoiseSpec,
    SensitivityBound,
    brute_force_global,
    brute_force_smooth,
    conceal_abs_sp,
    conceal_sp_cauchy,
    conceal_sp_laplace_smooth,
    global_sensitivity,
    laplace_global_mechanism,
    smooth_sensitivity_abs_sp,
    smooth_sensitivity_sp,
)
from .data import gen_synthetic, ingest_csv, train_baseline
from .experiment import (
    ExperimentConfig,
    ExperimentRow,
    auto_query_count,
    emit_results,
    load_results,
    run_experiment,
)

__version__ = "0.1.0"
