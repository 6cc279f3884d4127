"""Numerical epsilon-rank of kernel matrices on neighboring hypercubes.

Measures Monte Carlo rank statistics of the seven benchmark kernels and
evaluates closed-form probabilistic bounds on the blockwise rank of the
hierarchical subdivision of the source domain.
"""

__version__ = "0.1.0"

from .errors import (
    AmbiguousSeparationError,
    DegenerateNormError,
    DimensionError,
    DistributionError,
    DomainError,
    FitError,
    GeometryError,
    KernRankError,
    LowCountWarning,
    NoSubdivisionNeeded,
    NotApplicableError,
    NumericalError,
    SingularEvaluationError,
)
from .geometry import (
    Box,
    HyperCube,
    InteractionKind,
    SubdivisionTree,
    box_probability,
    classify,
    integer_log,
    level_box_count,
    make_domain_pair,
    subdivide,
)
from .kernels import (
    STANDARD_KERNELS,
    Kernel,
    evaluate,
    evaluate_radial,
    get_kernel,
    register_kernel,
)
from .sampling import (
    ParticleSet,
    ProductMarginals,
    Uniform,
    count_in,
    grid_perturbation_stats,
    mix64,
    realized_counts,
    sample,
    sample_grid,
)
from .lowrank import (
    HierarchicalApprox,
    KernelMatrix,
    LowRankFactor,
    RankReport,
    assemble,
    cheb_factorize,
    eps_rank,
    hierarchical_approximate,
    load_matrix,
    realized_R,
    rel_maxnorm_error,
    save_matrix,
    tolerance_bridge,
)
from .probmodel import (
    BoundInputs,
    CountModel,
    TruncatedCountModel,
    berry_esseen_multivariate_bound,
    binom_pmf,
    cov_z_m,
    cross_moment_nn,
    expected_R,
    k_tilde,
    normal_approx_pmf,
    trinom_pmf,
    var_R_bound,
    z_cov,
    z_mean,
    z_pmf,
    z_var,
)
from .experiments import (
    CellStats,
    ExperimentConfig,
    RankStatistics,
    calibrate_p,
    emit_csv,
    emit_json,
    emit_plot_data,
    format_table,
    growth_fit,
    parse_csv,
    realized_R_experiment,
    run_experiment,
    run_trial,
)
