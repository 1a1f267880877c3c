"""Moment-based discretization of empirical distributions.

The core operation turns raw data into an N-point discrete distribution
whose first ``2N - 1`` moments match the sample moments exactly, by
feeding sample moments through the Golub-Welsch quadrature construction.
Baseline discretizers, a CRRA portfolio application, and a Monte Carlo
accuracy harness round out the package.
"""

from .errors import (
    DegenerateDataError,
    InfeasibleError,
    InputError,
    NotPositiveDefiniteError,
    NpgqError,
    NumericalError,
    UnboundedError,
)
from .moments import (
    AffineTransform,
    GaussianMixture,
    MomentSequence,
    gaussian_moments,
    mixture_moments,
    sample_moments,
    standardize,
    standardized_mixture,
)
from .quadrature import (
    DEFAULT_MAX_NODES,
    CholeskyFactor,
    DiscreteDistribution,
    JacobiMatrix,
    cholesky,
    discretize_data,
    expectation,
    golub_welsch,
    hankel_matrix,
    jacobi_from_cholesky,
    tridiagonal_eigen,
)
from .orthopoly import (
    MomentFunctional,
    MonicPolynomial,
    poly_eval,
    poly_roots_bracketed,
    ttrr_build,
)
from .baselines import (
    KernelDensity,
    MaxEntSolution,
    fit_gaussian_mle,
    gauss_hermite_discretize,
    kde_pdf,
    maxent_discretize,
    maxent_dual,
    maxent_grid,
    maxent_solve,
)
from .portfolio import (
    PortfolioProblem,
    PortfolioSolution,
    crra_objective,
    solve_portfolio,
    state_returns,
    theoretical_portfolio,
)
from .experiments import (
    DEFAULT_MIXTURE,
    DEFAULT_RISK_FREE,
    METHOD_LABELS,
    CellResult,
    ExperimentConfig,
    ExperimentReport,
    format_config,
    parse_config,
    replication_rng,
    run_cell,
    run_experiment,
    sample_mixture,
)

__version__ = "0.1.0"
