"""Polynomial-time (1/2 + delta)-well-supported Nash equilibria for bimatrix games."""

from .game import (
    BimatrixGame,
    GameError,
    MixedStrategy,
    NormalizationRecord,
    RegretReport,
    StrategyProfile,
    expected_payoffs,
    normalize,
    pure_col_payoffs,
    pure_row_payoffs,
    wsne_report,
)
from .lp import SolverConfig, SolverError, ZeroSumSolution, find_low_threat_mixture, solve_zero_sum
from .wsne import (
    AlgorithmOutcome,
    SearchExhausted,
    approximate_wsne,
    enumerate_k_uniform,
    kappa,
    restrict_rows,
    search_k_uniform_wsne,
)
from .query import (
    CountingOracle,
    MatrixOracle,
    PartialGame,
    QueryStats,
    approximate_wsne_query,
    build_queried_subgame,
    sample_k_uniform,
    sampling_size,
    zero_sum_wsne_via_queries,
)

__version__ = "0.1.0"
