import logging

from prometheus_client import REGISTRY, Counter, Histogram, Summary, write_to_textfile

logger = logging.getLogger(__name__)

REGRESSION_FIT_TIME = Summary(
    "granger_dr_regression_fit_seconds",
    "Time spent fitting one nuisance regressor",
    ["backend"],
)

REGRESSIONS_FITTED = Counter(
    "granger_dr_regressions_fitted_total",
    "Total number of nuisance regressors fitted",
    ["backend"],
)

JITTER_ESCALATIONS = Counter(
    "granger_dr_jitter_escalations_total",
    "Kernel systems that needed diagonal jitter before factorizing",
)

CANDIDATES_TESTED = Counter(
    "granger_dr_candidates_tested_total",
    "Total number of candidate series tested",
)

CANDIDATES_SELECTED = Counter(
    "granger_dr_candidates_selected_total",
    "Total number of candidate series selected as causes",
)

DEGENERATE_CANDIDATES = Counter(
    "granger_dr_degenerate_candidates_total",
    "Candidates skipped because all their lagged columns are constant",
)

CANDIDATE_P_VALUE = Histogram(
    "granger_dr_candidate_p_value",
    "Distribution of candidate p-values",
    buckets=[0.001, 0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 1.0],
)

TARGET_RUN_TIME = Summary(
    "granger_dr_target_run_seconds",
    "Time spent testing every candidate for one target",
)

BENCHMARK_CELL_TIME = Summary(
    "granger_dr_benchmark_cell_seconds",
    "Time spent on one benchmark cell (generate, discover, evaluate)",
)


def export_metrics(path):
    """Write the default registry to ``path`` in Prometheus text format."""
    write_to_textfile(str(path), REGISTRY)
    logger.info(f"Metrics written to {path}")
