"""Cross-fitted doubly robust Granger causality test.

For a target ``Y`` and a candidate series ``X^i`` the test compares two moments:

    theta_full   = E[Y_T * E[Y_T | all past]]
    theta_masked = E[Y_T * E[Y_T | past without X^i]]

which differ iff ``X^i`` Granger-causes ``Y``. Each is estimated with the
doubly robust score ``psi = m(V; g) + alpha(X) (Y - g(X))`` where ``m = Y * g``
and the Riesz representer ``alpha`` estimates the same function as ``g``.
Nuisances are fitted on the complement of each trajectory fold and evaluated
on the fold itself. A paired t-test on ``z = psi_full - psi_masked`` decides
whether the candidate is selected.

The bias of ``psi`` is ``-E[(g - g0) (alpha - g0)]``. With ``riesz_fit="independent"``
(the default) ``g`` and ``alpha`` are fitted on disjoint halves of the training
trajectories, so their errors are independent and the product averages out.
With ``riesz_fit="shared"`` one fitted model serves as both, ``psi`` reduces to
``2 y g - g**2`` and the bias is ``-E[(g - g0)**2]``, which masking shrinks.

``z`` is ``psi_full - psi_masked``; the test and the std-based ranking are
sign-invariant, so only the sign of the reported ``mean_z`` depends on it.
"""

import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from granger_dr.core import regression
from granger_dr.core.regression import RegressorSpec
from granger_dr.core.stats import student_t_two_sided_p
from granger_dr.core.timeseries import (
    assign_folds,
    build_lagged_design,
    fit_standardizer,
    mask_columns_for,
)
from granger_dr.metrics import (
    CANDIDATE_P_VALUE,
    CANDIDATES_SELECTED,
    CANDIDATES_TESTED,
    DEGENERATE_CANDIDATES,
    TARGET_RUN_TIME,
)
from granger_dr.utils.concurrency import map_ordered
from granger_dr.utils.errors import (
    DegenerateCandidate,
    GrangerDRError,
    IndexOutOfRange,
    InvalidConfig,
    NonFiniteScores,
    TooFewSamples,
)

logger = logging.getLogger(__name__)

STATUS_TESTED = "tested"
STATUS_DEGENERATE = "degenerate"


class MaskingMode(str, Enum):
    SURROGATE_ZERO_MASK = "surrogate_zero_mask"
    REFIT = "refit"


class RankingMetric(str, Enum):
    STD_Z = "std_z"
    ABS_T = "abs_t"


class RieszFit(str, Enum):
    INDEPENDENT = "independent"
    SHARED = "shared"


@dataclass(frozen=True)
class DrSitConfig:
    lag: int = 2
    k_folds: int = 5
    significance_alpha: float = 0.05
    masking_mode: MaskingMode = MaskingMode.SURROGATE_ZERO_MASK
    regressor: RegressorSpec = field(default_factory=RegressorSpec)
    ranking_metric: RankingMetric = RankingMetric.STD_Z
    seed: int = 0
    standardize: bool = True
    riesz_fit: RieszFit = RieszFit.INDEPENDENT

    def __post_init__(self):
        if int(self.lag) != self.lag or self.lag < 1:
            raise InvalidConfig("lag", f"must be an integer >= 1, got {self.lag}")
        if int(self.k_folds) != self.k_folds or self.k_folds < 2:
            raise InvalidConfig("k_folds", f"must be an integer >= 2, got {self.k_folds}")
        if not 0 < self.significance_alpha < 1:
            raise InvalidConfig(
                "significance_alpha", f"must lie in (0, 1), got {self.significance_alpha}"
            )
        enums = (
            ("masking_mode", MaskingMode),
            ("ranking_metric", RankingMetric),
            ("riesz_fit", RieszFit),
        )
        for name, enum in enums:
            try:
                object.__setattr__(self, name, enum(getattr(self, name)))
            except ValueError:
                choices = ", ".join(member.value for member in enum)
                raise InvalidConfig(
                    name, f"'{getattr(self, name)}' is not one of {choices}"
                ) from None
        if not isinstance(self.regressor, RegressorSpec):
            raise InvalidConfig("regressor", "must be a RegressorSpec")

    def to_dict(self):
        echo = asdict(self)
        echo["masking_mode"] = self.masking_mode.value
        echo["ranking_metric"] = self.ranking_metric.value
        echo["riesz_fit"] = self.riesz_fit.value
        echo["regressor"] = self.regressor.to_dict()
        return echo


@dataclass(frozen=True, eq=False)
class ScoreSamples:
    candidate: int
    y: np.ndarray
    g_full: np.ndarray
    g_masked: np.ndarray
    alpha_full: np.ndarray
    alpha_masked: np.ndarray
    psi_full: np.ndarray
    psi_masked: np.ndarray
    z: np.ndarray
    fold: np.ndarray

    @classmethod
    def from_predictions(
        cls, candidate, y, g_full, g_masked, fold=None, alpha_full=None, alpha_masked=None
    ):
        """Scores from nuisance predictions; ``alpha`` defaults to ``g`` itself."""
        y = np.asarray(y, dtype=float)
        g_full = np.asarray(g_full, dtype=float)
        g_masked = np.asarray(g_masked, dtype=float)
        fold = np.zeros(len(y), dtype=int) if fold is None else np.asarray(fold, dtype=int)
        if alpha_full is None and alpha_masked is None:
            # m(V; g) + alpha(X) (y - g(X)) with alpha = g
            alpha_full, alpha_masked = g_full, g_masked
            psi_full = 2.0 * y * g_full - g_full**2
            psi_masked = 2.0 * y * g_masked - g_masked**2
        else:
            alpha_full = g_full if alpha_full is None else np.asarray(alpha_full, dtype=float)
            alpha_masked = (
                g_masked if alpha_masked is None else np.asarray(alpha_masked, dtype=float)
            )
            psi_full = y * g_full + alpha_full * (y - g_full)
            psi_masked = y * g_masked + alpha_masked * (y - g_masked)
        return cls(
            candidate=candidate,
            y=y,
            g_full=g_full,
            g_masked=g_masked,
            alpha_full=alpha_full,
            alpha_masked=alpha_masked,
            psi_full=psi_full,
            psi_masked=psi_masked,
            z=psi_full - psi_masked,
            fold=fold,
        )

    @property
    def n(self):
        return len(self.z)

    def _fold_average(self, values):
        # k^-1 sum_j E_{D_j}[psi]; equals the pooled mean when folds are equal-sized
        return float(np.mean([values[self.fold == j].mean() for j in np.unique(self.fold)]))

    @property
    def theta_full(self):
        return self._fold_average(self.psi_full)

    @property
    def theta_masked(self):
        return self._fold_average(self.psi_masked)

    @property
    def mean_z(self):
        return self.theta_full - self.theta_masked

    @property
    def std_z(self):
        if self.n < 2:
            raise TooFewSamples(f"need at least 2 score samples, got {self.n}")
        return float(np.std(self.z, ddof=1))


@dataclass(frozen=True)
class TTestResult:
    t_stat: float
    p_value: float
    selected: bool


def _t_test(mean, std, n, alpha):
    if std == 0.0:
        if mean == 0.0:
            return TTestResult(0.0, 1.0, False)
        return TTestResult(math.copysign(math.inf, mean), 0.0, True)
    t_stat = mean / (std / math.sqrt(n))
    p_value = student_t_two_sided_p(t_stat, n - 1)
    return TTestResult(float(t_stat), p_value, p_value < alpha)


def paired_t_test(z, alpha=0.05):
    z = np.asarray(z, dtype=float)
    if len(z) < 2:
        raise TooFewSamples(f"a paired t-test needs at least 2 samples, got {len(z)}")
    return _t_test(float(z.mean()), float(np.std(z, ddof=1)), len(z), alpha)


def _score_from(metric, std_z, t_stat):
    if RankingMetric(metric) is RankingMetric.STD_Z:
        return std_z
    # keep scores finite for ranking when the spread of z collapses
    return min(abs(t_stat), sys.float_info.max)


def ranking_score(samples, metric=RankingMetric.STD_Z):
    std_z = samples.std_z
    t_stat = _t_test(samples.mean_z, std_z, samples.n, 0.05).t_stat
    return _score_from(metric, std_z, t_stat)


@dataclass(frozen=True)
class EdgeStatistics:
    candidate: int
    candidate_name: str
    n: int
    theta_full: float
    theta_masked: float
    mean_z: float
    std_z: float
    t_stat: float
    p_value: float
    ranking_score: float
    selected: bool
    status: str = STATUS_TESTED


def edge_statistics(samples, config, candidate_name, status=STATUS_TESTED):
    theta_full = samples.theta_full
    theta_masked = samples.theta_masked
    mean_z = theta_full - theta_masked
    std_z = samples.std_z
    test = _t_test(mean_z, std_z, samples.n, config.significance_alpha)
    return EdgeStatistics(
        candidate=int(samples.candidate),
        candidate_name=candidate_name,
        n=samples.n,
        theta_full=theta_full,
        theta_masked=theta_masked,
        mean_z=mean_z,
        std_z=std_z,
        t_stat=test.t_stat,
        p_value=test.p_value,
        ranking_score=float(_score_from(config.ranking_metric, std_z, test.t_stat)),
        selected=bool(test.selected) and status == STATUS_TESTED,
        status=status,
    )


@dataclass(frozen=True)
class FoldDiagnostics:
    fold: int
    n_train_rows: int
    n_heldout_rows: int
    n_train_trajectories: int
    residual_rmse: float


@dataclass(frozen=True)
class DrSitReport:
    target_index: int
    target_name: str
    variable_names: tuple
    edges: tuple
    config: dict
    fold_diagnostics: tuple
    elapsed_seconds: float = None

    def selected_names(self):
        return [edge.candidate_name for edge in self.edges if edge.selected]

    def edge_for(self, name):
        for edge in self.edges:
            if edge.candidate_name == name:
                return edge
        raise IndexOutOfRange(f"no candidate named '{name}' in report for {self.target_name}")


@dataclass(frozen=True, eq=False)
class FoldFit:
    fold: int
    train_rows: np.ndarray
    heldout_rows: np.ndarray
    regression_rows: np.ndarray
    riesz_rows: np.ndarray
    model: regression.FittedRegressor
    riesz_model: regression.FittedRegressor
    g_full: np.ndarray
    alpha_full: np.ndarray

    @property
    def shared(self):
        return self.riesz_model is self.model


def _fit_rows(design, rows, config, keep=None):
    features = design.features[rows]
    if keep is not None:
        features = features[:, keep]
    return regression.fit(
        config.regressor, features, design.targets[rows], standardize=config.standardize
    )


def fit_fold_models(design, assignment, config):
    """Fit the full-information nuisances (g and its Riesz representer) on every fold complement."""
    fold_fits = []
    for fold in range(assignment.k):
        train, heldout = design.fold_rows(assignment, fold)
        if config.riesz_fit is RieszFit.INDEPENDENT:
            regression_rows, riesz_rows = design.split_rows(train)
        else:
            regression_rows = riesz_rows = train
        model = _fit_rows(design, regression_rows, config)
        heldout_features = design.features[heldout]
        g_full = model.predict(heldout_features)
        if config.riesz_fit is RieszFit.INDEPENDENT:
            riesz_model = _fit_rows(design, riesz_rows, config)
            alpha_full = riesz_model.predict(heldout_features)
        else:
            riesz_model, alpha_full = model, g_full
        fold_fits.append(
            FoldFit(
                fold, train, heldout, regression_rows, riesz_rows,
                model, riesz_model, g_full, alpha_full,
            )
        )
        logger.info(
            f"Fold {fold}: trained on {len(regression_rows)} + {len(riesz_rows)} rows "
            f"({config.riesz_fit.value}), predicted {len(heldout)} held-out rows"
        )
    return fold_fits


def _is_degenerate(design, fold_fits, masked):
    columns = sorted(masked)
    return all(
        fit_standardizer(design.features[:, columns], fold_fit.train_rows).zero_variance.all()
        for fold_fit in fold_fits
    )


def _masked_predictions(design, fold_fit, masked, config):
    """Reduced-information (g, alpha) predictions on the held-out rows of one fold."""
    heldout_features = design.features[fold_fit.heldout_rows]
    if config.masking_mode is MaskingMode.SURROGATE_ZERO_MASK:
        g_masked = fold_fit.model.predict_masked(heldout_features, masked)
        if fold_fit.shared:
            return g_masked, g_masked
        return g_masked, fold_fit.riesz_model.predict_masked(heldout_features, masked)

    keep = np.array([c for c in range(design.width) if c not in masked])
    reduced = heldout_features[:, keep]
    g_masked = _fit_rows(design, fold_fit.regression_rows, config, keep).predict(reduced)
    if fold_fit.shared:
        return g_masked, g_masked
    riesz_model = _fit_rows(design, fold_fit.riesz_rows, config, keep)
    return g_masked, riesz_model.predict(reduced)


def _assemble_samples(design, fold_fits, candidate, masked_by_fold):
    g_full = np.empty(design.n_rows)
    g_masked = np.empty(design.n_rows)
    alpha_full = np.empty(design.n_rows)
    alpha_masked = np.empty(design.n_rows)
    fold = np.empty(design.n_rows, dtype=int)
    for fold_fit, (g_reduced, alpha_reduced) in zip(fold_fits, masked_by_fold):
        rows = fold_fit.heldout_rows
        g_full[rows] = fold_fit.g_full
        g_masked[rows] = g_reduced
        alpha_full[rows] = fold_fit.alpha_full
        alpha_masked[rows] = alpha_reduced
        fold[rows] = fold_fit.fold
    if all(fold_fit.shared for fold_fit in fold_fits):
        samples = ScoreSamples.from_predictions(candidate, design.targets, g_full, g_masked, fold)
    else:
        samples = ScoreSamples.from_predictions(
            candidate, design.targets, g_full, g_masked, fold,
            alpha_full=alpha_full, alpha_masked=alpha_masked,
        )
    if not (np.all(np.isfinite(samples.psi_full)) and np.all(np.isfinite(samples.psi_masked))):
        raise NonFiniteScores(
            f"non-finite doubly robust scores for candidate {candidate}; "
            "the nuisance regressor diverged"
        )
    return samples


def _check_candidate(n_variables, target, candidate):
    if not 0 <= candidate < n_variables:
        raise IndexOutOfRange(f"candidate {candidate} outside [0, {n_variables - 1}]")
    if candidate == target:
        raise InvalidConfig("candidate", "the candidate must differ from the target")


def compute_score_samples(panel, target, candidate, config, design=None, fold_fits=None):
    """Per-row doubly robust scores for one candidate.

    ``design`` and ``fold_fits`` may be passed in to share the full-model
    pathway across candidates; otherwise they are built here.
    """
    _check_candidate(panel.n_variables, target, candidate)
    if design is None:
        design = build_lagged_design(panel, target, config.lag)
    if fold_fits is None:
        assignment = assign_folds(panel.n_trajectories, config.k_folds, config.seed)
        fold_fits = fit_fold_models(design, assignment, config)

    masked = mask_columns_for(design, candidate)
    if _is_degenerate(design, fold_fits, masked):
        raise DegenerateCandidate(
            f"every lagged column of candidate {panel.variable_names[candidate]} "
            "is constant in every training fold"
        )
    masked_by_fold = [
        _masked_predictions(design, fold_fit, masked, config) for fold_fit in fold_fits
    ]
    return _assemble_samples(design, fold_fits, candidate, masked_by_fold)


def _fold_diagnostics(design, assignment, fold_fits):
    diagnostics = []
    for fold_fit in fold_fits:
        residuals = design.targets[fold_fit.heldout_rows] - fold_fit.g_full
        diagnostics.append(
            FoldDiagnostics(
                fold=fold_fit.fold,
                n_train_rows=len(fold_fit.train_rows),
                n_heldout_rows=len(fold_fit.heldout_rows),
                n_train_trajectories=int(
                    np.sum(assignment.trajectory_to_fold != fold_fit.fold)
                ),
                residual_rmse=float(np.sqrt(np.mean(residuals**2))),
            )
        )
    return tuple(diagnostics)


def dr_sit(panel, target, config, max_workers=None):
    """Test every other variable of ``panel`` as a direct cause of ``target``."""
    start_time = time.perf_counter()
    design = build_lagged_design(panel, target, config.lag)
    target_name = panel.variable_names[target]
    assignment = assign_folds(panel.n_trajectories, config.k_folds, config.seed)
    fold_fits = fit_fold_models(design, assignment, config)

    def test_candidate(candidate):
        name = panel.variable_names[candidate]
        try:
            samples = compute_score_samples(
                panel, target, candidate, config, design=design, fold_fits=fold_fits
            )
            status = STATUS_TESTED
        except DegenerateCandidate as e:
            logger.warning(f"Skipping candidate {name} for target {target_name}: {e}")
            DEGENERATE_CANDIDATES.inc()
            unmasked = [(fold_fit.g_full, fold_fit.alpha_full) for fold_fit in fold_fits]
            samples = _assemble_samples(design, fold_fits, candidate, unmasked)
            status = STATUS_DEGENERATE
        edge = edge_statistics(samples, config, name, status=status)
        logger.debug(
            f"{name} -> {target_name}: theta_full={edge.theta_full:.6g} "
            f"theta_masked={edge.theta_masked:.6g} t={edge.t_stat:.4g} p={edge.p_value:.4g}"
        )
        return edge

    candidates = [v for v in range(panel.n_variables) if v != target]
    edges = tuple(map_ordered(test_candidate, candidates, max_workers))

    for edge in edges:
        if edge.status == STATUS_TESTED:
            CANDIDATES_TESTED.inc()
            CANDIDATE_P_VALUE.observe(edge.p_value)
        if edge.selected:
            CANDIDATES_SELECTED.inc()

    elapsed = time.perf_counter() - start_time
    TARGET_RUN_TIME.observe(elapsed)
    report = DrSitReport(
        target_index=target,
        target_name=target_name,
        variable_names=tuple(panel.variable_names),
        edges=edges,
        config=config.to_dict(),
        fold_diagnostics=_fold_diagnostics(design, assignment, fold_fits),
        elapsed_seconds=elapsed,
    )
    logger.info(
        f"Target {target_name}: selected {report.selected_names()} "
        f"out of {len(edges)} candidates in {elapsed:.2f}s"
    )
    return report


def discover_all(panel, config, max_workers=None):
    """Run the test with every variable as target; the union is the summary graph."""

    def run_target(target):
        try:
            return dr_sit(panel, target, config, max_workers=1)
        except GrangerDRError as e:
            e.add_note(f"while testing causes of {panel.variable_names[target]}")
            logger.error(f"Discovery aborted at target {panel.variable_names[target]}: {e}")
            raise

    return map_ordered(run_target, range(panel.n_variables), max_workers)


def summary_edges(reports):
    """Directed (source, target) name pairs selected across reports."""
    return sorted(
        (edge.candidate_name, report.target_name)
        for report in reports
        for edge in report.edges
        if edge.selected
    )
