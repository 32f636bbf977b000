import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

from granger_dr.utils.errors import DegenerateLabels, ShapeMismatch

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LabeledScores:
    scores: np.ndarray
    labels: np.ndarray
    keys: tuple = ()

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=float)
        labels = np.asarray(self.labels).astype(bool)
        if scores.shape != labels.shape or scores.ndim != 1:
            raise ShapeMismatch(
                f"scores {scores.shape} and labels {labels.shape} must be equal-length vectors"
            )
        if not np.all(np.isfinite(scores)):
            raise ShapeMismatch("scores must be finite")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "labels", labels)


def auroc(labeled):
    """Area under the ROC curve in Mann-Whitney form, ties counted as one half.

    Average ranks give the half credit: the rank sum of the positives minus its
    minimum counts every (positive, negative) pair the positive wins.
    """
    n_pos = int(labeled.labels.sum())
    n_neg = len(labeled.labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels(
            f"AUROC needs positive and negative labels, got {n_pos} and {n_neg}"
        )
    ranks = rankdata(labeled.scores, method="average")
    u_statistic = ranks[labeled.labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u_statistic / (n_pos * n_neg))


@dataclass(frozen=True)
class ConfusionMetrics:
    accuracy: float
    f1: float
    csi: float
    tp: int
    fp: int
    fn: int
    tn: int


def confusion_metrics(selected, labels):
    selected = np.asarray(selected).astype(bool)
    labels = np.asarray(labels).astype(bool)
    if selected.shape != labels.shape or selected.ndim != 1 or len(selected) == 0:
        raise ShapeMismatch(
            f"selected {selected.shape} and labels {labels.shape} must be equal, non-empty vectors"
        )
    tp = int(np.sum(selected & labels))
    fp = int(np.sum(selected & ~labels))
    fn = int(np.sum(~selected & labels))
    tn = int(np.sum(~selected & ~labels))
    misses = tp + fp + fn
    # nothing to find and nothing claimed counts as perfect
    f1 = 2 * tp / (2 * tp + fp + fn) if misses else 1.0
    csi = tp / misses if misses else 1.0
    return ConfusionMetrics(
        accuracy=(tp + tn) / len(selected), f1=f1, csi=csi, tp=tp, fp=fp, fn=fn, tn=tn
    )


@dataclass(frozen=True)
class EvaluationResult:
    accuracy: float
    f1: float
    csi: float
    auroc: float
    n_selected: int
    n_true: int
    n_pairs: int

    def to_dict(self):
        return asdict(self)


def labeled_scores_for(reports, true_edges):
    """Ranking scores, selections and labels over every (source, target) pair tested."""
    true_edges = set(true_edges)
    keys, scores, labels, selected = [], [], [], []
    for report in reports:
        for edge in report.edges:
            key = (edge.candidate_name, report.target_name)
            keys.append(key)
            scores.append(edge.ranking_score)
            labels.append(key in true_edges)
            selected.append(edge.selected)
    return LabeledScores(np.array(scores), np.array(labels), tuple(keys)), np.array(selected)


def evaluate_reports(reports, true_edges):
    labeled, selected = labeled_scores_for(reports, true_edges)
    if len(selected) == 0:
        raise ShapeMismatch("the reports contain no tested pairs")
    confusion = confusion_metrics(selected, labeled.labels)
    try:
        area = auroc(labeled)
    except DegenerateLabels as e:
        logger.warning(f"AUROC undefined: {e}")
        area = math.nan
    return EvaluationResult(
        accuracy=confusion.accuracy,
        f1=confusion.f1,
        csi=confusion.csi,
        auroc=area,
        n_selected=int(selected.sum()),
        n_true=int(labeled.labels.sum()),
        n_pairs=len(selected),
    )
