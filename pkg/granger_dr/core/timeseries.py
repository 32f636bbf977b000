"""Panel data model, lagged regression designs, standardization and folds.

A panel holds independent trajectories of the same variables. Each trajectory
is time-major: row ``t`` holds every variable at time ``t``. A lagged design
turns a panel into a regression problem ``Y_T ~ (all variables at T-1..T-lag)``
with the column of variable ``v`` at lag ``k`` at ``(k - 1) * n_variables + v``.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from sklearn.model_selection import KFold

from granger_dr.utils.errors import (
    EmptyPanel,
    IndexOutOfRange,
    InvalidConfig,
    InvalidPanel,
    LagTooLarge,
    ShapeMismatch,
    TooFewTrajectories,
)

logger = logging.getLogger(__name__)

# columns whose spread is below this (relative to their mean) are treated as constant
ZERO_VARIANCE_TOL = 1e-12


def _frozen(array):
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Panel:
    trajectories: tuple
    variable_names: tuple
    target_index: int = 0

    def __post_init__(self):
        names = tuple(str(name) for name in self.variable_names)
        if len(names) < 2:
            raise InvalidPanel("a panel needs the target and at least one covariate")
        if len(set(names)) != len(names):
            raise InvalidPanel(f"variable names are not unique: {list(names)}")
        if not 0 <= self.target_index < len(names):
            raise IndexOutOfRange(
                f"target index {self.target_index} outside [0, {len(names) - 1}]"
            )

        trajectories = []
        for r, trajectory in enumerate(self.trajectories):
            trajectory = _frozen(trajectory)
            if trajectory.ndim != 2 or trajectory.shape[1] != len(names):
                raise InvalidPanel(
                    f"trajectory {r} has shape {trajectory.shape}, "
                    f"expected (T, {len(names)})"
                )
            if trajectory.shape[0] < 2:
                raise InvalidPanel(f"trajectory {r} has fewer than 2 time steps")
            if not np.all(np.isfinite(trajectory)):
                raise InvalidPanel(f"trajectory {r} contains non-finite values")
            trajectories.append(trajectory)

        object.__setattr__(self, "trajectories", tuple(trajectories))
        object.__setattr__(self, "variable_names", names)

    @property
    def n_variables(self):
        return len(self.variable_names)

    @property
    def n_trajectories(self):
        return len(self.trajectories)

    @property
    def lengths(self):
        return [trajectory.shape[0] for trajectory in self.trajectories]

    def index_of(self, name):
        try:
            return self.variable_names.index(str(name))
        except ValueError:
            raise IndexOutOfRange(
                f"unknown variable '{name}', known: {', '.join(self.variable_names)}"
            ) from None

    def with_target(self, target_index):
        return Panel(self.trajectories, self.variable_names, target_index)

    def subset(self, indices):
        indices = list(indices)
        return Panel(
            tuple(self.trajectories[i] for i in indices),
            self.variable_names,
            self.target_index,
        )

    def sample_trajectories(self, n, seed):
        """Seeded random subset of ``n`` trajectories, kept in panel order."""
        if not 1 <= n <= self.n_trajectories:
            raise InvalidConfig(
                "max_trajectories", f"{n} not in [1, {self.n_trajectories}]"
            )
        rng = np.random.default_rng(seed)
        chosen = np.sort(rng.choice(self.n_trajectories, size=n, replace=False))
        return self.subset(chosen)


@dataclass(frozen=True, eq=False)
class LaggedDesign:
    features: np.ndarray
    targets: np.ndarray
    lag: int
    n_variables: int
    target_index: int
    row_trajectory: np.ndarray
    row_time: np.ndarray

    @property
    def n_rows(self):
        return self.features.shape[0]

    @property
    def width(self):
        return self.features.shape[1]

    def column(self, k, v):
        if not 1 <= k <= self.lag:
            raise IndexOutOfRange(f"lag {k} outside [1, {self.lag}]")
        if not 0 <= v < self.n_variables:
            raise IndexOutOfRange(f"variable {v} outside [0, {self.n_variables - 1}]")
        return (k - 1) * self.n_variables + v

    @property
    def row_origin(self):
        return list(zip(self.row_trajectory.tolist(), self.row_time.tolist()))

    def fold_rows(self, assignment, fold):
        """Row indices (train, held-out) for one fold of a trajectory assignment."""
        row_fold = assignment.trajectory_to_fold[self.row_trajectory]
        heldout = np.flatnonzero(row_fold == fold)
        train = np.flatnonzero(row_fold != fold)
        return train, heldout

    def split_rows(self, rows):
        """Split ``rows`` into two disjoint halves for independent nuisance fits.

        Whole trajectories alternate between the halves; rows of a single
        trajectory are cut in time instead.
        """
        rows = np.asarray(rows)
        if len(rows) < 2:
            raise ShapeMismatch(f"cannot split {len(rows)} rows into two halves")
        owners = self.row_trajectory[rows]
        trajectories = np.unique(owners)
        if len(trajectories) >= 2:
            first = np.isin(owners, trajectories[::2])
            return rows[first], rows[~first]
        cut = len(rows) // 2
        return rows[:cut], rows[cut:]


def build_lagged_design(panel, target_index, lag):
    if panel.n_trajectories == 0:
        raise EmptyPanel("the panel has no trajectories")
    if not 0 <= target_index < panel.n_variables:
        raise IndexOutOfRange(
            f"target index {target_index} outside [0, {panel.n_variables - 1}]"
        )
    if lag < 1:
        raise InvalidConfig("lag", f"must be a positive integer, got {lag}")
    shortest = min(panel.lengths)
    if lag >= shortest:
        raise LagTooLarge(
            f"lag {lag} needs trajectories longer than {lag} steps, shortest has {shortest}"
        )

    blocks, targets, row_trajectory, row_time = [], [], [], []
    for r, trajectory in enumerate(panel.trajectories):
        length = trajectory.shape[0]
        # block k-1 holds every variable at T-k for T = lag..length-1
        blocks.append(
            np.concatenate(
                [trajectory[lag - k : length - k] for k in range(1, lag + 1)], axis=1
            )
        )
        targets.append(trajectory[lag:, target_index])
        row_trajectory.append(np.full(length - lag, r, dtype=int))
        row_time.append(np.arange(lag, length, dtype=int))

    design = LaggedDesign(
        features=_frozen(np.concatenate(blocks, axis=0)),
        targets=_frozen(np.concatenate(targets)),
        lag=lag,
        n_variables=panel.n_variables,
        target_index=target_index,
        row_trajectory=np.concatenate(row_trajectory),
        row_time=np.concatenate(row_time),
    )
    logger.debug(
        f"Built lagged design with {design.n_rows} rows and {design.width} columns "
        f"(lag={lag}, target={panel.variable_names[target_index]})"
    )
    return design


def mask_columns_for(design, variable):
    if not 0 <= variable < design.n_variables:
        raise IndexOutOfRange(
            f"variable {variable} outside [0, {design.n_variables - 1}]"
        )
    return frozenset(design.column(k, variable) for k in range(1, design.lag + 1))


@dataclass(frozen=True, eq=False)
class Standardizer:
    means: np.ndarray
    stds: np.ndarray
    zero_variance: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.zero_variance is None:
            object.__setattr__(
                self, "zero_variance", np.zeros(len(self.means), dtype=bool)
            )

    @classmethod
    def identity(cls, width):
        return cls(np.zeros(width), np.ones(width))

    @property
    def width(self):
        return len(self.means)

    def transform(self, features):
        features = np.asarray(features, dtype=float)
        if features.ndim != 2 or features.shape[1] != self.width:
            raise ShapeMismatch(
                f"expected {self.width} columns, got shape {features.shape}"
            )
        return (features - self.means) / self.stds

    def inverse_transform(self, standardized):
        standardized = np.asarray(standardized, dtype=float)
        if standardized.ndim != 2 or standardized.shape[1] != self.width:
            raise ShapeMismatch(
                f"expected {self.width} columns, got shape {standardized.shape}"
            )
        return standardized * self.stds + self.means


def fit_standardizer(features, rows=None):
    features = np.asarray(features, dtype=float)
    subset = features if rows is None else features[np.asarray(rows)]
    if subset.shape[0] == 0:
        raise ShapeMismatch("cannot fit a standardizer on zero rows")

    means = subset.mean(axis=0)
    stds = subset.std(axis=0)
    zero_variance = stds <= ZERO_VARIANCE_TOL * np.maximum(1.0, np.abs(means))
    if zero_variance.any():
        logger.debug(
            f"{int(zero_variance.sum())} zero-variance columns, std forced to 1"
        )
    stds = np.where(zero_variance, 1.0, stds)
    return Standardizer(means=means, stds=stds, zero_variance=zero_variance)


def apply_standardizer(standardizer, features):
    return standardizer.transform(features)


@dataclass(frozen=True, eq=False)
class FoldAssignment:
    k: int
    trajectory_to_fold: np.ndarray

    def fold_sizes(self):
        return np.bincount(self.trajectory_to_fold, minlength=self.k)

    def trajectories_in(self, fold):
        return np.flatnonzero(self.trajectory_to_fold == fold)


def assign_folds(n_trajectories, k, seed):
    """Split trajectories uniformly at random into ``k`` folds balanced within 1."""
    if k < 2:
        raise InvalidConfig("k_folds", f"must be at least 2, got {k}")
    if n_trajectories < k:
        raise TooFewTrajectories(
            f"{n_trajectories} trajectories cannot fill {k} folds"
        )

    trajectory_to_fold = np.empty(n_trajectories, dtype=int)
    splitter = KFold(n_splits=k, shuffle=True, random_state=seed)
    for fold, (_, heldout) in enumerate(splitter.split(np.arange(n_trajectories))):
        trajectory_to_fold[heldout] = fold
    trajectory_to_fold.setflags(write=False)
    return FoldAssignment(k=k, trajectory_to_fold=trajectory_to_fold)
