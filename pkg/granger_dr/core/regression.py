"""Nuisance regressors for the doubly robust scores.

One regressor serves as both the regression function g and its Riesz
representer, because the moment ``m(V; g) = Y * g`` has representer
``E[Y | X] = g``. The kernel ridge backend solves the dual system
``(K + lambda I) c = y`` with ``K_ab = (gamma <x_a, x_b> + coef0) ** degree``.
"""

import logging
import time
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from sklearn.metrics.pairwise import polynomial_kernel

from granger_dr.core.timeseries import Standardizer, fit_standardizer
from granger_dr.metrics import JITTER_ESCALATIONS, REGRESSION_FIT_TIME, REGRESSIONS_FITTED
from granger_dr.utils.errors import (
    IndexOutOfRange,
    InvalidConfig,
    ShapeMismatch,
    SingularSystem,
)

logger = logging.getLogger(__name__)

JITTER_SCHEDULE = (0.0, 1e-10, 1e-8, 1e-6)
RESIDUAL_TOL = 1e-6


class RegressorKind(str, Enum):
    KERNEL_RIDGE_POLY = "kernel_ridge_poly"
    MLP = "mlp"


@dataclass(frozen=True)
class RegressorSpec:
    kind: RegressorKind = RegressorKind.KERNEL_RIDGE_POLY
    kernel_degree: int = 3
    kernel_coef0: float = 1.0
    ridge_lambda: float = 1.0
    kernel_gamma: object = "auto"
    mlp_hidden: int = 64
    mlp_epochs: int = 500
    mlp_learning_rate: float = 0.01
    seed: int = 0

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", RegressorKind(self.kind))
        except ValueError:
            raise InvalidConfig(
                "regressor", f"unknown kind '{self.kind}'"
            ) from None
        if not self.ridge_lambda > 0:
            raise InvalidConfig("ridge_lambda", f"must be > 0, got {self.ridge_lambda}")
        if int(self.kernel_degree) != self.kernel_degree or self.kernel_degree < 1:
            raise InvalidConfig(
                "kernel_degree", f"must be an integer >= 1, got {self.kernel_degree}"
            )
        if self.kernel_gamma != "auto":
            try:
                gamma = float(self.kernel_gamma)
            except (TypeError, ValueError):
                raise InvalidConfig(
                    "kernel_gamma", f"must be 'auto' or a number, got {self.kernel_gamma!r}"
                ) from None
            if not gamma > 0:
                raise InvalidConfig("kernel_gamma", f"must be > 0, got {gamma}")
            object.__setattr__(self, "kernel_gamma", gamma)
        if self.mlp_hidden < 1:
            raise InvalidConfig("mlp_hidden", f"must be >= 1, got {self.mlp_hidden}")
        if self.mlp_epochs < 1:
            raise InvalidConfig("mlp_epochs", f"must be >= 1, got {self.mlp_epochs}")
        if not self.mlp_learning_rate > 0:
            raise InvalidConfig(
                "mlp_learning_rate", f"must be > 0, got {self.mlp_learning_rate}"
            )

    def resolve_gamma(self, width):
        if self.kernel_gamma == "auto":
            return 1.0 / max(1, width)
        return float(self.kernel_gamma)

    def to_dict(self):
        echo = asdict(self)
        echo["kind"] = self.kind.value
        return echo


class FittedRegressor:
    """Shared prediction path: shape checks, standardization and masking."""

    backend = None

    def __init__(self, spec, standardizer):
        self.spec = spec
        self.standardizer = standardizer

    @property
    def width(self):
        return self.standardizer.width

    def _standardize(self, features):
        features = np.asarray(features, dtype=float)
        if features.ndim != 2 or features.shape[1] != self.width:
            raise ShapeMismatch(
                f"model was fitted on {self.width} columns, got shape {features.shape}"
            )
        return self.standardizer.transform(features)

    def _predict_standardized(self, standardized):
        raise NotImplementedError

    def predict(self, features):
        standardized = self._standardize(features)
        if standardized.shape[0] == 0:
            return np.empty(0)
        return self._predict_standardized(standardized)

    def predict_masked(self, features, masked_columns):
        """Predict with the masked columns set to zero in standardized space.

        With standardization on, zero is the training mean of each column, so
        masking imputes the mean of the removed series.
        """
        standardized = self._standardize(features)
        masked = sorted(int(c) for c in masked_columns)
        if masked and not (0 <= masked[0] and masked[-1] < self.width):
            raise IndexOutOfRange(
                f"masked columns {masked} outside [0, {self.width - 1}]"
            )
        if standardized.shape[0] == 0:
            return np.empty(0)
        standardized[:, masked] = 0.0
        return self._predict_standardized(standardized)


class KernelRidgeModel(FittedRegressor):
    backend = RegressorKind.KERNEL_RIDGE_POLY.value

    def __init__(self, spec, standardizer, train_features, dual_coeffs, gamma):
        super().__init__(spec, standardizer)
        self.train_features = train_features
        self.dual_coeffs = dual_coeffs
        self.gamma = gamma

    def kernel(self, left, right=None):
        return polynomial_kernel(
            left,
            self.train_features if right is None else right,
            degree=self.spec.kernel_degree,
            gamma=self.gamma,
            coef0=self.spec.kernel_coef0,
        )

    def _predict_standardized(self, standardized):
        return self.kernel(standardized) @ self.dual_coeffs

    @classmethod
    def fit(cls, spec, standardizer, features, targets):
        train = standardizer.transform(features)
        gamma = spec.resolve_gamma(train.shape[1])
        gram = polynomial_kernel(
            train, degree=spec.kernel_degree, gamma=gamma, coef0=spec.kernel_coef0
        )
        # the Gram matrix is symmetric up to rounding; solve against the exact mirror
        gram = 0.5 * (gram + gram.T)
        dual_coeffs = _solve_regularized(gram, targets, spec.ridge_lambda)
        return cls(spec, standardizer, train, dual_coeffs, gamma)


def _solve_regularized(gram, targets, ridge_lambda):
    n = gram.shape[0]
    y_norm = np.linalg.norm(targets)
    for jitter in JITTER_SCHEDULE:
        system = gram + (ridge_lambda + jitter) * np.eye(n)
        try:
            factor = cho_factor(system, lower=True, check_finite=True)
        except (LinAlgError, ValueError) as e:
            logger.warning(f"Cholesky failed with jitter {jitter:g}: {e}")
            JITTER_ESCALATIONS.inc()
            continue
        coeffs = cho_solve(factor, targets)
        residual = np.linalg.norm(system @ coeffs - targets)
        if residual <= RESIDUAL_TOL * max(y_norm, 1.0):
            if jitter > 0:
                logger.warning(f"Kernel system solved after adding jitter {jitter:g}")
            return coeffs
        logger.warning(
            f"Kernel solve residual {residual:.3e} too large with jitter {jitter:g}"
        )
        JITTER_ESCALATIONS.inc()
    raise SingularSystem(
        f"regularized kernel system of size {n} could not be solved "
        f"with jitter up to {JITTER_SCHEDULE[-1]:g}"
    )


def fit(spec, features, targets, standardize=True):
    features = np.asarray(features, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if features.ndim != 2 or targets.ndim != 1 or features.shape[0] != targets.shape[0]:
        raise ShapeMismatch(
            f"features {features.shape} and targets {targets.shape} do not line up"
        )
    if features.shape[0] < 1:
        raise ShapeMismatch("cannot fit a regressor on zero rows")
    if not (np.all(np.isfinite(features)) and np.all(np.isfinite(targets))):
        raise ShapeMismatch("features and targets must be finite")

    standardizer = (
        fit_standardizer(features)
        if standardize
        else Standardizer.identity(features.shape[1])
    )
    backend = spec.kind.value
    start_time = time.perf_counter()
    if spec.kind is RegressorKind.KERNEL_RIDGE_POLY:
        model = KernelRidgeModel.fit(spec, standardizer, features, targets)
    else:
        from granger_dr.core.mlp import MlpModel

        model = MlpModel.fit(spec, standardizer, features, targets)
    REGRESSION_FIT_TIME.labels(backend=backend).observe(time.perf_counter() - start_time)
    REGRESSIONS_FITTED.labels(backend=backend).inc()
    return model


def predict(model, features):
    return model.predict(features)


def predict_masked(model, features, masked_columns):
    return model.predict_masked(features, masked_columns)
