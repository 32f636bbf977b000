"""Synthetic benchmark: random lagged structure driven by random tanh MLPs.

Covariates ``X^1..X^m`` follow ``X^j_t = f_j(parents at t-1..t-delta) + N(0, 1)``
and the target ``Y_t = f_Y(parents) + N(0, (nsr * signal_scale)**2)``, with every
``f`` a one-hidden-layer tanh network whose output is scaled to
``[-signal_scale, signal_scale]``. The first ``delta`` steps of every trajectory
are drawn uniformly from that range.

Randomness is split into independent Philox streams keyed by purpose: the
structure, one stream per transform, and one stream per (trajectory, variable)
whose ``t``-th draws feed time step ``t``. Changing one part of the structure
therefore leaves every unrelated draw untouched.
"""

import logging
from dataclasses import asdict, dataclass

import numpy as np

from granger_dr.core.timeseries import Panel
from granger_dr.utils.errors import InvalidConfig

logger = logging.getLogger(__name__)

STRUCTURE_STREAM = 0
TRANSFORM_STREAM = 1
TRAJECTORY_STREAM = 2

# |X| beyond signal_scale + this many noise standard deviations is reported
BOUND_SLACK = 8.0


def _stream(seed, *key):
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(sequence))


def variable_names(m):
    return ("Y",) + tuple(f"X{j}" for j in range(1, m + 1))


@dataclass(frozen=True)
class SynthConfig:
    m: int = 10
    delta: int = 2
    timesteps: int = 500
    n_traj: int = 5
    nsr: float = 0.1
    edge_prob: float = 0.5
    target_edge_prob: float = None
    hidden_units: int = 200
    signal_scale: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise InvalidConfig("m", f"must be >= 1, got {self.m}")
        if self.delta < 1:
            raise InvalidConfig("delta", f"must be >= 1, got {self.delta}")
        if self.timesteps <= self.delta:
            raise InvalidConfig(
                "timesteps", f"must exceed delta={self.delta}, got {self.timesteps}"
            )
        if self.n_traj < 1:
            raise InvalidConfig("trajectories", f"must be >= 1, got {self.n_traj}")
        if not self.nsr >= 0:
            raise InvalidConfig("nsr", f"must be >= 0, got {self.nsr}")
        for name in ("edge_prob", "target_edge_prob"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise InvalidConfig(name, f"must lie in [0, 1], got {value}")
        if self.hidden_units < 1:
            raise InvalidConfig("hidden_units", f"must be >= 1, got {self.hidden_units}")
        if not self.signal_scale > 0:
            raise InvalidConfig("signal_scale", f"must be > 0, got {self.signal_scale}")

    @property
    def y_edge_prob(self):
        return self.edge_prob if self.target_edge_prob is None else self.target_edge_prob

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True, eq=False)
class AdjacencyTensor:
    """Ground truth: ``sigma[k-1, i, j]`` is X^(i+1) at lag k -> X^(j+1),
    ``sigma_y[k-1, j]`` is X^(j+1) at lag k -> Y."""

    sigma: np.ndarray
    sigma_y: np.ndarray

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=np.uint8)
        sigma_y = np.asarray(self.sigma_y, dtype=np.uint8)
        if sigma.ndim != 3 or sigma.shape[1] != sigma.shape[2]:
            raise InvalidConfig("sigma", f"must have shape (delta, m, m), got {sigma.shape}")
        if sigma_y.shape != sigma.shape[:2]:
            raise InvalidConfig(
                "sigma_y", f"must have shape {sigma.shape[:2]}, got {sigma_y.shape}"
            )
        if sigma.max(initial=0) > 1 or sigma_y.max(initial=0) > 1:
            raise InvalidConfig("sigma", "entries must be 0 or 1")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "sigma_y", sigma_y)

    @property
    def delta(self):
        return self.sigma.shape[0]

    @property
    def m(self):
        return self.sigma.shape[1]

    def parents_of_target(self):
        return sorted(int(j) for j in np.flatnonzero(self.sigma_y.any(axis=0)))

    def parents_of_covariate(self, j):
        return sorted(int(i) for i in np.flatnonzero(self.sigma[:, :, j].any(axis=0)))

    def summary_edges(self, names=None):
        names = names or variable_names(self.m)
        edges = {(names[j + 1], names[0]) for j in self.parents_of_target()}
        for j in range(self.m):
            edges.update((names[i + 1], names[j + 1]) for i in self.parents_of_covariate(j))
        return edges

    def with_target_edge(self, k, j, value):
        sigma_y = self.sigma_y.copy()
        sigma_y[k - 1, j] = value
        return AdjacencyTensor(self.sigma.copy(), sigma_y)

    def density(self):
        return float(
            (self.sigma.sum() + self.sigma_y.sum()) / (self.sigma.size + self.sigma_y.size)
        )


@dataclass(frozen=True, eq=False)
class MlpTransform:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float
    signal_scale: float
    parents: tuple = ()

    @property
    def input_dim(self):
        return self.w1.shape[1]

    @property
    def parentless(self):
        return self.input_dim == 0

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        hidden = np.tanh(x @ self.w1.T + self.b1)
        return self.signal_scale * np.tanh(hidden @ self.w2 + self.b2)


def sample_structure(config):
    shape = (config.delta, config.m, config.m)
    sigma = _stream(config.seed, STRUCTURE_STREAM, 0).random(shape) < config.edge_prob
    sigma_y = (
        _stream(config.seed, STRUCTURE_STREAM, 1).random(shape[:2]) < config.y_edge_prob
    )
    return AdjacencyTensor(sigma.astype(np.uint8), sigma_y.astype(np.uint8))


def _parent_slots(structure, column):
    # lag-major, parent-minor; panel column 0 is Y, column j is X^j
    if column == 0:
        return tuple(
            (k + 1, j + 1)
            for k in range(structure.delta)
            for j in range(structure.m)
            if structure.sigma_y[k, j]
        )
    return tuple(
        (k + 1, i + 1)
        for k in range(structure.delta)
        for i in range(structure.m)
        if structure.sigma[k, i, column - 1]
    )


def init_transforms(structure, config):
    transforms = []
    hidden = config.hidden_units
    for column in range(structure.m + 1):
        parents = _parent_slots(structure, column)
        fan_in = len(parents)
        rng = _stream(config.seed, TRANSFORM_STREAM, column)
        if fan_in:
            w1 = rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(hidden, fan_in))
            b1 = rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=hidden)
        else:
            w1 = np.zeros((hidden, 0))
            b1 = np.zeros(hidden)
        w2 = rng.normal(0.0, 1.0 / np.sqrt(hidden), size=hidden)
        b2 = float(rng.normal(0.0, 1.0 / np.sqrt(hidden)))
        transforms.append(MlpTransform(w1, b1, w2, b2, config.signal_scale, parents))
    return transforms


def simulate_panel(config, structure=None):
    """Generate a panel (column 0 is Y) and its ground-truth structure."""
    if structure is None:
        structure = sample_structure(config)
    elif structure.delta != config.delta or structure.m != config.m:
        raise InvalidConfig(
            "structure",
            f"shape (delta={structure.delta}, m={structure.m}) does not match "
            f"the config (delta={config.delta}, m={config.m})",
        )

    transforms = init_transforms(structure, config)
    n_traj, timesteps, n_vars = config.n_traj, config.timesteps, config.m + 1
    scale = config.signal_scale

    uniform = np.empty((n_traj, n_vars, timesteps))
    normal = np.empty((n_traj, n_vars, timesteps))
    for r in range(n_traj):
        for v in range(n_vars):
            rng = _stream(config.seed, TRAJECTORY_STREAM, r, v)
            uniform[r, v] = rng.uniform(-scale, scale, size=timesteps)
            normal[r, v] = rng.standard_normal(timesteps)

    noise_scale = np.ones(n_vars)
    noise_scale[0] = config.nsr * scale

    data = np.empty((n_traj, timesteps, n_vars))
    data[:, : config.delta, :] = uniform[:, :, : config.delta].transpose(0, 2, 1)
    slots = [
        (np.array([lag for lag, _ in t.parents], dtype=int),
         np.array([col for _, col in t.parents], dtype=int))
        for t in transforms
    ]
    for t in range(config.delta, timesteps):
        for v, transform in enumerate(transforms):
            if transform.parentless:
                signal = uniform[:, v, t]
            else:
                lags, columns = slots[v]
                signal = transform(data[:, t - lags, columns])
            data[:, t, v] = signal + noise_scale[v] * normal[:, v, t]

    out_of_bounds = int(np.sum(np.abs(data[:, :, 1:]) > scale + BOUND_SLACK))
    if out_of_bounds:
        logger.warning(
            f"{out_of_bounds} covariate values exceed the bound {scale + BOUND_SLACK:g}"
        )

    panel = Panel(tuple(data[r] for r in range(n_traj)), variable_names(config.m), 0)
    logger.info(
        f"Simulated {n_traj} trajectories of {timesteps} steps with m={config.m}, "
        f"delta={config.delta}, nsr={config.nsr:g}; "
        f"Y parents: {[f'X{j + 1}' for j in structure.parents_of_target()]}"
    )
    return panel, structure
