"""Core domain types: windows, datasets, model configuration, distillation output.

All types are immutable after construction and safe to share across
concurrent readers.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, ShapeError
from .graphs import Edge, SpatialGraph


@dataclass(frozen=True)
class Scaler:
    """Z-score statistics fitted on the training portion of a series."""

    mean: float
    std: float

    def __post_init__(self):
        if not self.std > 0:
            raise ValueError(f"std must be > 0, got {self.std}")

    @classmethod
    def fit(cls, values: np.ndarray) -> "Scaler":
        """Fit on raw values; a zero std (constant series) is guarded to 1."""
        std = float(np.std(values))
        return cls(mean=float(np.mean(values)), std=std if std > 0 else 1.0)

    def transform(self, values: np.ndarray) -> np.ndarray:
        return (values - self.mean) / self.std

    def inverse_transform(self, values: np.ndarray) -> np.ndarray:
        return values * self.std + self.mean


@dataclass(frozen=True)
class STWindow:
    """One training example: an input window and its forecast targets.

    ``features`` has shape (L, N, F) in normalized units; ``targets`` has
    shape (L', N, F') in raw units. ``tod_index`` / ``dow_index`` give the
    time-of-day and day-of-week position of each input step.
    """

    features: np.ndarray
    targets: np.ndarray
    tod_index: np.ndarray
    dow_index: np.ndarray

    def __post_init__(self):
        feats = np.asarray(self.features)
        tgts = np.asarray(self.targets)
        if feats.ndim != 3:
            raise ShapeError(f"features must be (L, N, F), got shape {feats.shape}")
        if tgts.ndim != 3:
            raise ShapeError(f"targets must be (L', N, F'), got shape {tgts.shape}")
        if feats.shape[0] < 1 or tgts.shape[0] < 1:
            raise ShapeError("both horizons L and L' must be >= 1")
        if feats.shape[1] != tgts.shape[1]:
            raise ShapeError(
                f"features N={feats.shape[1]} != targets N={tgts.shape[1]}"
            )
        tod = np.asarray(self.tod_index)
        dow = np.asarray(self.dow_index)
        if tod.shape != (feats.shape[0],) or dow.shape != (feats.shape[0],):
            raise ShapeError("tod_index and dow_index must have one entry per input step")

    @property
    def num_input_steps(self) -> int:
        return self.features.shape[0]

    @property
    def num_nodes(self) -> int:
        return self.features.shape[1]

    def __eq__(self, other):
        if not isinstance(other, STWindow):
            return NotImplemented
        return (
            np.array_equal(self.features, other.features)
            and np.array_equal(self.targets, other.targets)
            and np.array_equal(self.tod_index, other.tod_index)
            and np.array_equal(self.dow_index, other.dow_index)
        )


def validate_window(window: STWindow, graph: SpatialGraph, steps_per_day: int | None = None):
    """Raise if a window is inconsistent with a spatial graph.

    Checks node-count agreement, finiteness of features and targets, and
    calendar-index ranges plus their consecutive-step consistency (when
    ``steps_per_day`` is given).
    """
    if window.num_nodes != graph.num_nodes:
        raise ShapeError(
            f"features node axis ({window.num_nodes}) does not match graph "
            f"num_nodes ({graph.num_nodes})"
        )
    if not np.isfinite(window.features).all():
        raise ValueError("features contain non-finite entries")
    if not np.isfinite(window.targets).all():
        raise ValueError("targets contain non-finite entries")
    tod = np.asarray(window.tod_index)
    dow = np.asarray(window.dow_index)
    if (dow < 0).any() or (dow >= 7).any():
        raise ValueError(f"dow_index out of range [0,7): {dow}")
    if steps_per_day is not None:
        if (tod < 0).any() or (tod >= steps_per_day).any():
            raise ValueError(f"tod_index out of range [0,{steps_per_day}): {tod}")
        for i in range(len(tod) - 1):
            if tod[i + 1] != (tod[i] + 1) % steps_per_day:
                raise ValueError("tod_index does not advance by 1 per step")
            wrapped = tod[i] + 1 == steps_per_day
            if dow[i + 1] != (dow[i] + int(wrapped)) % 7:
                raise ValueError("dow_index inconsistent with tod_index wrap-around")
    elif (tod < 0).any():
        raise ValueError("tod_index must be non-negative")


@dataclass(frozen=True)
class STGraphDataset:
    """Windows of one split plus the structures shared across them."""

    windows: tuple[STWindow, ...]
    spatial_graph: SpatialGraph
    scaler: Scaler
    task: str  # one of {"traffic", "crime", "synthetic"}

    TASKS = ("traffic", "crime", "synthetic")

    def __post_init__(self):
        if self.task not in self.TASKS:
            raise ConfigError(f"task must be one of {self.TASKS}, got {self.task!r}")
        shapes = {(w.num_nodes, w.features.shape[2]) for w in self.windows}
        if len(shapes) > 1:
            raise ShapeError(f"windows disagree on (N, F): {sorted(shapes)}")
        if shapes and next(iter(shapes))[0] != self.spatial_graph.num_nodes:
            raise ShapeError("window node count does not match spatial graph")

    def __len__(self) -> int:
        return len(self.windows)


@dataclass(frozen=True)
class AblationFlags:
    """Switches that replace parts of the distillation path.

    ``no_spatial_ib`` / ``no_temporal_ib`` force the corresponding selector
    to all-ones and zero its KL term. ``random_drop_p`` bypasses distillation
    entirely and instead drops each edge i.i.d. with the given probability
    during training.
    """

    no_spatial_ib: bool = False
    no_temporal_ib: bool = False
    random_drop_p: float | None = None

    def __post_init__(self):
        if self.random_drop_p is not None and not 0.0 <= self.random_drop_p <= 1.0:
            raise ConfigError(f"random_drop_p must be in [0,1], got {self.random_drop_p}")


@dataclass(frozen=True)
class ModelConfig:
    """Hyperparameters of the forecaster.

    ``lambda1`` / ``lambda2`` are the peak weights of the two structure
    penalties; the anneal schedule scales them from 0 up to these values.
    ``noise_kind`` selects the relaxation noise: ``"gumbel"`` adds a single
    Gumbel(0,1) draw per edge, ``"logistic"`` the difference of two.
    """

    d: int = 64
    d_s: int = 64
    d_t: int = 128
    heads: int = 16
    gat_layers: int = 2
    tau: float = 1.0
    r_s: float = 0.9
    r_t: float = 0.9
    lambda1: float = 1.0
    lambda2: float = 1.0
    delta: float = 1.0
    steps_per_day: int = 288
    d_x: int | None = None
    head_hidden: int = 512
    noise_kind: str = "gumbel"
    ablation: AblationFlags = field(default_factory=AblationFlags)

    def __post_init__(self):
        if self.tau <= 0:
            raise ConfigError(f"tau must be > 0, got {self.tau}")
        for name in ("r_s", "r_t"):
            r = getattr(self, name)
            if not 0.0 < r < 1.0:
                raise ConfigError(f"{name} must be in (0,1), got {r}")
        for name in ("lambda1", "lambda2"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.delta <= 0:
            raise ConfigError(f"delta must be > 0, got {self.delta}")
        if self.noise_kind not in ("gumbel", "logistic"):
            raise ConfigError(f"unknown noise_kind {self.noise_kind!r}")
        for name in ("d", "d_s", "d_t", "heads", "gat_layers", "steps_per_day", "head_hidden"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")

    @property
    def feature_lift_dim(self) -> int:
        return self.d if self.d_x is None else self.d_x

    def with_ablation(self, **kwargs) -> "ModelConfig":
        return replace(self, ablation=replace(self.ablation, **kwargs))


def _check_prob_map(name: str, probs: dict[Edge, float]):
    for edge, p in probs.items():
        if not 0.0 < p < 1.0:
            raise ValueError(f"{name}[{edge}] = {p} is outside (0,1)")


@dataclass(frozen=True)
class DistillResult:
    """Per-edge keep probabilities, soft selectors, and KL penalties."""

    spatial_probs: dict[Edge, float]
    temporal_probs: dict[Edge, float]
    spatial_selector: dict[Edge, float]
    temporal_selector: dict[Edge, float]
    kl_spatial: float
    kl_temporal: float

    def __post_init__(self):
        _check_prob_map("spatial_probs", self.spatial_probs)
        _check_prob_map("temporal_probs", self.temporal_probs)
        if self.kl_spatial < 0 or self.kl_temporal < 0:
            raise ValueError("KL penalties must be non-negative")
