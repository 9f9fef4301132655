"""Experiment configuration: strict parsing, defaults, and dataset assembly.

A configuration is a nested key-value document (YAML on disk) with three
sections: ``dataset``, ``model``, ``train``, plus a top-level ``out_dir``.
Unknown keys are rejected with their full path; all defaults are
materialized so the echoed copy in a run directory fully determines the
run.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .data import (
    RawGridData,
    RawTrafficData,
    SplitDatasets,
    build_crime_dataset,
    build_traffic_dataset,
    corrupt_missing,
    load_distances,
    load_values,
)
from .errors import ConfigError
from .schedules import PriorSchedule
from .synthetic import build_synthetic_dataset, read_ground_truth
from .training import TrainConfig
from .types import AblationFlags, ModelConfig


@dataclass(frozen=True)
class DatasetConfig:
    """Where the data lives and how to window it."""

    task: str = "synthetic"
    values: str = ""
    distances: str | None = None  # traffic: CSV of travel costs
    ground_truth: str | None = None  # synthetic: planted-edge sidecar
    rows: int | None = None  # crime grid geometry
    cols: int | None = None
    l_in: int = 12
    l_out: int = 12
    ratios: tuple[float, float, float] = (0.6, 0.2, 0.2)
    steps_per_day: int = 288
    interval_minutes: int = 5
    sigma: float | None = None
    threshold: float = 0.1
    start_tod: int = 0
    start_dow: int = 0
    val_days: int = 30
    drop_prob: float = 0.0  # series-wide corruption before splitting
    drop_seed: int = 0

    def __post_init__(self):
        if self.task not in ("traffic", "crime", "synthetic"):
            raise ConfigError(f"dataset.task must be traffic|crime|synthetic, got {self.task!r}")
        if not self.values:
            raise ConfigError("dataset.values: a value-array path is required")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    out_dir: str | None = None


_NESTED = {AblationFlags, DatasetConfig, ModelConfig, PriorSchedule, TrainConfig}


def _build_dataclass(cls, mapping, path):
    if not isinstance(mapping, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(mapping).__name__}")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(mapping) - set(known)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for name, value in mapping.items():
        f = known[name]
        nested = next((t for t in _NESTED if f.type == t.__name__ or f.type is t), None)
        if nested is not None and isinstance(value, dict):
            kwargs[name] = _build_dataclass(nested, value, f"{path}.{name}")
        elif isinstance(value, list):
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def config_from_mapping(mapping: dict) -> ExperimentConfig:
    return _build_dataclass(ExperimentConfig, mapping or {}, "config")


def load_config(path) -> ExperimentConfig:
    with open(Path(path)) as fh:
        mapping = yaml.safe_load(fh)
    config = config_from_mapping(mapping)
    # relative data paths resolve against the config file's directory
    base = Path(path).parent
    ds = config.dataset

    def resolve(p):
        if not p:
            return p
        q = Path(p)
        return p if q.is_absolute() else str((base / q).resolve())

    ds = dataclasses.replace(
        ds,
        values=resolve(ds.values),
        distances=resolve(ds.distances),
        ground_truth=resolve(ds.ground_truth),
    )
    return dataclasses.replace(config, dataset=ds)


def _to_plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, tuple):
        return [_to_plain(v) for v in obj]
    return obj


def dump_config(config: ExperimentConfig, path):
    """Echo a fully materialized configuration."""
    Path(path).write_text(yaml.safe_dump(_to_plain(config), sort_keys=False))


def build_datasets(ds: DatasetConfig) -> SplitDatasets:
    """Load and window the configured dataset."""
    values = load_values(ds.values)
    if ds.drop_prob > 0:
        values = corrupt_missing(values, ds.drop_prob, ds.drop_seed)
    if ds.task == "traffic":
        if not ds.distances:
            raise ConfigError("dataset.distances is required for the traffic task")
        raw = RawTrafficData(
            values=values,
            distances=load_distances(ds.distances),
            interval_minutes=ds.interval_minutes,
        )
        return build_traffic_dataset(
            raw,
            l_in=ds.l_in,
            l_out=ds.l_out,
            ratios=ds.ratios,
            sigma=ds.sigma,
            threshold=ds.threshold,
            start_tod=ds.start_tod,
            start_dow=ds.start_dow,
        )
    if ds.task == "crime":
        if ds.rows is None or ds.cols is None:
            raise ConfigError("dataset.rows and dataset.cols are required for the crime task")
        grid = RawGridData(values=values.reshape(len(values), ds.rows, ds.cols, -1))
        return build_crime_dataset(grid, l_in=ds.l_in, l_out=ds.l_out, val_days=ds.val_days, start_dow=ds.start_dow)
    return build_synthetic_dataset(
        values, l_in=ds.l_in, l_out=ds.l_out, ratios=ds.ratios, steps_per_day=ds.steps_per_day
    )


def planted_edges_for(ds: DatasetConfig):
    """Ground-truth edges for a synthetic dataset, if a sidecar is configured."""
    if ds.task != "synthetic" or not ds.ground_truth:
        return None
    return read_ground_truth(ds.ground_truth).planted_edges
