"""Dataset ingestion, splitting, windowing, and corruption.

All functions here are pure over immutable inputs. Raw value arrays are
plain dense files (``.npy``, or ``.npz`` with key ``data`` matching the
public traffic-sensor distribution); travel costs come from a CSV with
header ``from,to,cost``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ShapeError
from .graphs import SpatialGraph, build_spatial_graph_gaussian, build_spatial_graph_grid
from .types import Scaler, STGraphDataset, STWindow


@dataclass(frozen=True)
class RawTrafficData:
    """Sensor observations plus pairwise travel costs."""

    values: np.ndarray  # (T_total, N, F)
    distances: tuple[tuple[int, int, float], ...]
    interval_minutes: int = 5

    @property
    def steps_per_day(self) -> int:
        return 24 * 60 // self.interval_minutes


@dataclass(frozen=True)
class RawGridData:
    """Daily event counts on a rows x cols grid with C categories."""

    values: np.ndarray  # (D_total, rows, cols, C)

    def __post_init__(self):
        if np.asarray(self.values).ndim != 4:
            raise ShapeError(f"grid values must be (D, rows, cols, C), got {np.asarray(self.values).shape}")
        if (np.asarray(self.values) < 0).any():
            raise ValueError("grid counts must be non-negative")

    @property
    def num_nodes(self) -> int:
        return self.values.shape[1] * self.values.shape[2]

    def as_node_series(self) -> np.ndarray:
        """Flatten the grid into (D, rows*cols, C)."""
        d, r, c, ch = self.values.shape
        return self.values.reshape(d, r * c, ch)


def load_values(path) -> np.ndarray:
    """Load a dense value array from ``.npy`` or ``.npz`` (key ``data``)."""
    path = Path(path)
    if path.suffix == ".npz":
        with np.load(path) as archive:
            values = archive["data"]
    else:
        values = np.load(path)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 2:
        values = values[:, :, None]
    if values.ndim != 3:
        raise ShapeError(f"{path}: expected a (T, N, F) array, got shape {values.shape}")
    return values


def save_values(path, values: np.ndarray):
    np.save(Path(path), np.asarray(values))


def load_distances(path) -> tuple[tuple[int, int, float], ...]:
    """Read (from, to, cost) triples from a CSV with header ``from,to,cost``."""
    path = Path(path)
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip().lower() for h in header[:3]] != ["from", "to", "cost"]:
            raise ValueError(f"{path}: expected header 'from,to,cost', got {header}")
        for row in reader:
            if not row:
                continue
            rows.append((int(row[0]), int(row[1]), float(row[2])))
    return tuple(rows)


def save_distances(path, distances):
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["from", "to", "cost"])
        writer.writerows(distances)


def split_series(values: np.ndarray, ratios=(0.6, 0.2, 0.2), min_split_length: int | None = None):
    """Contiguous chronological split; the rounding remainder goes to test.

    ``ratios`` must sum to 1. With ``min_split_length`` given (usually
    L + L'), raises if any split would be too short to window.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {ratios}")
    total = len(values)
    n_train = int(total * ratios[0])
    n_val = int(total * ratios[1])
    splits = (values[:n_train], values[n_train : n_train + n_val], values[n_train + n_val :])
    if min_split_length is not None:
        for name, split in zip(("train", "val", "test"), splits):
            if len(split) < min_split_length:
                raise ValueError(
                    f"{name} split has {len(split)} steps, fewer than required {min_split_length}"
                )
    return splits


def split_series_crime(values: np.ndarray, val_days: int = 30, min_split_length: int | None = None):
    """7:1 train/test split with the last ``val_days`` of training held out
    for validation: [train | val | test] in chronological order."""
    total = len(values)
    n_test = total // 8
    n_train_total = total - n_test
    if n_train_total <= val_days:
        raise ValueError(f"series too short for a {val_days}-day validation carve-out")
    n_train = n_train_total - val_days
    splits = (values[:n_train], values[n_train:n_train_total], values[n_train_total:])
    if min_split_length is not None:
        for name, split in zip(("train", "val", "test"), splits):
            if len(split) < min_split_length:
                raise ValueError(
                    f"{name} split has {len(split)} steps, fewer than required {min_split_length}"
                )
    return splits


def window_dataset(
    values: np.ndarray,
    l_in: int,
    l_out: int,
    scaler: Scaler,
    steps_per_day: int = 288,
    start_tod: int = 0,
    start_dow: int = 0,
    target_values: np.ndarray | None = None,
    target_features: int | None = None,
) -> tuple[STWindow, ...]:
    """Slide an (L, L') window over a split; features z-scored, targets raw.

    ``start_tod`` / ``start_dow`` are the calendar position of the split's
    first step. ``target_values`` lets targets come from a different array
    than features (e.g. clean targets next to corrupted inputs); it must be
    aligned step-for-step with ``values``. ``target_features`` truncates the
    target feature axis to the first F' channels.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 3:
        raise ShapeError(f"values must be (T, N, F), got shape {values.shape}")
    total = len(values)
    if total < l_in + l_out:
        raise ValueError(f"split of length {total} cannot fit a window of {l_in}+{l_out} steps")
    targets_src = values if target_values is None else np.asarray(target_values, dtype=np.float64)
    if len(targets_src) != total:
        raise ShapeError("target_values must be aligned with values")
    if target_features is not None:
        targets_src = targets_src[:, :, :target_features]
    normalized = scaler.transform(values)
    step_abs = start_tod + np.arange(total)
    tod_all = step_abs % steps_per_day
    dow_all = (start_dow + step_abs // steps_per_day) % 7
    windows = []
    for t in range(total - l_in - l_out + 1):
        windows.append(
            STWindow(
                features=normalized[t : t + l_in],
                targets=targets_src[t + l_in : t + l_in + l_out],
                tod_index=tod_all[t : t + l_in].astype(np.int64),
                dow_index=dow_all[t : t + l_in].astype(np.int64),
            )
        )
    return tuple(windows)


def corrupt_missing(values: np.ndarray, drop_prob: float, seed: int) -> np.ndarray:
    """Zero out each (step, node) observation independently with ``drop_prob``."""
    if not 0.0 <= drop_prob <= 1.0:
        raise ValueError(f"drop_prob must be in [0,1], got {drop_prob}")
    values = np.asarray(values)
    rng = np.random.default_rng(seed)
    keep = rng.random(values.shape[:2]) >= drop_prob
    return values * keep[..., None]


@dataclass(frozen=True)
class SplitDatasets:
    """Train/val/test datasets sharing one graph and scaler."""

    train: STGraphDataset
    val: STGraphDataset
    test: STGraphDataset

    @property
    def spatial_graph(self) -> SpatialGraph:
        return self.train.spatial_graph

    @property
    def scaler(self) -> Scaler:
        return self.train.scaler


def _assemble(
    values,
    spatial_graph,
    task,
    l_in,
    l_out,
    steps_per_day,
    splitter,
    start_tod=0,
    start_dow=0,
    target_features=None,
) -> SplitDatasets:
    parts = splitter(values)
    scaler = Scaler.fit(parts[0])
    offsets = np.cumsum([0] + [len(p) for p in parts[:2]])
    datasets = []
    for part, offset in zip(parts, offsets):
        step_abs = start_tod + offset
        windows = window_dataset(
            part,
            l_in,
            l_out,
            scaler,
            steps_per_day=steps_per_day,
            start_tod=int(step_abs % steps_per_day),
            start_dow=int((start_dow + step_abs // steps_per_day) % 7),
            target_features=target_features,
        )
        datasets.append(
            STGraphDataset(windows=windows, spatial_graph=spatial_graph, scaler=scaler, task=task)
        )
    return SplitDatasets(*datasets)


def build_traffic_dataset(
    raw: RawTrafficData,
    l_in: int = 12,
    l_out: int = 12,
    ratios=(0.6, 0.2, 0.2),
    sigma: float | None = None,
    threshold: float = 0.1,
    start_tod: int = 0,
    start_dow: int = 0,
) -> SplitDatasets:
    """Sensor-graph dataset with a 6:2:2 chronological split."""
    graph = build_spatial_graph_gaussian(
        raw.distances, sigma=sigma, threshold=threshold, num_nodes=raw.values.shape[1]
    )
    return _assemble(
        raw.values,
        graph,
        "traffic",
        l_in,
        l_out,
        raw.steps_per_day,
        lambda v: split_series(v, ratios, min_split_length=l_in + l_out),
        start_tod=start_tod,
        start_dow=start_dow,
    )


def build_crime_dataset(
    raw: RawGridData,
    l_in: int = 30,
    l_out: int = 1,
    val_days: int = 30,
    start_dow: int = 0,
) -> SplitDatasets:
    """Grid dataset: 8-neighborhood graph, 7:1 split with validation carve-out."""
    _, rows, cols, _ = raw.values.shape
    graph = build_spatial_graph_grid(rows, cols)
    return _assemble(
        raw.as_node_series(),
        graph,
        "crime",
        l_in,
        l_out,
        1,
        lambda v: split_series_crime(v, val_days=val_days, min_split_length=l_in + l_out),
        start_dow=start_dow,
    )
