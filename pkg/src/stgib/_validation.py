"""Input validation helpers for the estimator front door."""

from __future__ import annotations

from .data import SplitDatasets
from .errors import ShapeError
from .types import STGraphDataset, STWindow, validate_window


def check_windows(windows, graph=None, l_in=None, f_in=None):
    """Validate a window sequence and return it as a tuple."""
    windows = tuple(windows)
    if not windows:
        raise ValueError("expected at least one window")
    for i, w in enumerate(windows):
        if not isinstance(w, STWindow):
            raise TypeError(f"windows[{i}] is {type(w).__name__}, expected STWindow")
        if graph is not None:
            validate_window(w, graph)
        if l_in is not None and w.num_input_steps != l_in:
            raise ShapeError(f"windows[{i}] has L={w.num_input_steps}, model expects {l_in}")
        if f_in is not None and w.features.shape[2] != f_in:
            raise ShapeError(f"windows[{i}] has F={w.features.shape[2]}, model expects {f_in}")
    return windows


def check_dataset(data) -> SplitDatasets:
    """Accept SplitDatasets directly, or a lone dataset (val/test reuse train)."""
    if isinstance(data, SplitDatasets):
        return data
    if isinstance(data, STGraphDataset):
        return SplitDatasets(train=data, val=data, test=data)
    raise TypeError(
        f"expected SplitDatasets or STGraphDataset, got {type(data).__name__}"
    )
