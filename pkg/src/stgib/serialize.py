"""Structured-text (nested key-value) serialization of the domain types.

Used for test fixtures and small on-disk artifacts. Floats survive the
round trip bit-exactly (shortest-repr encoding); arrays carry an explicit
dtype so integer/float distinctions are preserved.
"""

from __future__ import annotations

import json
from dataclasses import asdict

import numpy as np

from .graphs import SpatialGraph, TemporalGraph, from_edges
from .types import (
    AblationFlags,
    DistillResult,
    ModelConfig,
    Scaler,
    STGraphDataset,
    STWindow,
)


def _array_to_payload(a: np.ndarray) -> dict:
    a = np.asarray(a)
    return {
        "__array__": True,
        "dtype": str(a.dtype),
        "shape": list(a.shape),
        "data": a.ravel().tolist(),
    }


def _array_from_payload(p: dict) -> np.ndarray:
    return np.array(p["data"], dtype=p["dtype"]).reshape(p["shape"])


def _edge_map_to_payload(m: dict) -> list:
    return [[int(v), int(u), float(x)] for (v, u), x in sorted(m.items())]


def _edge_map_from_payload(rows: list) -> dict:
    return {(int(v), int(u)): float(x) for v, u, x in rows}


def to_payload(obj) -> dict:
    """Convert a domain object to a JSON-compatible nested dict."""
    if isinstance(obj, SpatialGraph):
        return {
            "__type__": "SpatialGraph",
            "num_nodes": obj.num_nodes,
            "edges": [list(e) for e in obj.edges],
        }
    if isinstance(obj, TemporalGraph):
        return {"__type__": "TemporalGraph", "num_steps": obj.num_steps}
    if isinstance(obj, Scaler):
        return {"__type__": "Scaler", "mean": obj.mean, "std": obj.std}
    if isinstance(obj, STWindow):
        return {
            "__type__": "STWindow",
            "features": _array_to_payload(obj.features),
            "targets": _array_to_payload(obj.targets),
            "tod_index": _array_to_payload(obj.tod_index),
            "dow_index": _array_to_payload(obj.dow_index),
        }
    if isinstance(obj, STGraphDataset):
        return {
            "__type__": "STGraphDataset",
            "windows": [to_payload(w) for w in obj.windows],
            "spatial_graph": to_payload(obj.spatial_graph),
            "scaler": to_payload(obj.scaler),
            "task": obj.task,
        }
    if isinstance(obj, ModelConfig):
        payload = asdict(obj)
        payload["__type__"] = "ModelConfig"
        return payload
    if isinstance(obj, DistillResult):
        return {
            "__type__": "DistillResult",
            "spatial_probs": _edge_map_to_payload(obj.spatial_probs),
            "temporal_probs": _edge_map_to_payload(obj.temporal_probs),
            "spatial_selector": _edge_map_to_payload(obj.spatial_selector),
            "temporal_selector": _edge_map_to_payload(obj.temporal_selector),
            "kl_spatial": obj.kl_spatial,
            "kl_temporal": obj.kl_temporal,
        }
    raise TypeError(f"cannot serialize object of type {type(obj).__name__}")


def from_payload(payload: dict):
    """Inverse of :func:`to_payload`."""
    kind = payload.get("__type__")
    if kind == "SpatialGraph":
        return from_edges(payload["num_nodes"], [tuple(e) for e in payload["edges"]])
    if kind == "TemporalGraph":
        T = payload["num_steps"]
        return TemporalGraph(num_steps=T, adjacency=np.ones((T, T), dtype=np.int8))
    if kind == "Scaler":
        return Scaler(mean=payload["mean"], std=payload["std"])
    if kind == "STWindow":
        return STWindow(
            features=_array_from_payload(payload["features"]),
            targets=_array_from_payload(payload["targets"]),
            tod_index=_array_from_payload(payload["tod_index"]),
            dow_index=_array_from_payload(payload["dow_index"]),
        )
    if kind == "STGraphDataset":
        return STGraphDataset(
            windows=tuple(from_payload(w) for w in payload["windows"]),
            spatial_graph=from_payload(payload["spatial_graph"]),
            scaler=from_payload(payload["scaler"]),
            task=payload["task"],
        )
    if kind == "ModelConfig":
        fields = {k: v for k, v in payload.items() if k != "__type__"}
        fields["ablation"] = AblationFlags(**fields["ablation"])
        return ModelConfig(**fields)
    if kind == "DistillResult":
        return DistillResult(
            spatial_probs=_edge_map_from_payload(payload["spatial_probs"]),
            temporal_probs=_edge_map_from_payload(payload["temporal_probs"]),
            spatial_selector=_edge_map_from_payload(payload["spatial_selector"]),
            temporal_selector=_edge_map_from_payload(payload["temporal_selector"]),
            kl_spatial=payload["kl_spatial"],
            kl_temporal=payload["kl_temporal"],
        )
    raise TypeError(f"unknown payload type {kind!r}")


def dumps(obj, indent: int | None = None) -> str:
    return json.dumps(to_payload(obj), indent=indent)


def loads(text: str):
    return from_payload(json.loads(text))
