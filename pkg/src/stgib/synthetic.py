"""Planted-structure synthetic data for explanation-recovery experiments.

Each node follows a noisy recurrence driven by its planted in-neighbors
plus a node-scaled sinusoid:

    x[t+1, v] = 0.5 * mean({x[t, u] : (u, v) planted}) + 0.5 * sin(2*pi*t / period) * s[v] + eps

with ``eps ~ Normal(0, noise_std^2)`` and ``s[v]`` a fixed per-node scale.
The mean over an empty in-neighbor set is 0. Because the planted arcs are
the only cross-node pathway, they are the ground-truth explanation for the
forecasting task built on top.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import SplitDatasets, _assemble, split_series
from .graphs import Edge, complete_graph, from_edges


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of one synthetic series.

    ``scale_range`` bounds the per-node sinusoid scales s[v]; a small range
    makes the cross-node recurrence the dominant predictable signal, which
    sharpens structure-recovery experiments.
    """

    num_nodes: int
    total_steps: int
    planted_edges: tuple[Edge, ...]
    noise_std: float = 0.1
    seed: int = 0
    period: int = 288
    scale_range: tuple[float, float] = (0.5, 1.5)

    def __post_init__(self):
        for v, u in self.planted_edges:
            if v == u:
                raise ValueError(f"planted self-loop ({v},{v}) is not allowed")
            if not (0 <= v < self.num_nodes and 0 <= u < self.num_nodes):
                raise ValueError(f"planted edge ({v},{u}) out of range")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if not self.planted_edges:
            raise ValueError("planted_edges must be non-empty")
        if not 0 <= self.scale_range[0] <= self.scale_range[1]:
            raise ValueError(f"invalid scale_range {self.scale_range}")


def random_planted_edges(num_nodes: int, num_edges: int, seed: int) -> tuple[Edge, ...]:
    """Draw ``num_edges`` distinct directed pairs uniformly at random."""
    pairs = [(v, u) for v in range(num_nodes) for u in range(num_nodes) if v != u]
    if num_edges > len(pairs):
        raise ValueError(f"cannot plant {num_edges} edges among {len(pairs)} ordered pairs")
    rng = np.random.default_rng(seed)
    picked = rng.choice(len(pairs), size=num_edges, replace=False)
    return tuple(pairs[i] for i in sorted(picked))


def generate_synthetic(
    spec: SyntheticSpec, initial_values: np.ndarray | None = None
) -> tuple[np.ndarray, tuple[Edge, ...]]:
    """Simulate the recurrence; returns values (T, N, 1) and the planted arcs.

    Deterministic under ``spec.seed``. ``initial_values`` overrides x[0]
    (useful for impulse-response probes); by default x[0] is pure noise.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.num_nodes
    scales = rng.uniform(spec.scale_range[0], spec.scale_range[1], size=n)
    noise = rng.normal(0.0, spec.noise_std, size=(spec.total_steps, n)) if spec.noise_std > 0 else np.zeros((spec.total_steps, n))
    in_neighbors = [[] for _ in range(n)]
    for v, u in spec.planted_edges:
        in_neighbors[u].append(v)
    x = np.zeros((spec.total_steps, n))
    x[0] = noise[0] if initial_values is None else np.asarray(initial_values, dtype=np.float64)
    for t in range(spec.total_steps - 1):
        drive = np.array(
            [x[t, nbrs].mean() if nbrs else 0.0 for nbrs in in_neighbors]
        )
        x[t + 1] = 0.5 * drive + 0.5 * np.sin(2 * np.pi * t / spec.period) * scales + noise[t + 1]
    return x[:, :, None], spec.planted_edges


def write_ground_truth(path, spec: SyntheticSpec):
    """JSON sidecar recording the planted arcs next to a generated array."""
    payload = {
        "num_nodes": spec.num_nodes,
        "total_steps": spec.total_steps,
        "noise_std": spec.noise_std,
        "seed": spec.seed,
        "period": spec.period,
        "scale_range": list(spec.scale_range),
        "planted_edges": [list(e) for e in spec.planted_edges],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def read_ground_truth(path) -> SyntheticSpec:
    payload = json.loads(Path(path).read_text())
    return SyntheticSpec(
        num_nodes=payload["num_nodes"],
        total_steps=payload["total_steps"],
        planted_edges=tuple(tuple(e) for e in payload["planted_edges"]),
        noise_std=payload["noise_std"],
        seed=payload["seed"],
        period=payload["period"],
        scale_range=tuple(payload.get("scale_range", (0.5, 1.5))),
    )


def candidate_edges(
    planted: tuple[Edge, ...], num_nodes: int, num_distractors: int, seed: int
) -> tuple[Edge, ...]:
    """Recovery search space: the planted arcs plus random distractor arcs.

    A complete candidate graph gives every node the same attention
    neighborhood, which collapses node identity under sum-form attention
    logits; mixing in a limited number of distractors keeps neighborhoods
    distinct while still hiding the planted structure.
    """
    pool = [
        (v, u)
        for v in range(num_nodes)
        for u in range(num_nodes)
        if v != u and (v, u) not in set(planted)
    ]
    if num_distractors > len(pool):
        raise ValueError(f"only {len(pool)} non-planted arcs available")
    rng = np.random.default_rng(seed)
    picked = rng.choice(len(pool), size=num_distractors, replace=False)
    return tuple(sorted(tuple(planted) + tuple(pool[i] for i in picked)))


def build_synthetic_dataset(
    values: np.ndarray,
    l_in: int = 12,
    l_out: int = 12,
    ratios=(0.6, 0.2, 0.2),
    steps_per_day: int = 288,
    candidate: tuple[Edge, ...] | None = None,
) -> SplitDatasets:
    """Windowed dataset over a synthetic series.

    ``candidate`` is the edge set offered to the model (usually
    :func:`candidate_edges`); the default is the complete directed graph.
    Ground truth must never leak into the construction beyond membership
    in the candidate set.
    """
    n = values.shape[1]
    graph = complete_graph(n) if candidate is None else from_edges(n, candidate)
    return _assemble(
        values,
        graph,
        "synthetic",
        l_in,
        l_out,
        steps_per_day,
        lambda v: split_series(v, ratios, min_split_length=l_in + l_out),
    )
