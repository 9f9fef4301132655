"""Spatial and temporal graph structures and their constructors.

Edges are directed arcs ``(v, u)`` meaning information flows from source
``v`` to target ``u``; ``adjacency[v, u] == 1`` iff ``(v, u)`` is an edge.
Symmetric relations are represented by storing both arcs. Self-loops are
never stored in the edge list: attention layers add the self contribution
implicitly, which keeps per-edge masks and selectors defined on real
edges only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError

Edge = tuple[int, int]


@dataclass(frozen=True)
class SpatialGraph:
    """Directed graph over spatial units (sensors or grid cells)."""

    num_nodes: int
    edges: tuple[Edge, ...]
    adjacency: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.num_nodes < 1:
            raise ValueError(f"num_nodes must be >= 1, got {self.num_nodes}")
        adj = np.asarray(self.adjacency)
        if adj.shape != (self.num_nodes, self.num_nodes):
            raise ShapeError(
                f"adjacency shape {adj.shape} does not match num_nodes={self.num_nodes}"
            )
        if not np.isin(adj, (0, 1)).all():
            raise ValueError("adjacency entries must be 0 or 1")
        if len(set(self.edges)) != len(self.edges):
            raise ValueError("edge list contains duplicates")
        expected = np.zeros_like(adj)
        for v, u in self.edges:
            if v == u:
                raise ValueError(f"self-loop ({v},{v}) is not storable as an edge")
            if not (0 <= v < self.num_nodes and 0 <= u < self.num_nodes):
                raise ValueError(f"edge ({v},{u}) out of range for N={self.num_nodes}")
            expected[v, u] = 1
        if not np.array_equal(adj, expected):
            raise ValueError("adjacency and edge list disagree")

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def __eq__(self, other):
        if not isinstance(other, SpatialGraph):
            return NotImplemented
        return (
            self.num_nodes == other.num_nodes
            and self.edges == other.edges
            and np.array_equal(self.adjacency, other.adjacency)
        )

    def __hash__(self):
        return hash((self.num_nodes, self.edges))

    def subgraph(self, kept_edges) -> "SpatialGraph":
        """Graph restricted to ``kept_edges`` (same node set)."""
        kept = [e for e in self.edges if e in set(kept_edges)]
        return from_edges(self.num_nodes, kept)


@dataclass(frozen=True)
class TemporalGraph:
    """Fully connected graph over the input time steps.

    The adjacency is all-ones at construction (every step may influence
    every other); the derived edge list excludes the diagonal.
    """

    num_steps: int
    adjacency: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.num_steps < 1:
            raise ValueError(f"num_steps must be >= 1, got {self.num_steps}")
        adj = np.asarray(self.adjacency)
        if adj.shape != (self.num_steps, self.num_steps):
            raise ShapeError(
                f"adjacency shape {adj.shape} does not match num_steps={self.num_steps}"
            )
        if not (adj == 1).all():
            raise ValueError("temporal adjacency must be all-ones at construction")

    @property
    def edges(self) -> tuple[Edge, ...]:
        T = self.num_steps
        return tuple((i, j) for i in range(T) for j in range(T) if i != j)

    @property
    def num_edges(self) -> int:
        return self.num_steps * (self.num_steps - 1)

    def __eq__(self, other):
        if not isinstance(other, TemporalGraph):
            return NotImplemented
        return self.num_steps == other.num_steps and np.array_equal(
            self.adjacency, other.adjacency
        )

    def __hash__(self):
        return hash(self.num_steps)


def from_edges(num_nodes: int, edges) -> SpatialGraph:
    """Build a :class:`SpatialGraph` from an edge list, deriving the adjacency."""
    edges = tuple((int(v), int(u)) for v, u in edges)
    adj = np.zeros((num_nodes, num_nodes), dtype=np.int8)
    for v, u in edges:
        adj[v, u] = 1
    return SpatialGraph(num_nodes=num_nodes, edges=edges, adjacency=adj)


def complete_graph(num_nodes: int) -> SpatialGraph:
    """All ordered pairs (v, u), v != u."""
    edges = [(v, u) for v in range(num_nodes) for u in range(num_nodes) if v != u]
    return from_edges(num_nodes, edges)


def build_spatial_graph_gaussian(
    distances, sigma: float | None = None, threshold: float = 0.1, num_nodes: int | None = None
) -> SpatialGraph:
    """Sensor graph from pairwise travel costs via a thresholded Gaussian kernel.

    An arc (v, u) is kept iff ``exp(-cost**2 / sigma**2) >= threshold``.
    ``sigma`` defaults to the standard deviation of all listed costs.
    Duplicate (v, u) entries keep the smallest cost; self-pairs are ignored.

    Raises
    ------
    ValueError
        If ``sigma <= 0`` or no edge survives the threshold.
    """
    costs: dict[Edge, float] = {}
    max_id = -1
    for v, u, cost in distances:
        v, u, cost = int(v), int(u), float(cost)
        if cost < 0:
            raise ValueError(f"negative cost {cost} for pair ({v},{u})")
        max_id = max(max_id, v, u)
        if v == u:
            continue
        key = (v, u)
        if key not in costs or cost < costs[key]:
            costs[key] = cost
    if num_nodes is None:
        num_nodes = max_id + 1
    if sigma is None:
        all_costs = np.array([float(c) for _, _, c in distances])
        sigma = float(all_costs.std())
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    if not 0 <= threshold <= 1:
        raise ValueError(f"threshold must be in [0,1], got {threshold}")
    edges = [
        (v, u)
        for (v, u), cost in sorted(costs.items())
        if np.exp(-(cost**2) / sigma**2) >= threshold
    ]
    if not edges:
        raise ValueError("no edges survive the Gaussian threshold")
    return from_edges(num_nodes, edges)


def build_spatial_graph_grid(rows: int, cols: int) -> SpatialGraph:
    """Grid-region graph: each cell linked to its 8-neighborhood, both directions."""
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")

    def cell(r, c):
        return r * cols + c

    edges = []
    for r in range(rows):
        for c in range(cols):
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    if dr == 0 and dc == 0:
                        continue
                    rr, cc = r + dr, c + dc
                    if 0 <= rr < rows and 0 <= cc < cols:
                        edges.append((cell(r, c), cell(rr, cc)))
    return from_edges(rows * cols, edges)


def build_temporal_graph(num_steps: int) -> TemporalGraph:
    """Fully connected temporal graph over ``num_steps`` input steps."""
    if num_steps < 1:
        raise ValueError(f"num_steps must be >= 1, got {num_steps}")
    return TemporalGraph(
        num_steps=num_steps, adjacency=np.ones((num_steps, num_steps), dtype=np.int8)
    )
