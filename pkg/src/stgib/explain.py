"""Explanation extraction and the adapted fidelity / sparsity metrics.

An explanation is a kept-edge subset of one graph. Fidelity contrasts the
model's forecast on the full graph with its forecast on the explanation's
complement: influential explanations leave a large gap. Sparsity is the
mean excluded fraction. Both use hard subgraphs (edges present or absent)
because the complement of a soft mask is not well defined.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import torch

from .graphs import Edge
from .model import STGIBModel, stack_windows


@dataclass(frozen=True)
class Explanation:
    """Kept-edge subset of one spatial or temporal graph."""

    graph_kind: str  # "spatial" or "temporal"
    kept_edges: frozenset
    all_edges: frozenset
    edge_probs: dict

    def __post_init__(self):
        if self.graph_kind not in ("spatial", "temporal"):
            raise ValueError(f"graph_kind must be spatial|temporal, got {self.graph_kind!r}")
        if not self.kept_edges <= self.all_edges:
            raise ValueError("kept_edges must be a subset of all_edges")

    @property
    def complement(self) -> frozenset:
        return self.all_edges - self.kept_edges


def extract_explanation(
    edge_probs: dict[Edge, float],
    graph_kind: str,
    threshold: float | None = None,
    top_fraction: float | None = None,
) -> Explanation:
    """Keep edges by probability threshold, or the top fraction by rank.

    Exactly one of ``threshold`` / ``top_fraction`` must be given. Rank
    ties break lexicographically on (v, u).
    """
    if (threshold is None) == (top_fraction is None):
        raise ValueError("give exactly one of threshold or top_fraction")
    edges = frozenset(edge_probs)
    if threshold is not None:
        kept = frozenset(e for e, p in edge_probs.items() if p >= threshold)
    else:
        if not 0.0 < top_fraction <= 1.0:
            raise ValueError(f"top_fraction must be in (0,1], got {top_fraction}")
        count = math.ceil(top_fraction * len(edges))
        ranked = sorted(edge_probs.items(), key=lambda item: (-item[1], item[0]))
        kept = frozenset(e for e, _ in ranked[:count])
    return Explanation(graph_kind, kept, edges, dict(edge_probs))


def sparsity_plus(explanations, count: str = "edges") -> float:
    """Mean excluded fraction over explanations.

    ``count="edges"`` measures edge sets; ``count="nodes"`` instead counts
    nodes incident to the kept/full edge sets.
    """
    if count not in ("edges", "nodes"):
        raise ValueError(f"count must be 'edges' or 'nodes', got {count!r}")
    if not explanations:
        raise ValueError("need at least one explanation")
    terms = []
    for ex in explanations:
        if count == "edges":
            m, total = len(ex.kept_edges), len(ex.all_edges)
        else:
            m = len({v for e in ex.kept_edges for v in e})
            total = len({v for e in ex.all_edges for v in e})
        terms.append(0.0 if total == 0 else 1.0 - m / total)
    return float(np.mean(terms))


def _complement_masks(model: STGIBModel, explanations):
    """Per-window hard attend masks realizing each explanation's complement."""
    kind = explanations[0].graph_kind
    support = model.spatial_support if kind == "spatial" else model.temporal_support
    masks = []
    for ex in explanations:
        if ex.graph_kind != kind:
            raise ValueError("explanations must all have the same graph_kind")
        masks.append(support.masked(ex.complement))
    return kind, torch.stack(masks)


def fidelity_plus(model: STGIBModel, windows, explanations, batch_size: int = 64) -> float:
    """Mean absolute forecast change when only the complement edges remain.

    One explanation per window, all of one graph kind. Both passes run the
    raw forecaster on hard subgraphs (no distillation, no noise); the
    non-explained graph kind stays complete. Self-loops are always kept.
    """
    if len(windows) != len(explanations):
        raise ValueError(f"{len(windows)} windows but {len(explanations)} explanations")
    kind, masks = _complement_masks(model, explanations)
    diffs = []
    with torch.no_grad():
        for start in range(0, len(windows), batch_size):
            feats, _, tod, dow = stack_windows(windows[start : start + batch_size], model.dtype)
            sub = masks[start : start + batch_size]
            full = model(feats, tod, dow, mode="eval", distill=False).prediction
            masked = model(
                feats,
                tod,
                dow,
                mode="eval",
                distill=False,
                spatial_mask=sub if kind == "spatial" else None,
                temporal_mask=sub if kind == "temporal" else None,
            ).prediction
            diffs.append((full - masked).abs().mean(dim=(1, 2, 3)).numpy())
    return float(np.concatenate(diffs).mean())


def random_explanation(all_edges, size: int, seed: int, graph_kind: str = "spatial") -> Explanation:
    """Uniform same-size baseline explanation."""
    edges = sorted(all_edges)
    if size > len(edges):
        raise ValueError(f"size {size} exceeds number of edges {len(edges)}")
    rng = np.random.default_rng(seed)
    picked = rng.choice(len(edges), size=size, replace=False)
    kept = frozenset(edges[i] for i in picked)
    return Explanation(graph_kind, kept, frozenset(edges), {})


def edge_recovery_auc(edge_probs: dict[Edge, float], planted_edges) -> float:
    """ROC AUC of the probabilities against a planted ground-truth edge set.

    Computed by the rank-sum formula with midrank tie handling; invariant
    under strictly monotone transforms of the probabilities. Degenerate
    label sets (all positive or all negative) return 0.5 with a warning.
    """
    planted = set(planted_edges)
    unknown = planted - set(edge_probs)
    if unknown:
        raise ValueError(f"planted edges missing from probed set: {sorted(unknown)[:5]}")
    labels = np.array([e in planted for e in edge_probs])
    scores = np.array([edge_probs[e] for e in edge_probs])
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        warnings.warn("degenerate labels: every edge has the same class; AUC undefined")
        return 0.5
    from scipy.stats import rankdata

    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))
