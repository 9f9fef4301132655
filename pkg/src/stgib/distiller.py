"""Edge scoring, relaxed keep-probability sampling, and the Bernoulli prior penalty.

Each directed edge (v, u) of a graph gets a scalar logit from an MLP over
the concatenated endpoint embeddings. Noise injected before a
temperature-scaled sigmoid turns the logit into a differentiable keep
probability; the resulting soft selector multiplies the graph's attention
coefficients. The penalty is the KL divergence of the per-edge Bernoulli(p)
against a shared Bernoulli(r) prior, summed over edges (additive constant
fixed to 0, so the penalty is non-negative and vanishes iff p == r).
"""

from __future__ import annotations

import math

import numpy as np
import torch
from torch import nn

from .encoder import GraphSupport, _xavier_uniform

PROB_EPS = 1e-7


class EdgeScorer(nn.Module):
    """Two-layer MLP mapping concatenated endpoint embeddings to one logit."""

    def __init__(self, dim: int, generator=None, dtype=torch.float64):
        super().__init__()
        self.dim = dim
        width = 2 * dim
        self.w1 = nn.Parameter(torch.empty(width, width, dtype=dtype))
        self.b1 = nn.Parameter(torch.zeros(width, dtype=dtype))
        self.w2 = nn.Parameter(torch.empty(width, dtype=dtype))
        self.b2 = nn.Parameter(torch.zeros((), dtype=dtype))
        _xavier_uniform(self.w1.data, width, width, generator)
        _xavier_uniform(self.w2.data.unsqueeze(0), width, 1, generator)

    def forward(self, node_embeds: torch.Tensor, support: GraphSupport) -> torch.Tensor:
        """(..., M, dim) node embeddings -> (..., E) per-edge logits."""
        h_src = node_embeds.index_select(-2, support.src)
        h_tgt = node_embeds.index_select(-2, support.tgt)
        pair = torch.cat([h_src, h_tgt], dim=-1)
        hidden = nn.functional.elu(pair @ self.w1.T + self.b1)
        return hidden @ self.w2 + self.b2


def score_edges(scorer: EdgeScorer, node_embeds: torch.Tensor, support: GraphSupport) -> dict:
    """Map each edge (v, u) to its logit; deterministic in the inputs."""
    with torch.no_grad():
        logits = scorer(torch.as_tensor(node_embeds), support)
    return {edge: float(logits[i]) for i, edge in enumerate(support.edges)}


def gumbel_noise(shape, generator=None, dtype=torch.float64) -> torch.Tensor:
    u = torch.empty(shape, dtype=dtype).uniform_(0.0, 1.0, generator=generator)
    # clamp away from {0,1} so the double log stays finite
    u = u.clamp(PROB_EPS, 1.0 - PROB_EPS)
    return -torch.log(-torch.log(u))


def sample_keep_probs(
    logits: torch.Tensor,
    tau: float,
    mode: str = "train",
    generator=None,
    noise_kind: str = "gumbel",
) -> torch.Tensor:
    """Relaxed per-edge keep probabilities.

    In ``train`` mode a fresh noise draw per edge per call perturbs the
    logit before the temperature-scaled sigmoid; ``eval`` mode omits the
    noise and is fully deterministic. ``noise_kind`` selects a single
    Gumbel(0,1) draw (default) or the logistic difference of two.
    """
    if tau <= 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    logits = torch.as_tensor(logits)
    if mode == "eval":
        return torch.sigmoid(logits / tau)
    if noise_kind == "gumbel":
        g = gumbel_noise(logits.shape, generator, logits.dtype)
    elif noise_kind == "logistic":
        g = gumbel_noise(logits.shape, generator, logits.dtype) - gumbel_noise(
            logits.shape, generator, logits.dtype
        )
    else:
        raise ValueError(f"unknown noise_kind {noise_kind!r}")
    return torch.sigmoid((logits + g) / tau)


def select_subgraph(probs, graph, mode: str = "soft", generator=None):
    """Per-edge selector and the soft-masked adjacency it induces.

    ``soft`` mode passes the keep probabilities straight through as the
    selector (the relaxed draw already happened inside the probabilities);
    ``hard`` mode is a diagnostic that draws Bernoulli(p) indicators.
    """
    if mode not in ("soft", "hard"):
        raise ValueError(f"mode must be 'soft' or 'hard', got {mode!r}")
    edges = list(probs.keys()) if isinstance(probs, dict) else None
    values = (
        torch.tensor([probs[e] for e in edges], dtype=torch.float64)
        if edges is not None
        else torch.as_tensor(probs)
    )
    if mode == "hard":
        u = torch.empty(values.shape, dtype=values.dtype).uniform_(0, 1, generator=generator)
        selector_values = (u < values).to(values.dtype)
    else:
        selector_values = values
    if edges is None:
        return selector_values, None
    selector = {e: float(v) for e, v in zip(edges, selector_values)}
    n = max(max(e) for e in edges) + 1 if graph is None else graph.num_nodes
    adjacency = np.zeros((n, n))
    for (v, u), val in selector.items():
        adjacency[v, u] = val
    return selector, adjacency


def bernoulli_kl(probs, r: float):
    """Sum over edges of KL(Bernoulli(p) || Bernoulli(r)).

    Accepts a tensor (summed over the last axis, keeping leading axes), an
    array, or an edge->p mapping. Probabilities are clamped to
    [1e-7, 1 - 1e-7] before the logs.
    """
    if not 0.0 < r < 1.0:
        raise ValueError(f"prior keep-probability r must be in (0,1), got {r}")
    wants_float = isinstance(probs, dict) or not isinstance(probs, torch.Tensor)
    if isinstance(probs, dict):
        probs = torch.tensor(list(probs.values()), dtype=torch.float64)
    p = torch.as_tensor(probs, dtype=torch.float64 if wants_float else None)
    p = p.clamp(PROB_EPS, 1.0 - PROB_EPS)
    kl = p * torch.log(p / r) + (1.0 - p) * torch.log((1.0 - p) / (1.0 - r))
    total = kl.sum(dim=-1) if kl.dim() > 0 else kl
    if wants_float and total.dim() == 0:
        return float(total)
    return total


def bernoulli_log_prob(selector, probs) -> float:
    """Joint log-probability of a hard selector under independent Bernoullis."""
    total = 0.0
    for edge, a in (selector.items() if isinstance(selector, dict) else enumerate(selector)):
        p = probs[edge]
        p = min(max(p, PROB_EPS), 1.0 - PROB_EPS)
        total += math.log(p) if a >= 0.5 else math.log(1.0 - p)
    return total
