"""Unified spatio-temporal graph attention encoder.

The input window (L, N, F) is embedded, collapsed onto the spatial node
axis, message-passed over the spatial graph, expanded back, collapsed onto
the time axis, message-passed over the fully connected temporal graph, and
expanded once more. The two per-axis message-passing stages share one
multi-head attention layer implementation; per-edge soft weights can be
injected into either stage to realize a distilled subgraph.

Dimension names throughout: B batch, L input steps, N nodes, F raw
features, d shared embedding width, ds/dt spatial/temporal widths,
M generic node count of the graph being attended over, E edge count.
"""

from __future__ import annotations

import math

import torch
from torch import nn

from .errors import ShapeError
from .graphs import SpatialGraph, TemporalGraph

LEAKY_SLOPE = 0.2  # negative slope of the attention-logit activation
NEG_INF = float("-inf")


class GraphSupport:
    """Precomputed index and mask tensors for attention over one graph.

    ``attend_mask[j, j']`` is True iff node ``j`` may attend to ``j'``:
    every node attends to itself, plus to the sources of its incoming
    arcs ``(j', j)``.
    """

    def __init__(self, num_nodes: int, edges):
        self.num_nodes = num_nodes
        self.edges = tuple(edges)
        self.edge_index = {e: i for i, e in enumerate(self.edges)}
        src = [v for v, _ in self.edges]
        tgt = [u for _, u in self.edges]
        self.src = torch.tensor(src, dtype=torch.long)
        self.tgt = torch.tensor(tgt, dtype=torch.long)
        mask = torch.zeros(num_nodes, num_nodes, dtype=torch.bool)
        mask[self.tgt, self.src] = True
        mask |= torch.eye(num_nodes, dtype=torch.bool)
        self.attend_mask = mask

    @classmethod
    def from_spatial(cls, graph: SpatialGraph) -> "GraphSupport":
        return cls(graph.num_nodes, graph.edges)

    @classmethod
    def from_temporal(cls, graph: TemporalGraph) -> "GraphSupport":
        return cls(graph.num_steps, graph.edges)

    def masked(self, kept_edges) -> torch.Tensor:
        """Attend mask restricted to ``kept_edges`` (self-loops retained)."""
        kept = set(kept_edges)
        unknown = kept - set(self.edges)
        if unknown:
            raise ValueError(f"edges not in graph: {sorted(unknown)[:5]}")
        mask = torch.eye(self.num_nodes, dtype=torch.bool)
        for v, u in kept:
            mask[u, v] = True
        return mask

    def weights_tensor(self, edge_weights, dtype=torch.float64) -> torch.Tensor:
        """Normalize an edge-weight mapping or tensor to shape (E,) or (B, E)."""
        if isinstance(edge_weights, dict):
            unknown = set(edge_weights) - set(self.edges)
            if unknown:
                raise ValueError(f"edge weights reference unknown edges: {sorted(unknown)[:5]}")
            w = torch.ones(len(self.edges), dtype=dtype)
            for e, val in edge_weights.items():
                w[self.edge_index[e]] = float(val)
            return w
        w = torch.as_tensor(edge_weights, dtype=dtype)
        if w.shape[-1] != len(self.edges):
            raise ShapeError(
                f"edge weights last axis {w.shape[-1]} != num edges {len(self.edges)}"
            )
        return w


def _xavier_uniform(tensor: torch.Tensor, fan_in: int, fan_out: int, generator):
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    with torch.no_grad():
        tensor.uniform_(-bound, bound, generator=generator)


class MultiHeadGraphAttention(nn.Module):
    """One K-head graph attention layer; head outputs are summed at full width.

    Attention logits use the concatenated pair form
    ``LeakyReLU(a_k . [W_k x_j || W_k x_j'])`` and are normalized over each
    node's in-neighborhood plus itself. Optional per-edge weights multiply
    the post-softmax coefficients of non-self edges (self-loops keep
    weight 1); rows are intentionally not renormalized afterwards, so a
    fully down-weighted neighborhood degrades toward the self term.
    """

    def __init__(self, dim: int, heads: int, generator=None, dtype=torch.float64):
        super().__init__()
        self.dim = dim
        self.heads = heads
        self.weight = nn.Parameter(torch.empty(heads, dim, dim, dtype=dtype))
        self.attn = nn.Parameter(torch.empty(heads, 2 * dim, dtype=dtype))
        for k in range(heads):
            _xavier_uniform(self.weight.data[k], dim, dim, generator)
        _xavier_uniform(self.attn.data, 2 * dim, 1, generator)

    def forward(
        self,
        x: torch.Tensor,
        support: GraphSupport,
        edge_weights=None,
        attend_mask: torch.Tensor | None = None,
    ) -> torch.Tensor:
        if x.dim() == 2:
            return self.forward(x.unsqueeze(0), support, edge_weights, attend_mask).squeeze(0)
        if x.shape[-1] != self.dim or x.shape[-2] != support.num_nodes:
            raise ShapeError(
                f"input shape {tuple(x.shape)} does not match (., {support.num_nodes}, {self.dim})"
            )
        batch = x.shape[0]
        # z[b,k,m,:] = W_k x_m
        z = x.unsqueeze(1) @ self.weight.transpose(1, 2)
        a_self, a_other = self.attn[:, : self.dim], self.attn[:, self.dim :]
        s_self = (z @ a_self.unsqueeze(-1)).squeeze(-1)  # (B, K, M)
        s_other = (z @ a_other.unsqueeze(-1)).squeeze(-1)
        logits = nn.functional.leaky_relu(
            s_self.unsqueeze(3) + s_other.unsqueeze(2), negative_slope=LEAKY_SLOPE
        )
        mask = support.attend_mask if attend_mask is None else attend_mask
        mask = mask.unsqueeze(-3)  # broadcast over heads: (..., 1, M, M)
        logits = logits.masked_fill(~mask, NEG_INF)
        # max-subtracted softmax over each row's allowed entries
        logits = logits - logits.amax(dim=-1, keepdim=True)
        expl = torch.exp(logits) * mask
        alpha = expl / expl.sum(dim=-1, keepdim=True)
        if edge_weights is not None:
            w = support.weights_tensor(edge_weights, dtype=x.dtype)
            if ((w <= 0) | (w > 1)).any():
                raise ValueError("edge weights must lie in (0, 1]")
            if w.dim() == 1:
                w = w.unsqueeze(0).expand(batch, -1)
            dense = torch.ones(batch, support.num_nodes, support.num_nodes, dtype=x.dtype)
            dense = dense.index_put((
                torch.arange(batch).unsqueeze(1),
                support.tgt.unsqueeze(0),
                support.src.unsqueeze(0),
            ), w)
            alpha = alpha * dense.unsqueeze(1)
        return (alpha @ z).sum(dim=1)


class STEncoder(nn.Module):
    """Embedding, per-axis projections, attention stacks, and expansions."""

    def __init__(
        self,
        l_in: int,
        n_nodes: int,
        f_in: int,
        d: int,
        d_s: int,
        d_t: int,
        heads: int,
        gat_layers: int,
        generator=None,
        dtype=torch.float64,
    ):
        super().__init__()
        self.l_in, self.n_nodes, self.f_in = l_in, n_nodes, f_in
        self.d, self.d_s, self.d_t = d, d_s, d_t

        def init(shape, fan_in, fan_out):
            t = torch.empty(*shape, dtype=dtype)
            _xavier_uniform(t, fan_in, fan_out, generator)
            return nn.Parameter(t)

        def zeros(shape):
            return nn.Parameter(torch.zeros(*shape, dtype=dtype))

        self.embed_w = init((f_in, d), f_in, d)
        self.embed_b = zeros((d,))
        self.space_proj_w = init((l_in, d, d_s), l_in * d, d_s)
        self.space_proj_b = zeros((d_s,))
        self.space_expand_w = init((l_in, d, d_s), d_s, d)
        self.space_expand_b = zeros((l_in, d))
        self.time_proj_w = init((n_nodes, d, d_t), n_nodes * d, d_t)
        self.time_proj_b = zeros((d_t,))
        self.time_expand_w = init((n_nodes, d, d_t), d_t, d)
        self.time_expand_b = zeros((n_nodes, d))
        self.spatial_gats = nn.ModuleList(
            MultiHeadGraphAttention(d_s, heads, generator, dtype) for _ in range(gat_layers)
        )
        self.temporal_gats = nn.ModuleList(
            MultiHeadGraphAttention(d_t, heads, generator, dtype) for _ in range(gat_layers)
        )

    # Each stage accepts an optional leading batch axis.

    def embed_features(self, x: torch.Tensor) -> torch.Tensor:
        """(..., L, N, F) -> (..., L, N, d)."""
        if x.shape[-1] != self.f_in:
            raise ShapeError(f"feature axis {x.shape[-1]} != {self.f_in}")
        return x @ self.embed_w + self.embed_b

    def project_spatial(self, x0: torch.Tensor) -> torch.Tensor:
        """(..., L, N, d) -> (..., N, ds): sum over steps of per-step maps.

        The step sum of per-step maps is one flat matmul over the combined
        (step, channel) axis.
        """
        if x0.shape[-3] != self.l_in:
            raise ShapeError(f"step axis {x0.shape[-3]} != {self.l_in}")
        flat = x0.transpose(-3, -2).reshape(*x0.shape[:-3], self.n_nodes, self.l_in * self.d)
        return flat @ self.space_proj_w.reshape(self.l_in * self.d, self.d_s) + self.space_proj_b

    def expand_spatial(self, hs: torch.Tensor) -> torch.Tensor:
        """(..., N, ds) -> (..., L, N, d): per-step linear maps of each node."""
        flat = hs @ self.space_expand_w.reshape(self.l_in * self.d, self.d_s).T
        out = flat.reshape(*hs.shape[:-2], self.n_nodes, self.l_in, self.d).transpose(-3, -2)
        return out + self.space_expand_b.unsqueeze(-2)

    def project_temporal(self, hps: torch.Tensor) -> torch.Tensor:
        """(..., L, N, d) -> (..., L, dt): sum over nodes of per-node maps."""
        if hps.shape[-2] != self.n_nodes:
            raise ShapeError(f"node axis {hps.shape[-2]} != {self.n_nodes}")
        flat = hps.reshape(*hps.shape[:-2], self.n_nodes * self.d)
        return flat @ self.time_proj_w.reshape(self.n_nodes * self.d, self.d_t) + self.time_proj_b

    def expand_temporal(self, ht: torch.Tensor) -> torch.Tensor:
        """(..., L, dt) -> (..., L, N, d): per-node linear maps of each step."""
        flat = ht @ self.time_expand_w.reshape(self.n_nodes * self.d, self.d_t).T
        return flat.reshape(*ht.shape[:-1], self.n_nodes, self.d) + self.time_expand_b

    def _run_stack(self, gats, h, support, edge_weights, attend_mask):
        for i, gat in enumerate(gats):
            if i > 0:
                h = nn.functional.elu(h)
            h = gat(h, support, edge_weights, attend_mask)
        return h

    def encode(
        self,
        x: torch.Tensor,
        spatial_support: GraphSupport,
        temporal_support: GraphSupport,
        spatial_weights=None,
        temporal_weights=None,
        spatial_mask: torch.Tensor | None = None,
        temporal_mask: torch.Tensor | None = None,
    ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Full pass; returns (H, Hs, Ht).

        ``H`` is (..., L, N, d); ``Hs`` (..., N, ds) and ``Ht`` (..., L, dt)
        are the post-attention node embeddings of each stage, which the
        edge scorers consume. ``*_weights`` soft-mask the corresponding
        attention stage; ``*_mask`` overrides the attend mask entirely
        (hard subgraphs).
        """
        squeeze = x.dim() == 3
        if squeeze:
            x = x.unsqueeze(0)
        x0 = self.embed_features(x)
        xs = self.project_spatial(x0)
        hs = self._run_stack(self.spatial_gats, xs, spatial_support, spatial_weights, spatial_mask)
        hps = self.expand_spatial(hs)
        xt = self.project_temporal(hps)
        ht = self._run_stack(
            self.temporal_gats, xt, temporal_support, temporal_weights, temporal_mask
        )
        h = self.expand_temporal(ht)
        if squeeze:
            return h.squeeze(0), hs.squeeze(0), ht.squeeze(0)
        return h, hs, ht
