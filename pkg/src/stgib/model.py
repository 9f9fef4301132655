"""The full forecaster: encoder, edge distillation, and position-aware head.

A training forward runs the encoder twice with one parameter set: a first
pass over the full graphs produces the node embeddings that score every
edge; the sampled soft selectors then weight the second pass, whose output
feeds the prediction head. Evaluation uses the deterministic (noise-free)
keep probabilities. Ablation flags swap the distillation path for all-ones
selectors or random edge dropping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from . import checkpoint as ckpt
from .distiller import PROB_EPS, EdgeScorer, bernoulli_kl, sample_keep_probs
from .encoder import GraphSupport, STEncoder
from .errors import CheckpointError
from .graphs import SpatialGraph, build_temporal_graph
from .predictor import PositionalTables, PredictionHead
from .serialize import from_payload, to_payload
from .types import DistillResult, ModelConfig, STWindow


@dataclass
class ForwardResult:
    """Prediction plus the distillation quantities of one forward pass."""

    prediction: torch.Tensor
    spatial_probs: torch.Tensor | None
    temporal_probs: torch.Tensor | None
    kl_spatial: torch.Tensor
    kl_temporal: torch.Tensor


def stack_windows(windows, dtype=torch.float64):
    """Stack a window sequence into (features, targets, tod, dow) tensors."""
    feats = torch.tensor(np.stack([w.features for w in windows]), dtype=dtype)
    tgts = torch.tensor(np.stack([w.targets for w in windows]), dtype=dtype)
    tod = torch.tensor(np.stack([w.tod_index for w in windows]), dtype=torch.long)
    dow = torch.tensor(np.stack([w.dow_index for w in windows]), dtype=torch.long)
    return feats, tgts, tod, dow


class STGIBModel(nn.Module):
    """Forecaster bound to one spatial graph and one window geometry."""

    def __init__(
        self,
        config: ModelConfig,
        spatial_graph: SpatialGraph,
        l_in: int,
        l_out: int,
        f_in: int,
        f_out: int,
        seed: int = 0,
        dtype=torch.float64,
    ):
        super().__init__()
        self.config = config
        self.spatial_graph = spatial_graph
        self.l_in, self.l_out, self.f_in, self.f_out = l_in, l_out, f_in, f_out
        self.dtype = dtype
        self.spatial_support = GraphSupport.from_spatial(spatial_graph)
        self.temporal_support = GraphSupport.from_temporal(build_temporal_graph(l_in))
        gen = torch.Generator().manual_seed(seed)
        self.encoder = STEncoder(
            l_in,
            spatial_graph.num_nodes,
            f_in,
            config.d,
            config.d_s,
            config.d_t,
            config.heads,
            config.gat_layers,
            generator=gen,
            dtype=dtype,
        )
        self.spatial_scorer = EdgeScorer(config.d_s, generator=gen, dtype=dtype)
        self.temporal_scorer = EdgeScorer(config.d_t, generator=gen, dtype=dtype)
        self.tables = PositionalTables(
            spatial_graph.num_nodes, config.steps_per_day, config.d, generator=gen, dtype=dtype
        )
        self.head = PredictionHead(
            l_in,
            l_out,
            f_in,
            f_out,
            config.d,
            config.feature_lift_dim,
            config.head_hidden,
            generator=gen,
            dtype=dtype,
        )

    @property
    def num_nodes(self) -> int:
        return self.spatial_graph.num_nodes

    def _drop_masks(self, batch: int, support: GraphSupport, drop_p: float, generator):
        """Per-window attend masks with edges dropped i.i.d. (self-loops kept)."""
        keep = (
            torch.empty(batch, len(support.edges), dtype=self.dtype).uniform_(
                0, 1, generator=generator
            )
            >= drop_p
        )
        masks = (
            torch.eye(support.num_nodes, dtype=torch.bool)
            .unsqueeze(0)
            .repeat(batch, 1, 1)
        )
        batch_idx = torch.arange(batch).unsqueeze(1)
        masks[batch_idx, support.tgt.unsqueeze(0), support.src.unsqueeze(0)] = keep
        return masks

    def forward(
        self,
        features: torch.Tensor,
        tod_index: torch.Tensor,
        dow_index: torch.Tensor,
        mode: str = "eval",
        r_s: float | None = None,
        r_t: float | None = None,
        gumbel_generator=None,
        drop_generator=None,
        spatial_mask: torch.Tensor | None = None,
        temporal_mask: torch.Tensor | None = None,
        distill: bool = True,
    ) -> ForwardResult:
        """Run the model on a batch of windows.

        ``spatial_mask`` / ``temporal_mask`` impose hard subgraphs (used by
        explanation metrics and random-drop training); ``distill=False``
        skips the bottleneck entirely and encodes once on whatever
        structure the masks describe.
        """
        squeeze = features.dim() == 3
        if squeeze:
            features = features.unsqueeze(0)
            tod_index = torch.as_tensor(tod_index).reshape(1, -1)
            dow_index = torch.as_tensor(dow_index).reshape(1, -1)
        batch = features.shape[0]
        zero = torch.zeros((), dtype=self.dtype)
        ab = self.config.ablation
        probs_s = probs_t = None
        kl_s = kl_t = zero

        if distill and ab.random_drop_p is not None:
            if mode == "train" and ab.random_drop_p > 0:
                spatial_mask = self._drop_masks(
                    batch, self.spatial_support, ab.random_drop_p, drop_generator
                )
                temporal_mask = self._drop_masks(
                    batch, self.temporal_support, ab.random_drop_p, drop_generator
                )
            distill = False

        weights_s = weights_t = None
        if distill:
            score_s = not ab.no_spatial_ib
            score_t = not ab.no_temporal_ib
            if score_s or score_t:
                _, hs, ht = self.encoder.encode(
                    features, self.spatial_support, self.temporal_support
                )
                if score_s:
                    logits = self.spatial_scorer(hs, self.spatial_support)
                    probs_s = sample_keep_probs(
                        logits,
                        self.config.tau,
                        mode,
                        gumbel_generator,
                        self.config.noise_kind,
                    )
                    kl_s = bernoulli_kl(probs_s, self.config.r_s if r_s is None else r_s).mean()
                    weights_s = probs_s.clamp_min(PROB_EPS)
                if score_t:
                    logits = self.temporal_scorer(ht, self.temporal_support)
                    probs_t = sample_keep_probs(
                        logits,
                        self.config.tau,
                        mode,
                        gumbel_generator,
                        self.config.noise_kind,
                    )
                    kl_t = bernoulli_kl(probs_t, self.config.r_t if r_t is None else r_t).mean()
                    weights_t = probs_t.clamp_min(PROB_EPS)

        h, _, _ = self.encoder.encode(
            features,
            self.spatial_support,
            self.temporal_support,
            spatial_weights=weights_s,
            temporal_weights=weights_t,
            spatial_mask=spatial_mask,
            temporal_mask=temporal_mask,
        )
        prediction = self.head(h, features, self.tables, tod_index, dow_index)
        if squeeze:
            prediction = prediction.squeeze(0)
            probs_s = None if probs_s is None else probs_s.squeeze(0)
            probs_t = None if probs_t is None else probs_t.squeeze(0)
        return ForwardResult(prediction, probs_s, probs_t, kl_s, kl_t)

    # ------------------------------------------------------------------
    # Convenience inference paths (no grad, eval-mode noise).

    def predict_windows(self, windows, batch_size: int = 128) -> np.ndarray:
        """Forecasts for a window sequence, shape (W, L', N, F')."""
        outputs = []
        with torch.no_grad():
            for start in range(0, len(windows), batch_size):
                feats, _, tod, dow = stack_windows(windows[start : start + batch_size], self.dtype)
                outputs.append(self(feats, tod, dow, mode="eval").prediction.numpy())
        return np.concatenate(outputs, axis=0)

    def edge_probabilities(self, windows, batch_size: int = 128):
        """Eval-mode keep probabilities per window: (W, E_s), (W, E_t).

        Ablated sides come back as all-ones (nothing is distilled there).
        """
        out_s, out_t = [], []
        with torch.no_grad():
            for start in range(0, len(windows), batch_size):
                feats, _, tod, dow = stack_windows(windows[start : start + batch_size], self.dtype)
                res = self(feats, tod, dow, mode="eval")
                b = feats.shape[0]
                out_s.append(
                    res.spatial_probs.numpy()
                    if res.spatial_probs is not None
                    else np.ones((b, len(self.spatial_support.edges)))
                )
                out_t.append(
                    res.temporal_probs.numpy()
                    if res.temporal_probs is not None
                    else np.ones((b, len(self.temporal_support.edges)))
                )
        return np.concatenate(out_s, axis=0), np.concatenate(out_t, axis=0)

    def distill(self, window: STWindow, r_s: float | None = None, r_t: float | None = None) -> DistillResult:
        """Deterministic distillation snapshot of one window."""
        feats = torch.tensor(window.features, dtype=self.dtype)
        with torch.no_grad():
            res = self(feats, window.tod_index, window.dow_index, mode="eval", r_s=r_s, r_t=r_t)

        def as_map(probs, support):
            if probs is None:
                return {}
            vals = np.clip(probs.numpy(), PROB_EPS, 1.0 - PROB_EPS)
            return {e: float(v) for e, v in zip(support.edges, vals)}

        smap = as_map(res.spatial_probs, self.spatial_support)
        tmap = as_map(res.temporal_probs, self.temporal_support)
        return DistillResult(
            spatial_probs=smap,
            temporal_probs=tmap,
            spatial_selector=dict(smap),
            temporal_selector=dict(tmap),
            kl_spatial=float(res.kl_spatial),
            kl_temporal=float(res.kl_temporal),
        )

    # ------------------------------------------------------------------
    # Checkpointing.

    def save(self, path):
        arrays = {name: p.detach().numpy() for name, p in self.named_parameters()}
        meta = {
            "model_config": to_payload(self.config),
            "spatial_graph": to_payload(self.spatial_graph),
            "dims": {
                "l_in": self.l_in,
                "l_out": self.l_out,
                "f_in": self.f_in,
                "f_out": self.f_out,
            },
        }
        ckpt.save_checkpoint(path, arrays, meta)

    @classmethod
    def load(cls, path) -> "STGIBModel":
        arrays, meta = ckpt.load_checkpoint(path)
        try:
            config = from_payload(meta["model_config"])
            graph = from_payload(meta["spatial_graph"])
            dims = meta["dims"]
        except (KeyError, TypeError) as exc:
            raise CheckpointError(f"{path}: missing rebuild metadata ({exc})") from None
        model = cls(config, graph, dims["l_in"], dims["l_out"], dims["f_in"], dims["f_out"])
        state = {name: torch.tensor(arr) for name, arr in arrays.items()}
        missing = set(dict(model.named_parameters())) ^ set(state)
        if missing:
            raise CheckpointError(f"{path}: parameter set mismatch: {sorted(missing)[:5]}")
        model.load_state_dict(state)
        return model
