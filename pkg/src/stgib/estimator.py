"""Scikit-learn style front door for the forecaster.

The estimator keeps every hyperparameter as a flat constructor argument
(so ``get_params`` / ``set_params`` / ``clone`` compose with the wider
ecosystem) and assembles the internal model and training configurations
at fit time from the bound dataset's geometry.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_dataset, check_windows
from .explain import extract_explanation
from .model import STGIBModel
from .schedules import PriorSchedule
from .training import TrainConfig, evaluate, train
from .types import AblationFlags, ModelConfig


class STGIBForecaster(BaseEstimator):
    """Graph-attention forecaster with an information-bottleneck edge distiller.

    Parameters mirror :class:`~stgib.types.ModelConfig` and
    :class:`~stgib.training.TrainConfig`; see those for semantics. ``fit``
    takes a :class:`~stgib.data.SplitDatasets` (or a single
    :class:`~stgib.types.STGraphDataset`, reused for validation).
    """

    def __init__(
        self,
        d=64,
        d_s=64,
        d_t=128,
        heads=16,
        gat_layers=2,
        tau=1.0,
        r_start=0.9,
        r_floor=0.3,
        r_decay_amount=0.1,
        r_decay_interval=10,
        lambda1=1.0,
        lambda2=1.0,
        delta=1.0,
        d_x=None,
        head_hidden=512,
        noise_kind="gumbel",
        no_spatial_ib=False,
        no_temporal_ib=False,
        random_drop_p=None,
        learning_rate=1e-3,
        lr_decay_ratio=0.5,
        lr_patience=10,
        epochs=100,
        batch_size=32,
        loss="huber",
        anneal_epochs=50,
        grad_clip=5.0,
        seed=0,
    ):
        self.d = d
        self.d_s = d_s
        self.d_t = d_t
        self.heads = heads
        self.gat_layers = gat_layers
        self.tau = tau
        self.r_start = r_start
        self.r_floor = r_floor
        self.r_decay_amount = r_decay_amount
        self.r_decay_interval = r_decay_interval
        self.lambda1 = lambda1
        self.lambda2 = lambda2
        self.delta = delta
        self.d_x = d_x
        self.head_hidden = head_hidden
        self.noise_kind = noise_kind
        self.no_spatial_ib = no_spatial_ib
        self.no_temporal_ib = no_temporal_ib
        self.random_drop_p = random_drop_p
        self.learning_rate = learning_rate
        self.lr_decay_ratio = lr_decay_ratio
        self.lr_patience = lr_patience
        self.epochs = epochs
        self.batch_size = batch_size
        self.loss = loss
        self.anneal_epochs = anneal_epochs
        self.grad_clip = grad_clip
        self.seed = seed

    # ------------------------------------------------------------------

    def _model_config(self, steps_per_day: int) -> ModelConfig:
        return ModelConfig(
            d=self.d,
            d_s=self.d_s,
            d_t=self.d_t,
            heads=self.heads,
            gat_layers=self.gat_layers,
            tau=self.tau,
            r_s=self.r_start,
            r_t=self.r_start,
            lambda1=self.lambda1,
            lambda2=self.lambda2,
            delta=self.delta,
            steps_per_day=steps_per_day,
            d_x=self.d_x,
            head_hidden=self.head_hidden,
            noise_kind=self.noise_kind,
            ablation=AblationFlags(
                no_spatial_ib=self.no_spatial_ib,
                no_temporal_ib=self.no_temporal_ib,
                random_drop_p=self.random_drop_p,
            ),
        )

    def _train_config(self) -> TrainConfig:
        prior = PriorSchedule(
            r_start=self.r_start,
            decay_amount=self.r_decay_amount,
            decay_interval_epochs=self.r_decay_interval,
            r_floor=self.r_floor,
        )
        return TrainConfig(
            learning_rate=self.learning_rate,
            lr_decay_ratio=self.lr_decay_ratio,
            lr_patience=self.lr_patience,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=self.seed,
            delta=self.delta,
            loss=self.loss,
            anneal_epochs=self.anneal_epochs,
            grad_clip=self.grad_clip,
            prior_spatial=prior,
            prior_temporal=prior,
        )

    def fit(self, dataset, y=None, steps_per_day: int | None = None):
        """Train on a split dataset; ``y`` is ignored (targets live in the windows)."""
        splits = check_dataset(dataset)
        window = splits.train.windows[0]
        if steps_per_day is None:
            steps_per_day = 1 if splits.train.task == "crime" else 288
        self.model_ = STGIBModel(
            self._model_config(steps_per_day),
            splits.spatial_graph,
            l_in=window.num_input_steps,
            l_out=window.targets.shape[0],
            f_in=window.features.shape[2],
            f_out=window.targets.shape[2],
            seed=self.seed,
        )
        _, self.reports_ = train(self.model_, splits, self._train_config())
        return self

    def _require_fitted(self) -> STGIBModel:
        if not hasattr(self, "model_"):
            raise RuntimeError("estimator is not fitted; call fit first")
        return self.model_

    def predict(self, windows) -> np.ndarray:
        """Forecasts for a window sequence, shape (W, L', N, F')."""
        model = self._require_fitted()
        windows = check_windows(windows, l_in=model.l_in, f_in=model.f_in)
        return model.predict_windows(windows)

    def score(self, windows, y=None) -> float:
        """Negative MAE (higher is better), for scorer compatibility."""
        mae, _, _ = self.evaluate(windows)
        return -mae

    def evaluate(self, windows) -> tuple[float, float, float]:
        """(MAE, RMSE, MAPE%) on a window sequence."""
        model = self._require_fitted()
        windows = check_windows(windows, l_in=model.l_in, f_in=model.f_in)
        return evaluate(model, windows)

    def explain(self, windows, threshold=None, top_fraction=None):
        """Per-window spatial and temporal explanations.

        Returns (spatial_explanations, temporal_explanations), each one
        list aligned with ``windows``.
        """
        model = self._require_fitted()
        windows = check_windows(windows, l_in=model.l_in, f_in=model.f_in)
        probs_s, probs_t = model.edge_probabilities(windows)
        spatial, temporal = [], []
        for row_s, row_t in zip(probs_s, probs_t):
            smap = dict(zip(model.spatial_support.edges, row_s))
            tmap = dict(zip(model.temporal_support.edges, row_t))
            spatial.append(extract_explanation(smap, "spatial", threshold, top_fraction))
            temporal.append(extract_explanation(tmap, "temporal", threshold, top_fraction))
        return spatial, temporal
