"""Optimization loop, schedules, and forecast accuracy metrics.

Training is deterministic under the configured seed: parameter init,
relaxation noise, random edge dropping, and batch shuffling each draw from
their own derived generator, so enabling or disabling one concern never
shifts the random stream of another.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import torch

from .errors import ConfigError, NumericalError
from .losses import huber_loss, mse_loss, total_loss
from .model import STGIBModel, stack_windows
from .schedules import PriorSchedule, lambda_value, prior_value
from .types import Scaler


@dataclass(frozen=True)
class TrainConfig:
    """Optimization hyperparameters and schedules."""

    learning_rate: float = 1e-3
    lr_decay_ratio: float = 0.5
    lr_patience: int = 10
    epochs: int = 100
    batch_size: int = 32
    seed: int = 0
    delta: float = 1.0
    loss: str = "huber"  # or "mse"
    anneal_epochs: int = 50
    grad_clip: float = 5.0
    epoch_offset: int = 0  # resume point: schedules see epoch_offset + epoch
    prior_spatial: PriorSchedule = field(default_factory=PriorSchedule)
    prior_temporal: PriorSchedule = field(default_factory=PriorSchedule)

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.loss not in ("huber", "mse"):
            raise ConfigError(f"loss must be 'huber' or 'mse', got {self.loss!r}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")


@dataclass(frozen=True)
class EpochReport:
    """One epoch of training telemetry."""

    epoch: int
    train_loss: float
    val_mae: float
    val_rmse: float
    val_mape: float
    kl_spatial: float
    kl_temporal: float
    r_s: float
    r_t: float
    lambda1: float
    lambda2: float
    wall_time: float

    def __post_init__(self):
        for name in ("train_loss", "val_mae", "val_rmse", "val_mape"):
            if not np.isfinite(getattr(self, name)):
                raise NumericalError(f"non-finite {name} in epoch {self.epoch}")


def compute_metrics(y: np.ndarray, y_hat: np.ndarray) -> tuple[float, float, float]:
    """(MAE, RMSE, MAPE%) over all entries; MAPE masks zero targets."""
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    err = y - y_hat
    mae = float(np.abs(err).mean())
    rmse = float(np.sqrt((err**2).mean()))
    nonzero = np.abs(y) > 0
    mape = float((np.abs(err[nonzero]) / np.abs(y[nonzero])).mean() * 100) if nonzero.any() else 0.0
    return mae, rmse, mape


def evaluate(
    model: STGIBModel,
    windows,
    scaler: Scaler | None = None,
    batch_size: int = 128,
    predictions_normalized: bool = False,
) -> tuple[float, float, float]:
    """Eval-mode metrics over a window sequence, in target units.

    Targets are stored raw, so predictions normally need no rescaling;
    ``predictions_normalized`` requests an inverse z-score through
    ``scaler`` for models trained on normalized targets.
    """
    predictions = model.predict_windows(windows, batch_size=batch_size)
    if predictions_normalized:
        if scaler is None:
            raise ValueError("predictions_normalized requires a scaler")
        predictions = scaler.inverse_transform(predictions)
    targets = np.stack([w.targets for w in windows])
    return compute_metrics(targets, predictions)


def _batches(num: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(num)
    for start in range(0, num, batch_size):
        yield torch.tensor(order[start : start + batch_size], dtype=torch.long)


def train(model: STGIBModel, datasets, config: TrainConfig):
    """Fit the model on ``datasets`` (a :class:`~stgib.data.SplitDatasets`).

    Returns (model, reports); the model is trained in place. A non-finite
    loss aborts with a :class:`NumericalError` carrying the offending batch
    diagnostics.
    """
    torch.manual_seed(config.seed)  # pins any library-internal draws
    gumbel_gen = torch.Generator().manual_seed(config.seed * 7919 + 1)
    drop_gen = torch.Generator().manual_seed(config.seed * 7919 + 2)
    shuffle_rng = np.random.default_rng(config.seed * 7919 + 3)

    feats, tgts, tod, dow = stack_windows(datasets.train.windows, model.dtype)
    task_loss_fn = (
        (lambda y, yh: huber_loss(y, yh, config.delta)) if config.loss == "huber" else mse_loss
    )
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    reports: list[EpochReport] = []
    best_val = float("inf")
    epochs_since_improvement = 0
    lam_scales = (model.config.lambda1, model.config.lambda2)

    for epoch in range(config.epoch_offset, config.epoch_offset + config.epochs):
        start_time = time.perf_counter()
        r_s = prior_value(config.prior_spatial, epoch)
        r_t = prior_value(config.prior_temporal, epoch)
        lam1, lam2 = lambda_value(epoch, config.anneal_epochs, *lam_scales)
        epoch_loss = 0.0
        epoch_kl_s = 0.0
        epoch_kl_t = 0.0
        num_batches = 0
        for idx in _batches(len(feats), config.batch_size, shuffle_rng):
            optimizer.zero_grad()
            result = model(
                feats[idx],
                tod[idx],
                dow[idx],
                mode="train",
                r_s=r_s,
                r_t=r_t,
                gumbel_generator=gumbel_gen,
                drop_generator=drop_gen,
            )
            task = task_loss_fn(tgts[idx], result.prediction)
            loss = total_loss(task, result.kl_spatial, result.kl_temporal, lam1, lam2)
            if not torch.isfinite(loss):
                raise NumericalError(
                    f"non-finite loss at epoch {epoch}, batch {num_batches}: "
                    f"task={float(task)}, kl_s={float(result.kl_spatial)}, "
                    f"kl_t={float(result.kl_temporal)}"
                )
            loss.backward()
            if config.grad_clip > 0:
                torch.nn.utils.clip_grad_norm_(model.parameters(), config.grad_clip)
            optimizer.step()
            epoch_loss += float(loss.detach())
            epoch_kl_s += float(result.kl_spatial.detach())
            epoch_kl_t += float(result.kl_temporal.detach())
            num_batches += 1

        val_mae, val_rmse, val_mape = evaluate(model, datasets.val.windows)
        reports.append(
            EpochReport(
                epoch=epoch,
                train_loss=epoch_loss / num_batches,
                val_mae=val_mae,
                val_rmse=val_rmse,
                val_mape=val_mape,
                kl_spatial=epoch_kl_s / num_batches,
                kl_temporal=epoch_kl_t / num_batches,
                r_s=r_s,
                r_t=r_t,
                lambda1=lam1,
                lambda2=lam2,
                wall_time=time.perf_counter() - start_time,
            )
        )
        # halve the learning rate when validation MAE stops improving
        if val_mae < best_val - 1e-12:
            best_val = val_mae
            epochs_since_improvement = 0
        else:
            epochs_since_improvement += 1
            if epochs_since_improvement >= config.lr_patience:
                for group in optimizer.param_groups:
                    group["lr"] *= config.lr_decay_ratio
                epochs_since_improvement = 0
    return model, reports
