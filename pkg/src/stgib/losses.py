"""Task losses and the joint objective."""

from __future__ import annotations

import torch

from .errors import ShapeError


def _pair(y, y_hat):
    y = torch.as_tensor(y, dtype=torch.float64) if not isinstance(y, torch.Tensor) else y
    y_hat = (
        torch.as_tensor(y_hat, dtype=torch.float64) if not isinstance(y_hat, torch.Tensor) else y_hat
    )
    if y.shape != y_hat.shape:
        raise ShapeError(f"target shape {tuple(y.shape)} != prediction shape {tuple(y_hat.shape)}")
    return y, y_hat


def huber_loss(y, y_hat, delta: float = 1.0):
    """Mean Huber loss: quadratic within ``delta``, linear outside."""
    if delta <= 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    y, y_hat = _pair(y, y_hat)
    err = y - y_hat
    abs_err = err.abs()
    quad = 0.5 * err**2
    lin = delta * (abs_err - 0.5 * delta)
    return torch.where(abs_err <= delta, quad, lin).mean()


def mse_loss(y, y_hat):
    """Mean squared error."""
    y, y_hat = _pair(y, y_hat)
    return ((y - y_hat) ** 2).mean()


def total_loss(task_loss, kl_spatial, kl_temporal, lambda1: float, lambda2: float):
    """Joint objective: task loss plus weighted structure penalties."""
    if lambda1 < 0 or lambda2 < 0:
        raise ValueError("penalty weights must be non-negative")
    return task_loss + lambda1 * kl_spatial + lambda2 * kl_temporal
