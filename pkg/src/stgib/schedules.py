"""Epoch schedules for the prior keep-probability and the penalty weights."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class PriorSchedule:
    """Stepwise-decaying prior keep-probability, clamped at a floor.

    Setting ``r_start == r_floor`` gives the fixed-prior mode.
    """

    r_start: float = 0.9
    decay_amount: float = 0.1
    decay_interval_epochs: int = 10
    r_floor: float = 0.3

    def __post_init__(self):
        if not 0.0 < self.r_floor <= self.r_start < 1.0:
            raise ValueError(
                f"need 0 < r_floor <= r_start < 1, got floor={self.r_floor} start={self.r_start}"
            )
        if self.decay_interval_epochs < 1:
            raise ValueError("decay_interval_epochs must be >= 1")


def prior_value(schedule: PriorSchedule, epoch: int) -> float:
    """Prior at a given epoch: start minus one decay step per interval, floored."""
    if epoch < 0:
        raise ValueError(f"epoch must be >= 0, got {epoch}")
    steps = epoch // schedule.decay_interval_epochs
    return max(schedule.r_floor, schedule.r_start - schedule.decay_amount * steps)


def lambda_value(
    epoch: int, anneal_epochs: int, scale1: float = 1.0, scale2: float = 1.0
) -> tuple[float, float]:
    """Linear 0-to-1 anneal of the two penalty weights over ``anneal_epochs``."""
    if anneal_epochs < 1:
        raise ValueError("anneal_epochs must be >= 1")
    lam = min(1.0, epoch / anneal_epochs)
    return scale1 * lam, scale2 * lam
