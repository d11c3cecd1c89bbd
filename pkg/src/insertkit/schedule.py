"""Timestep-dependent supervision weight and the adaptive weight mask.

The weight is lambda_max above t_start, lambda_min at or below t_end, and
linearly interpolated in between. The adaptive mask maps background cells
to exactly 1.0 and foreground cells to lambda(t).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, List, Tuple, Union

import numpy as np

from .errors import MaskError, TimestepError
from .numerics import Tensor


@dataclass(frozen=True)
class ScheduleConfig:
    lambda_max: float = 2.5
    lambda_min: float = 1.0
    t_start: int = 900
    t_end: int = 808
    t_max: int = 1000

    def __post_init__(self):
        if self.lambda_max <= 0 or self.lambda_min <= 0:
            raise ValueError("lambda_max and lambda_min must be positive")
        if self.lambda_min > self.lambda_max:
            raise ValueError("lambda_min must not exceed lambda_max")
        if not (self.t_end < self.t_start <= self.t_max):
            raise ValueError("require t_end < t_start <= t_max")


def lambda_at(cfg: ScheduleConfig, t: int) -> float:
    """Piecewise-linear weight at integer timestep t."""
    if not 0 <= t <= cfg.t_max:
        raise TimestepError(f"t={t} outside [0, {cfg.t_max}]")
    if t > cfg.t_start:
        return cfg.lambda_max
    if t <= cfg.t_end:
        return cfg.lambda_min
    frac = (t - cfg.t_end) / (cfg.t_start - cfg.t_end)
    return cfg.lambda_min + frac * (cfg.lambda_max - cfg.lambda_min)


def adaptive_mask(cfg: ScheduleConfig, t: int, m_latent: Tensor) -> Tensor:
    """Weight mask 1 + (lambda(t) - 1) * m over a binary latent mask."""
    m = m_latent.to_f64()
    if not np.all((m == 0.0) | (m == 1.0)):
        raise MaskError("latent mask must be strictly binary")
    lam = lambda_at(cfg, t)
    return Tensor(1.0 + (lam - 1.0) * m, dtype="f64")


def schedule_curve(cfg: ScheduleConfig, stride: int) -> Iterator[Tuple[int, float]]:
    if stride < 1:
        raise ValueError("stride must be >= 1")
    for t in range(0, cfg.t_max + 1, stride):
        yield t, lambda_at(cfg, t)


def emit_schedule_curve(cfg: ScheduleConfig, stride: int, path: Union[str, Path]) -> List[Tuple[int, float]]:
    """Write the (t, lambda) table as CSV and return the rows."""
    rows = list(schedule_curve(cfg, stride))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "lambda"])
        writer.writerows(rows)
    return rows
