"""Region-weighted denoising loss, matched-face identity loss, and their
gated total.

Forward values and analytic gradients are computed in float64 regardless
of input dtype. The identity loss takes raw embedding vectors and
L2-normalizes internally, so its gradient includes the normalization
Jacobian.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateEmbeddingError, ShapeError
from .masks import BinaryMask
from .matching import MatchResult
from .numerics import Tensor
from .schedule import ScheduleConfig, adaptive_mask, lambda_at

DEFAULT_LAMBDA_FACE = 0.02


@dataclass(frozen=True)
class HbafBatch:
    prediction: Tensor  # (C, H, W) predicted noise
    target: Tensor  # (C, H, W) true noise
    latent_mask: BinaryMask  # (H, W) human-region mask at latent resolution
    t: int
    cfg: ScheduleConfig

    def __post_init__(self):
        if self.prediction.shape != self.target.shape:
            raise ShapeError(
                f"prediction {self.prediction.shape} != target {self.target.shape}"
            )
        if len(self.prediction.shape) != 3:
            raise ShapeError("expected (C, H, W) latents")
        if self.prediction.shape[1:] != (self.latent_mask.height, self.latent_mask.width):
            raise ShapeError(
                f"mask {self.latent_mask.height}x{self.latent_mask.width} does not "
                f"match latent trailing dims {self.prediction.shape[1:]}"
            )


@dataclass(frozen=True)
class LossValue:
    value: float
    grad: Optional[np.ndarray] = None
    no_matches: bool = False


def hbaf_loss(batch: HbafBatch, with_grad: bool = False) -> LossValue:
    """Weighted mean squared error over the latent, mask broadcast over channels.

    value = (1/N) sum(M_t * (pred - target)^2) with N = C*H*W;
    grad wrt prediction = (2/N) * M_t * (pred - target).
    """
    pred = batch.prediction.to_f64()
    target = batch.target.to_f64()
    weights = adaptive_mask(batch.cfg, batch.t, batch.latent_mask.to_tensor()).to_f64()
    weights = weights[np.newaxis, :, :]  # broadcast over channels

    diff = pred - target
    n = diff.size
    value = float(np.sum(weights * diff * diff) / n)
    grad = (2.0 / n) * weights * diff if with_grad else None
    return LossValue(value=value, grad=grad)


def ffip_loss(
    pred_embeddings: Sequence[np.ndarray],
    src_embeddings: Sequence[np.ndarray],
    matches: MatchResult,
    with_grad: bool = False,
) -> LossValue:
    """Mean (1 - cosine) over matched pairs of internally normalized embeddings.

    Gradient is with respect to each raw predicted vector v: with s the
    normalized source and v_hat = v/|v|,
        d/dv = -(s - (v_hat . s) v_hat) / (|M| * |v|).
    Unmatched predicted embeddings get zero gradient. An empty matching
    returns 0 with the no_matches flag instead of raising.
    """
    preds = [np.asarray(e, dtype=np.float64).ravel() for e in pred_embeddings]
    srcs = [np.asarray(e, dtype=np.float64).ravel() for e in src_embeddings]

    if len(matches.pairs) == 0:
        grad = (
            np.zeros((len(preds), preds[0].size)) if with_grad and preds else
            (np.zeros((0, 0)) if with_grad else None)
        )
        return LossValue(value=0.0, grad=grad, no_matches=True)

    m = len(matches.pairs)
    value = 0.0
    grad = np.zeros((len(preds), preds[0].size)) if with_grad else None
    for i, j in matches.pairs:
        v = preds[i]
        w = srcs[j]
        nv = float(np.linalg.norm(v))
        nw = float(np.linalg.norm(w))
        if nv == 0.0 or nw == 0.0:
            raise DegenerateEmbeddingError(f"zero-norm embedding in matched pair ({i},{j})")
        v_hat = v / nv
        s = w / nw
        cos = float(np.clip(v_hat @ s, -1.0, 1.0))
        value += 1.0 - cos
        if with_grad:
            grad[i] += -(s - (v_hat @ s) * v_hat) / (m * nv)
    return LossValue(value=value / m, grad=grad)


def total_loss(
    hbaf: LossValue,
    ffip: LossValue,
    t: int,
    cfg: ScheduleConfig,
    lambda_face: float = DEFAULT_LAMBDA_FACE,
) -> LossValue:
    """hbaf + lambda_face * ffip when t <= t_end, else hbaf alone.

    Gradients are combined with the same gate only when both inputs carry a
    gradient of identical shape (the caller chains the identity-loss
    gradient through its own embedding map otherwise).
    """
    if lambda_face < 0:
        raise ValueError("lambda_face must be nonnegative")
    gated = ffip_active(t, cfg)
    value = hbaf.value + (lambda_face * ffip.value if gated else 0.0)
    grad = None
    if hbaf.grad is not None:
        grad = hbaf.grad.copy()
        if gated and ffip.grad is not None and ffip.grad.shape == grad.shape:
            grad += lambda_face * ffip.grad
    return LossValue(value=value, grad=grad)


def ffip_active(t: int, cfg: ScheduleConfig) -> bool:
    """Identity-loss gate: active exactly when t <= t_end."""
    lambda_at(cfg, t)  # range check
    return t <= cfg.t_end
