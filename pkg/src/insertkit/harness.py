"""Desk-scale end-to-end demonstration: a synthetic insertion task and a
tiny two-layer denoiser trained by manual backpropagation under the
region-weighted plus identity objective.

The identity-embedding stand-in is a frozen seeded random linear
projection of the predicted foreground patch; it is differentiable and
exercises the full identity-loss gradient path without a recognition
network.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DivergenceError, TimestepError
from .losses import DEFAULT_LAMBDA_FACE, HbafBatch, LossValue, ffip_active, ffip_loss, hbaf_loss
from .masks import BinaryMask
from .matching import MatchResult
from .numerics import GradCheckReport, Tensor, grad_check
from .schedule import ScheduleConfig, lambda_at

GRID = 16
RECT = 6  # fixed foreground rectangle edge, so the patch projection has a fixed input dim
EMBED_DIM = 8
_PROJECTION_SEED = 1234  # frozen stand-in for the recognition network

LOG_COLUMNS = [
    "step",
    "t",
    "lambda_t",
    "hbaf",
    "ffip",
    "ffip_active",
    "total",
    "fg_mse",
    "bg_mse",
]


def alpha_bar(t: int, t_max: int = 1000) -> float:
    """Linear noise schedule: alpha_bar(0) = 1, alpha_bar(t_max) = 0."""
    if not 0 <= t <= t_max:
        raise TimestepError(f"t={t} outside [0, {t_max}]")
    return 1.0 - t / t_max


def identity_projection(embed_dim: int = EMBED_DIM, patch: int = RECT) -> np.ndarray:
    rng = np.random.default_rng(_PROJECTION_SEED)
    return rng.standard_normal((embed_dim, patch * patch))


@dataclass
class ToySample:
    x0: np.ndarray  # (1, GRID, GRID), values in [0, 1]
    mask: BinaryMask  # exact rectangle
    cond: np.ndarray  # flattened background grid
    rect: Tuple[int, int]  # top-left (row, col) of the foreground rectangle


def make_sample(rng: np.random.Generator) -> ToySample:
    bg = rng.uniform(0.0, 0.4, size=(GRID, GRID))
    r = int(rng.integers(0, GRID - RECT + 1))
    c = int(rng.integers(0, GRID - RECT + 1))
    img = bg.copy()
    img[r : r + RECT, c : c + RECT] = rng.uniform(0.6, 1.0, size=(RECT, RECT))
    cells = np.zeros((GRID, GRID), dtype=np.uint8)
    cells[r : r + RECT, c : c + RECT] = 1
    return ToySample(
        x0=img[np.newaxis, :, :],
        mask=BinaryMask(cells),
        cond=bg.ravel().copy(),
        rect=(r, c),
    )


def forward_noise(
    x0: np.ndarray, t: int, rng: np.random.Generator, t_max: int = 1000
) -> Tuple[np.ndarray, np.ndarray]:
    """z_t = sqrt(ab)*x0 + sqrt(1-ab)*eps with eps from the seeded generator."""
    ab = alpha_bar(t, t_max)
    eps = rng.standard_normal(x0.shape)
    z = math.sqrt(ab) * x0 + math.sqrt(1.0 - ab) * eps
    return z, eps


class ToyDenoiser:
    """Two affine layers with tanh between; input is the noised grid, the
    background condition, and a scalar t/t_max embedding."""

    def __init__(self, rng: np.random.Generator, hidden: int = 16):
        in_dim = GRID * GRID * 2 + 1
        out_dim = GRID * GRID
        scale = 1.0 / math.sqrt(in_dim)
        self.w1 = rng.standard_normal((in_dim, hidden)) * scale
        self.b1 = np.zeros(hidden)
        self.w2 = rng.standard_normal((hidden, out_dim)) * (1.0 / math.sqrt(hidden))
        self.b2 = np.zeros(out_dim)

    def forward(self, z: np.ndarray, cond: np.ndarray, t_frac: float):
        x = np.concatenate([z.ravel(), cond.ravel(), [t_frac]])
        h_pre = x @ self.w1 + self.b1
        h = np.tanh(h_pre)
        out = h @ self.w2 + self.b2
        cache = (x, h)
        return out.reshape(1, GRID, GRID), cache

    def backward(self, cache, d_out: np.ndarray) -> Dict[str, np.ndarray]:
        x, h = cache
        g = d_out.ravel()
        d_w2 = np.outer(h, g)
        d_b2 = g.copy()
        d_h = self.w2 @ g
        d_pre = (1.0 - h * h) * d_h
        d_w1 = np.outer(x, d_pre)
        d_b1 = d_pre
        return {"w1": d_w1, "b1": d_b1, "w2": d_w2, "b2": d_b2}

    def params_flat(self) -> np.ndarray:
        return np.concatenate([self.w1.ravel(), self.b1, self.w2.ravel(), self.b2])

    def set_params_flat(self, flat: np.ndarray) -> None:
        i = 0
        for name in ("w1", "b1", "w2", "b2"):
            p = getattr(self, name)
            setattr(self, name, flat[i : i + p.size].reshape(p.shape).copy())
            i += p.size
        assert i == flat.size

    def grads_flat(self, grads: Dict[str, np.ndarray]) -> np.ndarray:
        return np.concatenate([grads["w1"].ravel(), grads["b1"], grads["w2"].ravel(), grads["b2"]])

    def sgd_step(self, grads: Dict[str, np.ndarray], lr: float) -> None:
        self.w1 -= lr * grads["w1"]
        self.b1 -= lr * grads["b1"]
        self.w2 -= lr * grads["w2"]
        self.b2 -= lr * grads["b2"]


@dataclass
class StepBatch:
    sample: ToySample
    t: int
    z: np.ndarray
    eps: np.ndarray


def make_batch(rng: np.random.Generator, t: int, t_max: int = 1000) -> StepBatch:
    sample = make_sample(rng)
    z, eps = forward_noise(sample.x0, t, rng, t_max)
    return StepBatch(sample=sample, t=t, z=z, eps=eps)


@dataclass
class StepResult:
    hbaf: float
    ffip: float
    active: bool
    total: float
    fg_mse: float
    bg_mse: float
    grad_prediction: np.ndarray


_SINGLE_MATCH = MatchResult(pairs=((0, 0),), similarities=(0.0,), total=0.0)


def evaluate_objective(
    prediction: np.ndarray,
    batch: StepBatch,
    cfg: ScheduleConfig,
    lambda_face: float,
    use_ffip: bool,
    projection: np.ndarray,
) -> StepResult:
    """Loss value and gradient with respect to the predicted noise tensor."""
    hbaf = hbaf_loss(
        HbafBatch(
            prediction=Tensor(prediction),
            target=Tensor(batch.eps),
            latent_mask=batch.sample.mask,
            t=batch.t,
            cfg=cfg,
        ),
        with_grad=True,
    )
    grad = hbaf.grad.copy()
    total = hbaf.value

    active = use_ffip and ffip_active(batch.t, cfg)
    ffip_value = 0.0
    if active:
        ab = alpha_bar(batch.t, cfg.t_max)
        r, c = batch.sample.rect
        x0_hat = (batch.z - math.sqrt(1.0 - ab) * prediction) / math.sqrt(ab)
        pred_patch = x0_hat[0, r : r + RECT, c : c + RECT].ravel()
        src_patch = batch.sample.x0[0, r : r + RECT, c : c + RECT].ravel()
        e_pred = projection @ pred_patch
        e_src = projection @ src_patch
        ffip = ffip_loss([e_pred], [e_src], _SINGLE_MATCH, with_grad=True)
        ffip_value = ffip.value
        total += lambda_face * ffip_value
        d_patch = projection.T @ ffip.grad[0]
        d_x0 = np.zeros_like(prediction)
        d_x0[0, r : r + RECT, c : c + RECT] = d_patch.reshape(RECT, RECT)
        grad += lambda_face * d_x0 * (-math.sqrt(1.0 - ab) / math.sqrt(ab))

    diff = prediction - batch.eps
    fg = batch.sample.mask.cells == 1
    fg_mse = float(np.mean(diff[0][fg] ** 2))
    bg_mse = float(np.mean(diff[0][~fg] ** 2))
    return StepResult(
        hbaf=hbaf.value,
        ffip=ffip_value,
        active=active,
        total=total,
        fg_mse=fg_mse,
        bg_mse=bg_mse,
        grad_prediction=grad,
    )


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 500
    lr: float = 1e-3
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    lambda_face: float = DEFAULT_LAMBDA_FACE
    use_ffip: bool = True
    seed: int = 0
    hidden: int = 16


def train_demo(
    config: TrainConfig, log_path: Optional[Union[str, Path]] = None
) -> Tuple[List[dict], ToyDenoiser]:
    """Run the toy training loop; returns the per-step log rows."""
    if config.steps < 1:
        raise ValueError("steps must be >= 1")
    rng = np.random.default_rng(config.seed)
    den = ToyDenoiser(rng, hidden=config.hidden)
    projection = identity_projection()
    cfg = config.schedule
    rows: List[dict] = []
    for step in range(config.steps):
        t = int(rng.integers(1, cfg.t_max + 1))
        batch = make_batch(rng, t, cfg.t_max)
        pred, cache = den.forward(batch.z, batch.sample.cond, t / cfg.t_max)
        result = evaluate_objective(
            pred, batch, cfg, config.lambda_face, config.use_ffip, projection
        )
        if not np.isfinite(result.total):
            raise DivergenceError(step)
        grads = den.backward(cache, result.grad_prediction)
        den.sgd_step(grads, config.lr)
        rows.append(
            {
                "step": step,
                "t": t,
                "lambda_t": lambda_at(cfg, t),
                "hbaf": result.hbaf,
                "ffip": result.ffip,
                "ffip_active": int(result.active),
                "total": result.total,
                "fg_mse": result.fg_mse,
                "bg_mse": result.bg_mse,
            }
        )
    if log_path is not None:
        write_log(rows, log_path)
    return rows, den


def write_log(rows: Sequence[dict], path: Union[str, Path]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=LOG_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(row[k]) if isinstance(row[k], float) else row[k] for k in LOG_COLUMNS})


def read_log(path: Union[str, Path]) -> List[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for raw in reader:
            rows.append(
                {
                    "step": int(raw["step"]),
                    "t": int(raw["t"]),
                    "lambda_t": float(raw["lambda_t"]),
                    "hbaf": float(raw["hbaf"]),
                    "ffip": float(raw["ffip"]),
                    "ffip_active": int(raw["ffip_active"]),
                    "total": float(raw["total"]),
                    "fg_mse": float(raw["fg_mse"]),
                    "bg_mse": float(raw["bg_mse"]),
                }
            )
    return rows


def composed_objective(
    den: ToyDenoiser,
    batch: StepBatch,
    cfg: ScheduleConfig,
    lambda_face: float,
    use_ffip: bool,
    projection: np.ndarray,
) -> Tuple[float, np.ndarray]:
    """Total loss and flat parameter gradient for a fixed batch."""
    pred, cache = den.forward(batch.z, batch.sample.cond, batch.t / cfg.t_max)
    result = evaluate_objective(pred, batch, cfg, lambda_face, use_ffip, projection)
    grads = den.backward(cache, result.grad_prediction)
    return result.total, den.grads_flat(grads)


def gradcheck_composed(
    seed: int,
    t: int,
    cfg: ScheduleConfig,
    lambda_face: float = DEFAULT_LAMBDA_FACE,
    use_ffip: bool = True,
    hidden: int = 16,
    step: float = 1e-4,
    tol: float = 1e-5,
    coords: Optional[Sequence[int]] = None,
) -> GradCheckReport:
    """Central-difference check of the composed objective over denoiser params."""
    rng = np.random.default_rng(seed)
    den = ToyDenoiser(rng, hidden=hidden)
    batch = make_batch(rng, t, cfg.t_max)
    projection = identity_projection()

    theta0 = den.params_flat()
    _, analytic = composed_objective(den, batch, cfg, lambda_face, use_ffip, projection)

    def f(theta: Tensor) -> float:
        probe = ToyDenoiser(np.random.default_rng(0), hidden=hidden)
        probe.set_params_flat(theta.to_f64())
        pred, _ = probe.forward(batch.z, batch.sample.cond, batch.t / cfg.t_max)
        return evaluate_objective(pred, batch, cfg, lambda_face, use_ffip, projection).total

    return grad_check(f, Tensor(theta0), Tensor(analytic), step=step, tol=tol, coords=coords)


def gradcheck_all(seed: int = 0, tol: float = 1e-5, coords_per_check: int = 60) -> Dict[str, GradCheckReport]:
    """Finite-difference verification of every analytic gradient path."""
    rng = np.random.default_rng(seed)

    # region-weighted loss on a random (2, 4, 4) latent
    pred = rng.standard_normal((2, 4, 4))
    target = rng.standard_normal((2, 4, 4))
    mask = BinaryMask((rng.random((4, 4)) < 0.5).astype(np.uint8))
    cfg = ScheduleConfig()
    t = int(rng.integers(0, cfg.t_max + 1))

    def f_hbaf(x: Tensor) -> float:
        return hbaf_loss(
            HbafBatch(prediction=x, target=Tensor(target), latent_mask=mask, t=t, cfg=cfg)
        ).value

    hbaf_analytic = hbaf_loss(
        HbafBatch(prediction=Tensor(pred), target=Tensor(target), latent_mask=mask, t=t, cfg=cfg),
        with_grad=True,
    ).grad
    reports = {
        "hbaf": grad_check(f_hbaf, Tensor(pred), Tensor(hbaf_analytic), tol=tol)
    }

    # identity loss on random nonzero vectors
    preds = rng.standard_normal((3, EMBED_DIM)) + 0.1
    srcs = rng.standard_normal((3, EMBED_DIM)) + 0.1
    matches = MatchResult(pairs=((0, 1), (1, 0), (2, 2)), similarities=(0.0,) * 3, total=0.0)

    def f_ffip(x: Tensor) -> float:
        mat = x.to_f64()
        return ffip_loss(list(mat), list(srcs), matches).value

    ffip_analytic = ffip_loss(list(preds), list(srcs), matches, with_grad=True).grad
    reports["ffip"] = grad_check(f_ffip, Tensor(preds), Tensor(ffip_analytic), tol=tol)

    # composed objective over denoiser parameters (coordinate subset)
    n_params = ToyDenoiser(np.random.default_rng(0), hidden=8).params_flat().size
    coords = np.random.default_rng(seed + 1).choice(n_params, size=min(coords_per_check, n_params), replace=False)
    reports["composed"] = gradcheck_composed(
        seed=seed, t=500, cfg=cfg, hidden=8, tol=tol, coords=list(coords)
    )
    return reports
