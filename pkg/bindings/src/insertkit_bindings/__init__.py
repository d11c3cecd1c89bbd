"""Loss, matching, and metric primitives bound for host training frameworks.

Every call copies its inputs into fresh float64 buffers, delegates to the
core library, and copies results back out; no buffer is ever aliased
across the boundary. Results are bit-identical to the core's. Core errors
surface as BindingError with the core error name in the message.

Keyword parameters mirror the core CLI flags (lambda_max, lambda_min,
t_start, t_end, t_max, lambda_face, ...).
"""

from __future__ import annotations

import functools
from typing import Optional, Sequence

import numpy as np

import insertkit
from insertkit.errors import InsertkitError
from insertkit.losses import LossValue
from insertkit.masks import BinaryMask
from insertkit.matching import Face, FaceSet
from insertkit.numerics import Tensor

__all__ = [
    "BindingError",
    "aggregate",
    "ffip_loss",
    "hbaf_loss",
    "hungarian_max",
    "ids_score",
    "total_loss",
]


class BindingError(RuntimeError):
    """Core error surfaced across the binding boundary."""


def _surface_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except InsertkitError as exc:
            raise BindingError(f"{type(exc).__name__}: {exc}") from exc

    return wrapper


def _copy_in(buffer) -> np.ndarray:
    return np.array(buffer, dtype=np.float64, copy=True)


def _copy_out(arr: Optional[np.ndarray]) -> Optional[np.ndarray]:
    return None if arr is None else np.array(arr, dtype=np.float64, copy=True)


def _schedule(lambda_max, lambda_min, t_start, t_end, t_max) -> insertkit.ScheduleConfig:
    return insertkit.ScheduleConfig(
        lambda_max=lambda_max,
        lambda_min=lambda_min,
        t_start=t_start,
        t_end=t_end,
        t_max=t_max,
    )


def _faceset(embeddings: Sequence) -> FaceSet:
    return FaceSet(
        tuple(Face(box=None, embedding=tuple(_copy_in(e))) for e in embeddings)
    )


@_surface_errors
def hbaf_loss(
    *,
    pred,
    target,
    mask,
    t: int,
    lambda_max: float = 2.5,
    lambda_min: float = 1.0,
    t_start: int = 900,
    t_end: int = 808,
    t_max: int = 1000,
    grad: bool = False,
) -> dict:
    """Region-weighted denoising loss over a (C, H, W) latent."""
    batch = insertkit.HbafBatch(
        prediction=Tensor(_copy_in(pred)),
        target=Tensor(_copy_in(target)),
        latent_mask=BinaryMask(_copy_in(mask)),
        t=t,
        cfg=_schedule(lambda_max, lambda_min, t_start, t_end, t_max),
    )
    out = insertkit.hbaf_loss(batch, with_grad=grad)
    return {"value": out.value, "grad": _copy_out(out.grad)}


@_surface_errors
def ffip_loss(*, pred_faces, src_faces, grad: bool = False) -> dict:
    """Matched-face identity loss over raw embedding vectors.

    Matching is computed internally, exactly as the CLI does for face files.
    """
    pred_set = _faceset(pred_faces)
    src_set = _faceset(src_faces)
    matches = insertkit.match_faces(pred_set, src_set)
    out = insertkit.ffip_loss(pred_set.embeddings, src_set.embeddings, matches, with_grad=grad)
    return {
        "value": out.value,
        "grad": _copy_out(out.grad),
        "no_matches": out.no_matches,
        "pairs": [list(p) for p in matches.pairs],
    }


@_surface_errors
def total_loss(
    *,
    hbaf_value: float,
    ffip_value: float,
    t: int,
    lambda_face: float = 0.02,
    lambda_max: float = 2.5,
    lambda_min: float = 1.0,
    t_start: int = 900,
    t_end: int = 808,
    t_max: int = 1000,
    hbaf_grad=None,
    ffip_grad=None,
) -> dict:
    """Gated combination: hbaf + lambda_face * ffip when t <= t_end."""
    cfg = _schedule(lambda_max, lambda_min, t_start, t_end, t_max)
    out = insertkit.total_loss(
        LossValue(value=hbaf_value, grad=None if hbaf_grad is None else _copy_in(hbaf_grad)),
        LossValue(value=ffip_value, grad=None if ffip_grad is None else _copy_in(ffip_grad)),
        t=t,
        cfg=cfg,
        lambda_face=lambda_face,
    )
    return {
        "value": out.value,
        "grad": _copy_out(out.grad),
        "ffip_active": insertkit.ffip_active(t, cfg),
    }


@_surface_errors
def hungarian_max(*, similarity) -> dict:
    """Maximum-total one-to-one assignment over a similarity matrix."""
    result = insertkit.hungarian_max(_copy_in(similarity))
    return {
        "pairs": [list(p) for p in result.pairs],
        "similarities": list(result.similarities),
        "total": result.total,
    }


@_surface_errors
def ids_score(*, gen_faces, src_faces) -> float:
    """Identity similarity score from raw embedding vectors."""
    return insertkit.ids_score(_faceset(gen_faces), _faceset(src_faces))


@_surface_errors
def aggregate(*, records, per_sample_ids=()) -> dict:
    """Failure-rate aggregation over records like
    `{"id": "s1", "bm": false, "pce": true, "bd": false, "bl": false}`."""
    recs = [
        insertkit.FailureRecord(
            sample_id=str(r["id"]),
            bm=bool(r.get("bm", False)),
            pce=bool(r.get("pce", False)),
            bd=bool(r.get("bd", False)),
            bl=bool(r.get("bl", False)),
        )
        for r in records
    ]
    return insertkit.aggregate(recs, list(per_sample_ids)).to_dict()
