"""Training objectives, matching, metrics, and pairing tooling for
identity-preserving person insertion, plus a toy diffusion harness."""

from .errors import (
    BoundsError,
    DegenerateEmbeddingError,
    DivergenceError,
    EmptyRunError,
    FormatError,
    InsertkitError,
    MaskError,
    NumericalError,
    ShapeError,
    TimestepError,
    UndefinedMetricError,
)
from .losses import DEFAULT_LAMBDA_FACE, HbafBatch, LossValue, ffip_active, ffip_loss, hbaf_loss, total_loss
from .masks import BBox, BinaryMask, rasterize_union, to_latent, upsample
from .matching import Face, FaceSet, MatchResult, hungarian_max, match_faces, similarity_matrix
from .metrics import FailureRecord, MetricsReport, aggregate, evaluate_run, ids_score
from .numerics import GradCheckReport, Tensor, cosine, elementwise, grad_check, read_itsr, write_itsr
from .schedule import ScheduleConfig, adaptive_mask, emit_schedule_curve, lambda_at

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "BinaryMask",
    "BoundsError",
    "DEFAULT_LAMBDA_FACE",
    "DegenerateEmbeddingError",
    "DivergenceError",
    "EmptyRunError",
    "Face",
    "FaceSet",
    "FailureRecord",
    "FormatError",
    "GradCheckReport",
    "HbafBatch",
    "InsertkitError",
    "LossValue",
    "MaskError",
    "MatchResult",
    "MetricsReport",
    "NumericalError",
    "ScheduleConfig",
    "ShapeError",
    "Tensor",
    "TimestepError",
    "UndefinedMetricError",
    "adaptive_mask",
    "aggregate",
    "cosine",
    "elementwise",
    "emit_schedule_curve",
    "evaluate_run",
    "ffip_active",
    "ffip_loss",
    "grad_check",
    "hbaf_loss",
    "hungarian_max",
    "ids_score",
    "lambda_at",
    "match_faces",
    "rasterize_union",
    "read_itsr",
    "similarity_matrix",
    "to_latent",
    "total_loss",
    "upsample",
    "write_itsr",
]
