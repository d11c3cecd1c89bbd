"""Exception types shared across insertkit modules."""


class InsertkitError(Exception):
    """Base class for all insertkit errors."""


class ShapeError(InsertkitError):
    """Tensor/matrix shapes incompatible for the requested operation."""


class BoundsError(InsertkitError):
    """Bounding box falls outside the canvas."""


class MaskError(InsertkitError):
    """Mask contains values other than 0 and 1."""


class TimestepError(InsertkitError):
    """Timestep outside the configured diffusion range."""


class DegenerateEmbeddingError(InsertkitError):
    """Zero-norm embedding vector where a direction is required."""


class NumericalError(InsertkitError):
    """Non-finite value encountered during numeric computation."""


class UndefinedMetricError(InsertkitError):
    """Metric has no defined value for this input (e.g. no source faces)."""


class EmptyRunError(InsertkitError):
    """Aggregation requested over an empty record set."""


class DivergenceError(InsertkitError):
    """Training produced a non-finite loss."""

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"non-finite loss at step {step}")


class FormatError(InsertkitError):
    """Malformed on-disk artifact (tensor file, manifest, face set)."""
