"""Person bounding boxes to binary masks, and pixel-to-latent downsampling."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Tuple, Union

import numpy as np

from .errors import BoundsError, FormatError, MaskError, ShapeError
from .numerics import Tensor


@dataclass(frozen=True)
class BBox:
    """Pixel box, inclusive-exclusive: covers [x0, x1) x [y0, y1)."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise BoundsError(f"degenerate box {self}")


class BinaryMask:
    """Strictly binary {0,1} grid of shape (height, width)."""

    __slots__ = ("cells",)

    def __init__(self, cells: np.ndarray):
        cells = np.asarray(cells)
        if cells.ndim != 2:
            raise ShapeError("mask must be 2-D")
        if not np.all((cells == 0) | (cells == 1)):
            raise MaskError("mask values must be 0 or 1")
        self.cells = cells.astype(np.uint8)
        self.cells.flags.writeable = False

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    def to_tensor(self) -> Tensor:
        return Tensor(self.cells.astype(np.float64), dtype="f64")

    def __eq__(self, other) -> bool:
        return isinstance(other, BinaryMask) and np.array_equal(self.cells, other.cells)


def rasterize_union(boxes: Sequence[BBox], height: int, width: int) -> BinaryMask:
    """Union of boxes as a binary mask; empty input gives an all-zero mask."""
    grid = np.zeros((height, width), dtype=np.uint8)
    for b in boxes:
        if b.x0 < 0 or b.y0 < 0 or b.x1 > width or b.y1 > height:
            raise BoundsError(f"box {b} outside {height}x{width} canvas")
        grid[b.y0 : b.y1, b.x0 : b.x1] = 1
    return BinaryMask(grid)


def to_latent(mask: BinaryMask, factor: int) -> BinaryMask:
    """Any-coverage pooling: a latent cell is 1 iff any covered pixel is 1."""
    if factor < 1:
        raise ValueError("factor must be a positive integer")
    if mask.height % factor or mask.width % factor:
        raise ShapeError(
            f"mask {mask.height}x{mask.width} not divisible by factor {factor}"
        )
    h, w = mask.height // factor, mask.width // factor
    blocks = mask.cells.reshape(h, factor, w, factor)
    return BinaryMask(blocks.max(axis=(1, 3)))


def upsample(mask: BinaryMask, factor: int) -> BinaryMask:
    """Replicate each cell into a factor x factor block."""
    if factor < 1:
        raise ValueError("factor must be a positive integer")
    return BinaryMask(np.kron(mask.cells, np.ones((factor, factor), dtype=np.uint8)))


def load_boxes_json(path: Union[str, Path]) -> Tuple[Sequence[BBox], int, int]:
    """Read `{"height":H,"width":W,"boxes":[[x0,y0,x1,y1],...]}`."""
    with open(path) as fh:
        doc = json.load(fh)
    try:
        height = int(doc["height"])
        width = int(doc["width"])
        boxes = [BBox(*map(int, entry)) for entry in doc["boxes"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed boxes file ({exc})") from exc
    return boxes, height, width
