"""Face similarity matrix and optimal one-to-one assignment.

Maximization is run as minimization on cost = (max entry - similarity)
with a classic O(n^3) Hungarian solver on square matrices; rectangular
inputs are padded with constant-cost rows/columns and the padded pairs
are stripped from the result.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DegenerateEmbeddingError, FormatError, NumericalError, ShapeError
from .masks import BBox
from .numerics import cosine


@dataclass(frozen=True)
class Face:
    box: Optional[BBox]
    embedding: Tuple[float, ...]

    def __post_init__(self):
        emb = np.asarray(self.embedding, dtype=np.float64)
        if emb.ndim != 1 or emb.size == 0:
            raise ShapeError("embedding must be a nonempty vector")
        if float(np.linalg.norm(emb)) == 0.0:
            raise DegenerateEmbeddingError("face embedding has zero norm")
        object.__setattr__(self, "embedding", tuple(float(x) for x in emb))


@dataclass(frozen=True)
class FaceSet:
    faces: Tuple[Face, ...]

    def __post_init__(self):
        faces = tuple(self.faces)
        dims = {len(f.embedding) for f in faces}
        if len(dims) > 1:
            raise ShapeError(f"mixed embedding dimensions {sorted(dims)}")
        object.__setattr__(self, "faces", faces)

    def __len__(self) -> int:
        return len(self.faces)

    @property
    def embeddings(self) -> List[np.ndarray]:
        return [np.asarray(f.embedding) for f in self.faces]


@dataclass(frozen=True)
class MatchResult:
    pairs: Tuple[Tuple[int, int], ...]
    similarities: Tuple[float, ...]
    total: float


def similarity_matrix(pred: FaceSet, src: FaceSet) -> np.ndarray:
    """S[i][j] = cosine(pred embedding i, src embedding j)."""
    if len(pred) and len(src):
        dp = len(pred.faces[0].embedding)
        ds = len(src.faces[0].embedding)
        if dp != ds:
            raise ShapeError(f"embedding dims differ: {dp} vs {ds}")
    out = np.empty((len(pred), len(src)), dtype=np.float64)
    for i, e_pred in enumerate(pred.embeddings):
        for j, e_src in enumerate(src.embeddings):
            out[i, j] = cosine(e_pred, e_src)
    return out


def _solve_square_min(cost: np.ndarray) -> List[int]:
    """Hungarian algorithm with row/column potentials; returns col of each row."""
    n = cost.shape[0]
    INF = float("inf")
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    p = [0] * (n + 1)  # p[j] = row matched to column j (1-based, 0 = free)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [INF] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = INF
            j1 = -1
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    row_to_col = [-1] * n
    for j in range(1, n + 1):
        if p[j] != 0:
            row_to_col[p[j] - 1] = j - 1
    return row_to_col


def hungarian_max(S: np.ndarray) -> MatchResult:
    """Maximum-total-similarity one-to-one assignment of size min(Np, Ns)."""
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2:
        raise ShapeError("similarity matrix must be 2-D")
    n_p, n_s = S.shape
    if n_p == 0 or n_s == 0:
        return MatchResult(pairs=(), similarities=(), total=0.0)
    if not np.all(np.isfinite(S)):
        raise NumericalError("similarity matrix contains non-finite entries")

    n = max(n_p, n_s)
    cost = np.zeros((n, n), dtype=np.float64)
    cost[:n_p, :n_s] = float(S.max()) - S
    row_to_col = _solve_square_min(cost)

    pairs = sorted(
        (i, j) for i, j in enumerate(row_to_col[:n_p]) if j < n_s
    )
    sims = tuple(float(S[i, j]) for i, j in pairs)
    return MatchResult(pairs=tuple(pairs), similarities=sims, total=float(sum(sims)))


def match_faces(pred: FaceSet, src: FaceSet) -> MatchResult:
    return hungarian_max(similarity_matrix(pred, src))


def load_faceset_json(path: Union[str, Path]) -> FaceSet:
    """Read `{"faces":[{"box":[x0,y0,x1,y1],"embedding":[...]}]}`; box optional."""
    with open(path) as fh:
        doc = json.load(fh)
    try:
        faces = []
        for entry in doc["faces"]:
            box = BBox(*map(int, entry["box"])) if entry.get("box") is not None else None
            faces.append(Face(box=box, embedding=tuple(map(float, entry["embedding"]))))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed face set ({exc})") from exc
    return FaceSet(faces=tuple(faces))


def match_result_to_dict(result: MatchResult) -> dict:
    return {
        "pairs": [list(p) for p in result.pairs],
        "similarities": list(result.similarities),
        "total": result.total,
    }
