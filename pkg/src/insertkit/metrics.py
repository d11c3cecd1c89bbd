"""Identity similarity score and failure-rate aggregation.

IDS matches faces between a generated image and the source image, sums the
matched cosine similarities, and normalizes by the larger face count. A
sample counts toward the failure rate if any of the four annotated failure
modes is set: background mismatch (bm), person count error (pce), body
distortion (bd), background leakage (bl).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

from .errors import EmptyRunError, FormatError, UndefinedMetricError
from .matching import FaceSet, hungarian_max, load_faceset_json, similarity_matrix

FLAG_NAMES = ("bm", "pce", "bd", "bl")


@dataclass(frozen=True)
class FailureRecord:
    sample_id: str
    bm: bool = False
    pce: bool = False
    bd: bool = False
    bl: bool = False

    @property
    def failed(self) -> bool:
        return self.bm or self.pce or self.bd or self.bl


@dataclass(frozen=True)
class MetricsReport:
    fr: float
    bm: float
    pce: float
    bd: float
    bl: float
    ids_mean: Optional[float]
    n_samples: int
    n_ids_samples: int = 0
    n_ids_excluded: int = 0

    def to_dict(self) -> dict:
        return {
            "fr": self.fr,
            "bm": self.bm,
            "pce": self.pce,
            "bd": self.bd,
            "bl": self.bl,
            "ids_mean": self.ids_mean,
            "n_samples": self.n_samples,
            "n_ids_samples": self.n_ids_samples,
            "n_ids_excluded": self.n_ids_excluded,
        }


def ids_score(gen_faces: FaceSet, src_faces: FaceSet) -> float:
    """Matched-similarity sum divided by max(n_gen, n_src)."""
    n_gen, n_src = len(gen_faces), len(src_faces)
    if n_src == 0:
        raise UndefinedMetricError("no source faces; sample excluded upstream")
    if n_gen == 0:
        return 0.0
    match = hungarian_max(similarity_matrix(gen_faces, src_faces))
    return match.total / max(n_gen, n_src)


def aggregate(
    records: Sequence[FailureRecord],
    per_sample_ids: Sequence[float] = (),
    n_ids_excluded: int = 0,
) -> MetricsReport:
    """Failure rates plus the mean of defined per-sample identity scores."""
    if not records:
        raise EmptyRunError("no failure records to aggregate")
    ids = [r.sample_id for r in records]
    if len(set(ids)) != len(ids):
        raise FormatError("duplicate sample ids in failure records")
    n = len(records)
    rates = {name: sum(getattr(r, name) for r in records) / n for name in FLAG_NAMES}
    fr = sum(r.failed for r in records) / n
    ids_mean = sum(per_sample_ids) / len(per_sample_ids) if per_sample_ids else None
    return MetricsReport(
        fr=fr,
        ids_mean=ids_mean,
        n_samples=n,
        n_ids_samples=len(per_sample_ids),
        n_ids_excluded=n_ids_excluded,
        **rates,
    )


def evaluate_run(path: Union[str, Path]) -> MetricsReport:
    """Evaluate a run file:
    `{"samples":[{"id":..,"flags":{"bm":..},"gen_faces":FILE,"src_faces":FILE}]}`.

    Face-set paths are resolved relative to the run file. Samples without
    face files contribute only to the failure rates; samples with zero
    source faces are excluded from the identity mean and counted.
    """
    path = Path(path)
    with open(path) as fh:
        doc = json.load(fh)
    try:
        samples = doc["samples"]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{path}: malformed run file ({exc})") from exc

    records: List[FailureRecord] = []
    ids_values: List[float] = []
    excluded = 0
    for sample in samples:
        flags = sample.get("flags", {})
        records.append(
            FailureRecord(
                sample_id=str(sample["id"]),
                **{name: bool(flags.get(name, False)) for name in FLAG_NAMES},
            )
        )
        if "gen_faces" in sample and "src_faces" in sample:
            gen = load_faceset_json(path.parent / sample["gen_faces"])
            src = load_faceset_json(path.parent / sample["src_faces"])
            try:
                ids_values.append(ids_score(gen, src))
            except UndefinedMetricError:
                excluded += 1
    return aggregate(records, ids_values, n_ids_excluded=excluded)


def format_percent(rate: float) -> str:
    """Render a fraction as a percentage with two decimals."""
    return f"{100.0 * rate:.2f}"
