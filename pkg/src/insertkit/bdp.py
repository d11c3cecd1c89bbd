"""Bidirectional pairing manifests: forward (real source, synthetic ground
truth, web background) and reverse (synthetic source, real ground truth,
inpainted background) training triples, matched across directories by
shared file stem.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

FORWARD = "forward"
REVERSE = "reverse"

# direction -> (src_origin, gt_origin, bg_kind)
DIRECTION_TAGS = {
    FORWARD: ("real", "synthetic", "web"),
    REVERSE: ("synthetic", "real", "inpaint"),
}


@dataclass(frozen=True)
class PairRecord:
    id: str
    direction: str
    src_path: str
    bg_path: str
    gt_path: str
    src_origin: str
    gt_origin: str
    bg_kind: str

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "direction": self.direction,
            "src": self.src_path,
            "bg": self.bg_path,
            "gt": self.gt_path,
            "src_origin": self.src_origin,
            "gt_origin": self.gt_origin,
            "bg_kind": self.bg_kind,
        }


@dataclass
class PairManifest:
    records: List[PairRecord] = field(default_factory=list)

    @property
    def counts(self) -> Dict[str, int]:
        out = {FORWARD: 0, REVERSE: 0}
        for r in self.records:
            out[r.direction] = out.get(r.direction, 0) + 1
        return out

    def to_dict(self) -> dict:
        return {"records": [r.to_dict() for r in self.records], "counts": self.counts}


@dataclass(frozen=True)
class BuildResult:
    records: Tuple[PairRecord, ...]
    unmatched: Tuple[str, ...]  # stems missing from at least one directory


@dataclass(frozen=True)
class Violation:
    record_id: str
    kind: str
    detail: str


def _stems(directory: Path) -> Dict[str, Path]:
    if not directory.is_dir():
        raise FileNotFoundError(f"directory not found: {directory}")
    out: Dict[str, Path] = {}
    for entry in sorted(directory.iterdir()):
        if entry.is_file():
            out.setdefault(entry.stem, entry)
    return out


def _build(
    direction: str,
    src_dir: Path,
    bg_dir: Path,
    gt_dir: Path,
    exclude: Iterable[str] = (),
) -> BuildResult:
    src_origin, gt_origin, bg_kind = DIRECTION_TAGS[direction]
    src, bg, gt = _stems(Path(src_dir)), _stems(Path(bg_dir)), _stems(Path(gt_dir))
    excluded = set(exclude)
    common = (set(src) & set(bg) & set(gt)) - excluded
    unmatched = sorted((set(src) | set(bg) | set(gt)) - common - excluded)
    records = tuple(
        PairRecord(
            id=f"{direction}-{stem}",
            direction=direction,
            src_path=str(src[stem]),
            bg_path=str(bg[stem]),
            gt_path=str(gt[stem]),
            src_origin=src_origin,
            gt_origin=gt_origin,
            bg_kind=bg_kind,
        )
        for stem in sorted(common)
    )
    return BuildResult(records=records, unmatched=tuple(unmatched))


def build_forward(
    real_humans_dir: Union[str, Path],
    web_bg_dir: Union[str, Path],
    synthetic_gt_dir: Union[str, Path],
    exclude: Iterable[str] = (),
) -> BuildResult:
    """Forward path: real human source, web background, synthetic ground truth."""
    return _build(FORWARD, Path(real_humans_dir), Path(web_bg_dir), Path(synthetic_gt_dir), exclude)


def build_reverse(
    synthetic_src_dir: Union[str, Path],
    inpaint_bg_dir: Union[str, Path],
    real_gt_dir: Union[str, Path],
    exclude: Iterable[str] = (),
) -> BuildResult:
    """Reverse path: synthetic source, inpainted background, real ground truth."""
    return _build(REVERSE, Path(synthetic_src_dir), Path(inpaint_bg_dir), Path(real_gt_dir), exclude)


def validate(manifest: PairManifest, check_files: bool = True) -> List[Violation]:
    """Structural checks; every violation is reported, nothing raises."""
    violations: List[Violation] = []
    seen: Set[str] = set()
    for rec in manifest.records:
        if rec.id in seen:
            violations.append(Violation(rec.id, "duplicate-id", "id appears more than once"))
        seen.add(rec.id)

        expected = DIRECTION_TAGS.get(rec.direction)
        if expected is None:
            violations.append(Violation(rec.id, "bad-direction", f"unknown direction {rec.direction!r}"))
        else:
            src_origin, gt_origin, bg_kind = expected
            if rec.src_origin != src_origin:
                violations.append(
                    Violation(rec.id, "src-origin", f"{rec.direction} requires src_origin={src_origin}, got {rec.src_origin}")
                )
            if rec.gt_origin != gt_origin:
                violations.append(
                    Violation(rec.id, "gt-origin", f"{rec.direction} requires gt_origin={gt_origin}, got {rec.gt_origin}")
                )
            if rec.bg_kind != bg_kind:
                violations.append(
                    Violation(rec.id, "bg-kind", f"{rec.direction} requires bg_kind={bg_kind}, got {rec.bg_kind}")
                )

        paths = [rec.src_path, rec.bg_path, rec.gt_path]
        if len(set(paths)) != 3:
            violations.append(Violation(rec.id, "path-collision", "src/bg/gt paths must be distinct"))
        if check_files:
            for label, p in zip(("src", "bg", "gt"), paths):
                if not Path(p).is_file():
                    violations.append(Violation(rec.id, "missing-file", f"{label} path does not exist: {p}"))
    return violations


def write_manifest(manifest: PairManifest, path: Union[str, Path]) -> None:
    with open(path, "w") as fh:
        json.dump(manifest.to_dict(), fh, indent=2)
        fh.write("\n")


def read_manifest(path: Union[str, Path]) -> PairManifest:
    with open(path) as fh:
        doc = json.load(fh)
    records = [
        PairRecord(
            id=str(r["id"]),
            direction=str(r["direction"]),
            src_path=str(r["src"]),
            bg_path=str(r["bg"]),
            gt_path=str(r["gt"]),
            src_origin=str(r["src_origin"]),
            gt_origin=str(r["gt_origin"]),
            bg_kind=str(r["bg_kind"]),
        )
        for r in doc["records"]
    ]
    return PairManifest(records=records)
