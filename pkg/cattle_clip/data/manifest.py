"""Clip manifests: one JSON object per line, optional category header first."""

import hashlib
import json
import logging
import math
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from cattle_clip.errors import DataError
from cattle_clip.utils.file_manager import FileManager

logger = logging.getLogger(__name__)

DEFAULT_CATEGORIES: Tuple[str, ...] = (
    "feeding",
    "drinking",
    "standing-self-grooming",
    "standing-ruminating",
    "lying-self-grooming",
    "lying-ruminating",
)
SPLITS = ("train", "val", "test")

_REQUIRED_KEYS = ("clip_id", "frame_source", "label", "num_frames", "fps")
_OPTIONAL_KEYS = ("camera_id", "split")


@dataclass(frozen=True)
class ClipRecord:
    """One labelled clip on disk"""

    clip_id: str
    frame_source: str
    label: str
    num_frames: int
    fps: float
    camera_id: Optional[str] = None
    split: Optional[str] = None

    def __post_init__(self):
        if not self.clip_id:
            raise DataError("clip_id must be non-empty")
        if not isinstance(self.num_frames, int) or isinstance(self.num_frames, bool) or self.num_frames < 1:
            raise DataError(f"clip {self.clip_id}: num_frames must be a positive integer, got {self.num_frames!r}")
        if not isinstance(self.fps, (int, float)) or self.fps <= 0:
            raise DataError(f"clip {self.clip_id}: fps must be positive, got {self.fps!r}")
        if self.split is not None and self.split not in SPLITS:
            raise DataError(f"clip {self.clip_id}: unknown split {self.split!r}")

    def to_dict(self) -> Dict[str, Any]:
        row = {
            "clip_id": self.clip_id,
            "frame_source": self.frame_source,
            "label": self.label,
            "num_frames": self.num_frames,
            "fps": self.fps,
        }
        if self.camera_id is not None:
            row["camera_id"] = self.camera_id
        if self.split is not None:
            row["split"] = self.split
        return row


@dataclass(frozen=True)
class Manifest:
    """Ordered clip records plus the category vocabulary"""

    records: Tuple[ClipRecord, ...] = ()
    categories: Tuple[str, ...] = DEFAULT_CATEGORIES

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "categories", tuple(self.categories))
        if len(set(self.categories)) != len(self.categories):
            raise DataError(f"duplicate category names in {list(self.categories)}")
        seen = set()
        for record in self.records:
            if record.clip_id in seen:
                raise DataError(f"duplicate clip_id {record.clip_id!r}")
            seen.add(record.clip_id)
            if record.label not in self.categories:
                raise DataError(f"clip {record.clip_id}: unknown label {record.label!r}")

    def __len__(self) -> int:
        return len(self.records)

    def split(self, name: str) -> List[ClipRecord]:
        return [r for r in self.records if r.split == name]

    def label_index(self, label: str) -> int:
        return self.categories.index(label)

    @property
    def is_split(self) -> bool:
        return bool(self.records) and all(r.split is not None for r in self.records)

    def with_records(self, records: Sequence[ClipRecord]) -> "Manifest":
        return Manifest(records=tuple(records), categories=self.categories)

    def to_lines(self) -> List[Dict[str, Any]]:
        return [{"categories": list(self.categories)}] + [r.to_dict() for r in self.records]


def _parse_record(obj: Dict[str, Any], where: str) -> ClipRecord:
    missing = [k for k in _REQUIRED_KEYS if k not in obj]
    if missing:
        raise DataError(f"{where}: missing key(s) {missing}")
    unknown = sorted(set(obj) - set(_REQUIRED_KEYS) - set(_OPTIONAL_KEYS))
    if unknown:
        raise DataError(f"{where}: unknown key(s) {unknown}")
    try:
        return ClipRecord(
            clip_id=str(obj["clip_id"]),
            frame_source=str(obj["frame_source"]),
            label=str(obj["label"]),
            num_frames=obj["num_frames"],
            fps=obj["fps"],
            camera_id=obj.get("camera_id"),
            split=obj.get("split"),
        )
    except DataError as exc:
        raise DataError(f"{where}: {exc}") from exc


async def load_manifest(path: str) -> Manifest:
    """
    Load a manifest file.

    Args:
        path: JSON-lines manifest; the first line may be a {"categories": [...]} header

    Returns:
        Manifest with records in file order
    """
    rows = await FileManager(path).read_jsonl()
    categories = DEFAULT_CATEGORIES
    records: List[ClipRecord] = []
    seen: Dict[str, int] = {}
    for position, (line_no, obj) in enumerate(rows):
        where = f"{path}:{line_no}"
        if "categories" in obj:
            if position != 0:
                raise DataError(f"{where}: category header must be the first record")
            if set(obj) != {"categories"} or not obj["categories"]:
                raise DataError(f"{where}: malformed category header")
            categories = tuple(str(c) for c in obj["categories"])
            continue
        record = _parse_record(obj, where)
        if record.clip_id in seen:
            raise DataError(f"{where}: duplicate clip_id {record.clip_id!r} (first seen on line {seen[record.clip_id]})")
        if record.label not in categories:
            raise DataError(f"{where}: unknown label {record.label!r}")
        seen[record.clip_id] = line_no
        records.append(record)
    logger.info("Loaded %d clips from %s", len(records), path)
    return Manifest(records=tuple(records), categories=categories)


async def write_manifest(manifest: Manifest, output_dir: str, name: str = "manifest.jsonl") -> str:
    """Write the manifest, header first, atomically"""
    target = await FileManager("", output_dir).write_jsonl(name, manifest.to_lines())
    logger.info("Wrote manifest of %d clips to %s", len(manifest), target)
    return target


def split_sizes(total: int, ratios: Sequence[float]) -> Tuple[int, int, int]:
    """Floor each share; the remainder goes to train"""
    val = math.floor(total * ratios[1])
    test = math.floor(total * ratios[2])
    return total - val - test, val, test


def split_dataset(manifest: Manifest, ratios: Sequence[float] = (0.6, 0.2, 0.2), seed: int = 0) -> Manifest:
    """
    Shuffle records by seed and partition them into train/val/test.

    The partition ignores labels, so categories are not stratified.
    """
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise DataError(f"split ratios must be three non-negative values summing to 1, got {tuple(ratios)}")
    assigned = [r.clip_id for r in manifest.records if r.split is not None]
    if assigned:
        raise DataError(f"{len(assigned)} record(s) already carry a split, e.g. {assigned[0]!r}")
    n_train, n_val, _ = split_sizes(len(manifest), ratios)
    order = np.random.default_rng(seed).permutation(len(manifest))
    split_of = {}
    for rank, index in enumerate(order):
        if rank < n_train:
            split_of[int(index)] = "train"
        elif rank < n_train + n_val:
            split_of[int(index)] = "val"
        else:
            split_of[int(index)] = "test"
    records = [replace(r, split=split_of[i]) for i, r in enumerate(manifest.records)]
    logger.info(
        "Split %d clips into %d train / %d val / %d test (seed %d)",
        len(records),
        n_train,
        n_val,
        len(records) - n_train - n_val,
        seed,
    )
    return manifest.with_records(records)


def manifest_digest(manifest: Manifest) -> str:
    """Stable content hash used for report provenance"""
    payload = json.dumps(manifest.to_lines(), sort_keys=True).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()[:16]
