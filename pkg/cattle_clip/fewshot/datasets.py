"""Base, scarce, replay and combined training sets."""

import logging
from typing import Dict, List, Sequence

from cattle_clip.data.manifest import ClipRecord, Manifest
from cattle_clip.data.sampling import derive_rng
from cattle_clip.errors import DataError

logger = logging.getLogger(__name__)


def _check_category(manifest: Manifest, category: str) -> None:
    if category not in manifest.categories:
        raise DataError(f"unknown category {category!r}, expected one of {list(manifest.categories)}")


def build_base_dataset(manifest: Manifest, scarce_category: str) -> List[ClipRecord]:
    """Every training record not labelled ``scarce_category``"""
    _check_category(manifest, scarce_category)
    return [r for r in manifest.split("train") if r.label != scarce_category]


def base_categories(manifest: Manifest, scarce_category: str) -> List[str]:
    return [c for c in manifest.categories if c != scarce_category]


def _sample(records: Sequence[ClipRecord], n: int, rng, what: str) -> List[ClipRecord]:
    if len(records) < n:
        raise DataError(f"{what}: {len(records)} record(s) available, {n} requested")
    picks = sorted(int(i) for i in rng.choice(len(records), size=n, replace=False))
    return [records[i] for i in picks]


def sample_scarce(manifest: Manifest, scarce_category: str, n: int, seed: int) -> List[ClipRecord]:
    """
    ``n`` training records of the scarce category, uniformly without
    replacement. The draw depends only on (seed, category, n), so the final
    and baseline runs of a cell see the same records.
    """
    _check_category(manifest, scarce_category)
    pool = [r for r in manifest.split("train") if r.label == scarce_category]
    return _sample(pool, n, derive_rng(seed, "scarce", scarce_category, n), f"category {scarce_category!r}")


def build_replay_dataset(scarce: Sequence[ClipRecord], base: Sequence[ClipRecord], seed: int) -> List[ClipRecord]:
    """
    The scarce records plus ``n = len(scarce)`` records of every base
    category, giving exactly n per category.
    """
    n = len(scarce)
    if n < 1:
        raise DataError("the scarce set is empty")
    by_category: Dict[str, List[ClipRecord]] = {}
    for record in base:
        by_category.setdefault(record.label, []).append(record)
    replay: List[ClipRecord] = []
    for category, records in by_category.items():
        replay.extend(_sample(records, n, derive_rng(seed, "replay", category, n), f"base category {category!r}"))
    logger.info("Replay set: %d scarce + %d base records", n, len(replay))
    return list(scarce) + replay


def build_combined_dataset(scarce: Sequence[ClipRecord], base: Sequence[ClipRecord]) -> List[ClipRecord]:
    """The imbalanced single-stage set: all base records plus the scarce ones"""
    return list(base) + list(scarce)


def category_histogram(records: Sequence[ClipRecord]) -> Dict[str, int]:
    histogram: Dict[str, int] = {}
    for record in records:
        histogram[record.label] = histogram.get(record.label, 0) + 1
    return histogram
