from cattle_clip.data.manifest import (
    DEFAULT_CATEGORIES,
    ClipRecord,
    Manifest,
    load_manifest,
    manifest_digest,
    split_dataset,
    write_manifest,
)
from cattle_clip.data.sampling import ClipStore, FrameStack, derive_rng, sample_frames, sample_indices
from cattle_clip.data.synthetic import SynthConfig, archetype_statistics, generate_synthetic_dataset

__all__ = [
    "DEFAULT_CATEGORIES",
    "ClipRecord",
    "Manifest",
    "load_manifest",
    "manifest_digest",
    "split_dataset",
    "write_manifest",
    "ClipStore",
    "FrameStack",
    "derive_rng",
    "sample_frames",
    "sample_indices",
    "SynthConfig",
    "archetype_statistics",
    "generate_synthetic_dataset",
]
