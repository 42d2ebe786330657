"""Dual-encoder video behaviour classification for cattle."""

from cattle_clip.config import GlobalConfig, load_config
from cattle_clip.data import ClipRecord, ClipStore, Manifest, load_manifest, split_dataset
from cattle_clip.errors import CattleClipError, CheckpointError, ConfigError, DataError, NumericalError
from cattle_clip.model import CattleClip, ContrastiveConfig, ModelConfig

__version__ = "0.1.0"

__all__ = [
    "GlobalConfig",
    "load_config",
    "ClipRecord",
    "ClipStore",
    "Manifest",
    "load_manifest",
    "split_dataset",
    "CattleClipError",
    "CheckpointError",
    "ConfigError",
    "DataError",
    "NumericalError",
    "CattleClip",
    "ContrastiveConfig",
    "ModelConfig",
]
