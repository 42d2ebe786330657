"""Frame sources, per-epoch K-frame sampling and the in-memory clip store."""

import asyncio
import logging
import os
import zlib
from dataclasses import dataclass
from typing import Dict, Iterable, Sequence, Union

import numpy as np
from PIL import Image

from cattle_clip.data.manifest import ClipRecord
from cattle_clip.errors import DataError
from cattle_clip.utils.file_manager import FileManager

logger = logging.getLogger(__name__)

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")


@dataclass(frozen=True)
class FrameStack:
    """K sampled frames (K x H x W x 3, float32 in [0, 1])"""

    frames: np.ndarray
    source_indices: np.ndarray

    def __post_init__(self):
        if self.frames.ndim != 4 or self.frames.shape[-1] != 3:
            raise DataError(f"frame stack must be K x H x W x 3, got shape {self.frames.shape}")
        if len(self.source_indices) != self.frames.shape[0]:
            raise DataError("one source index is required per frame")

    @property
    def K(self) -> int:
        return self.frames.shape[0]


def derive_rng(seed: int, *keys: Union[int, str]) -> np.random.Generator:
    """Independent generator for (seed, keys...); string keys are hashed with crc32"""
    entropy = [int(seed)]
    for key in keys:
        entropy.append(zlib.crc32(key.encode("utf-8")) if isinstance(key, str) else int(key))
    return np.random.default_rng(entropy)


def sample_indices(num_frames: int, K: int, rng: np.random.Generator) -> np.ndarray:
    """
    Pick K frame indices in ascending order.

    Clips with at least K frames give K distinct indices drawn uniformly without
    replacement. Shorter clips cycle through all frames until K indices exist.
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if num_frames < 1:
        raise ValueError(f"num_frames must be >= 1, got {num_frames}")
    if num_frames >= K:
        picked = rng.choice(num_frames, size=K, replace=False)
    else:
        picked = np.resize(np.arange(num_frames), K)
    return np.sort(picked).astype(np.int64)


def sample_frames(clip: ClipRecord, frames: np.ndarray, K: int, rng: np.random.Generator) -> FrameStack:
    """
    Sample K frames of a loaded clip.

    Args:
        clip: Record describing the clip
        frames: All decoded frames of the clip (T x H x W x 3)
        K: Number of frames to keep
        rng: Generator for this clip and epoch
    """
    if frames.shape[0] < clip.num_frames:
        raise DataError(f"clip {clip.clip_id}: {frames.shape[0]} frames readable, manifest says {clip.num_frames}")
    indices = sample_indices(clip.num_frames, K, rng)
    return FrameStack(frames=frames[indices], source_indices=indices)


def _to_unit_range(array: np.ndarray, source: str) -> np.ndarray:
    if array.dtype == np.uint8:
        return array.astype(np.float32) / 255.0
    array = array.astype(np.float32)
    if array.size and (array.min() < 0.0 or array.max() > 1.0):
        raise DataError(f"{source}: float frames must lie in [0, 1]")
    return array


def read_frame_archive(path: str) -> np.ndarray:
    """Read a T x H x W x 3 .npy archive"""
    try:
        array = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise DataError(f"unreadable frame archive {path}: {exc}") from exc
    if array.ndim != 4 or array.shape[-1] != 3:
        raise DataError(f"{path}: expected T x H x W x 3 frames, got shape {array.shape}")
    return _to_unit_range(array, path)


def read_frame_images(paths: Sequence[str]) -> np.ndarray:
    """Read per-frame image files into one T x H x W x 3 array"""
    frames = []
    for path in paths:
        try:
            with Image.open(path) as image:
                frames.append(np.asarray(image.convert("RGB"), dtype=np.uint8))
        except OSError as exc:
            raise DataError(f"unreadable frame image {path}: {exc}") from exc
    if not frames:
        raise DataError("frame directory holds no images")
    if len({f.shape for f in frames}) != 1:
        raise DataError(f"frames of {os.path.dirname(paths[0])} differ in size")
    return _to_unit_range(np.stack(frames), os.path.dirname(paths[0]))


class ClipStore(FileManager):
    """
    Holds decoded frames for a set of clips. Frame sources are resolved
    relative to the manifest directory when they are not absolute.
    """

    def __init__(self, root: str = ""):
        super().__init__(root)
        self._frames: Dict[str, np.ndarray] = {}

    def resolve(self, frame_source: str) -> str:
        if os.path.isabs(frame_source) or not self.input_files_path:
            return frame_source
        return os.path.join(self.input_files_path, frame_source)

    async def _load_single_clip(self, record: ClipRecord) -> None:
        """Decode one clip's frames in a worker thread"""
        source = self.resolve(record.frame_source)
        loop = asyncio.get_running_loop()
        if os.path.isdir(source):
            paths = []
            for ext in IMAGE_EXTENSIONS:
                paths.extend(await FileManager(source).load_multiple_files(ext))
            frames = await loop.run_in_executor(None, read_frame_images, sorted(paths))
        elif os.path.isfile(source):
            frames = await loop.run_in_executor(None, read_frame_archive, source)
        else:
            raise DataError(f"clip {record.clip_id}: frame source {source} not found")
        if frames.shape[0] < record.num_frames:
            raise DataError(
                f"clip {record.clip_id}: {frames.shape[0]} frames readable, manifest says {record.num_frames}"
            )
        self._frames[record.clip_id] = frames

    async def load(self, records: Iterable[ClipRecord]) -> "ClipStore":
        """
        Load every clip not yet in the store.

        Clips are decoded concurrently; the store content does not depend on
        completion order.
        """
        pending = [r for r in records if r.clip_id not in self._frames]
        if not pending:
            return self
        logger.info("Found %d clips to load", len(pending))
        await asyncio.gather(*(self._load_single_clip(r) for r in pending))
        return self

    def frames(self, clip_id: str) -> np.ndarray:
        try:
            return self._frames[clip_id]
        except KeyError:
            raise DataError(f"clip {clip_id} has not been loaded") from None

    def sample(self, record: ClipRecord, K: int, rng: np.random.Generator) -> FrameStack:
        return sample_frames(record, self.frames(record.clip_id), K, rng)

    def __contains__(self, clip_id: str) -> bool:
        return clip_id in self._frames

    def __len__(self) -> int:
        return len(self._frames)
