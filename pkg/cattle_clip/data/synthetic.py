"""
Procedural behaviour clips for desk-scale runs.

Every category is a moving textured blob with its own texture, shape, intensity
and motion, so the categories stay separable under flips, jitter and grayscale.
"""

import asyncio
import io
import logging
import math
import os
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from cattle_clip.data.manifest import DEFAULT_CATEGORIES, ClipRecord, Manifest, write_manifest
from cattle_clip.data.sampling import derive_rng
from cattle_clip.errors import ConfigError, DataError
from cattle_clip.utils.file_manager import FileManager, write_atomic

logger = logging.getLogger(__name__)

# Minimum pairwise gap, in at least one archetype statistic, between category means.
GENERATOR_MARGIN = 0.01


@dataclass(frozen=True)
class Archetype:
    texture: str
    blob_size: Tuple[int, int]
    intensity: float
    motion_axis: str
    cycles: float
    amplitude: float


# One archetype per ethogram slot, in default category order.
ARCHETYPES: Tuple[Archetype, ...] = (
    Archetype("hstripes", (12, 14), 0.90, "x", 1.0, 4.0),
    Archetype("vstripes", (14, 10), 0.80, "y", 3.0, 3.0),
    Archetype("checker", (12, 12), 0.95, "xy", 2.0, 4.0),
    Archetype("solid", (14, 10), 0.70, "y", 5.0, 1.0),
    Archetype("dots", (8, 18), 1.00, "x", 2.0, 3.0),
    Archetype("solid", (8, 18), 0.60, "y", 5.0, 1.0),
)


@dataclass(frozen=True)
class SynthConfig:
    clips_per_category: int = 20
    frame_height: int = 24
    frame_width: int = 32
    num_frames: int = 20
    fps: float = 5.0
    noise: float = 0.03
    seed: int = 0

    def __post_init__(self):
        if self.clips_per_category < 1:
            raise ConfigError("synth.clips_per_category must be >= 1")
        if self.num_frames < 1:
            raise ConfigError("synth.num_frames must be >= 1")
        if self.fps <= 0:
            raise ConfigError("synth.fps must be positive")
        largest = max(max(a.blob_size) + 2 * a.amplitude for a in ARCHETYPES)
        if min(self.frame_height, self.frame_width) < largest:
            raise ConfigError(f"synth frames must be at least {largest:.0f} pixels on each side")


def _texture(kind: str, height: int, width: int) -> np.ndarray:
    yy, xx = np.mgrid[0:height, 0:width]
    if kind == "hstripes":
        return ((yy // 3) % 2 == 0).astype(np.float32)
    if kind == "vstripes":
        return ((xx // 3) % 2 == 0).astype(np.float32)
    if kind == "checker":
        return (((yy // 3) + (xx // 3)) % 2 == 0).astype(np.float32)
    if kind == "dots":
        return (((yy % 4) < 2) & ((xx % 4) < 2)).astype(np.float32)
    if kind == "solid":
        return np.ones((height, width), dtype=np.float32)
    raise ValueError(f"unknown texture {kind!r}")


def render_clip(archetype: Archetype, config: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    """Render one clip as uint8 frames (T x H x W x 3)"""
    H, W, T = config.frame_height, config.frame_width, config.num_frames
    bh, bw = archetype.blob_size
    texture = _texture(archetype.texture, bh, bw)
    intensity = archetype.intensity + rng.uniform(-0.05, 0.05)
    tint = 1.0 + rng.uniform(-0.1, 0.1, size=3)
    phase = rng.uniform(0.0, 2.0 * math.pi)
    cy0 = (H - bh) / 2.0 + rng.uniform(-1.5, 1.5)
    cx0 = (W - bw) / 2.0 + rng.uniform(-1.5, 1.5)
    clip = np.empty((T, H, W, 3), dtype=np.float32)
    for t in range(T):
        swing = archetype.amplitude * math.sin(2.0 * math.pi * archetype.cycles * t / T + phase)
        dy = swing if "y" in archetype.motion_axis else 0.0
        dx = swing if "x" in archetype.motion_axis else 0.0
        top = int(round(min(max(cy0 + dy, 0), H - bh)))
        left = int(round(min(max(cx0 + dx, 0), W - bw)))
        frame = 0.08 + config.noise * rng.standard_normal((H, W, 1)).astype(np.float32)
        frame = np.repeat(frame, 3, axis=2)
        block = intensity * texture[..., None] * tint[None, None, :]
        region = frame[top : top + bh, left : left + bw]
        frame[top : top + bh, left : left + bw] = np.maximum(region, block)
        clip[t] = frame
    return np.round(np.clip(clip, 0.0, 1.0) * 255.0).astype(np.uint8)


def archetype_statistics(frames: np.ndarray) -> np.ndarray:
    """
    Per-clip summary statistics used to check separability:
    mean intensity, mean |d/dx|, mean |d/dy| and mean |d/dt| of the luminance.
    """
    frames = frames.astype(np.float32)
    if frames.max() > 1.0:
        frames = frames / 255.0
    luma = frames.mean(axis=-1)
    dx = np.abs(np.diff(luma, axis=2)).mean()
    dy = np.abs(np.diff(luma, axis=1)).mean()
    dt = np.abs(np.diff(luma, axis=0)).mean() if luma.shape[0] > 1 else 0.0
    return np.array([luma.mean(), dx, dy, dt], dtype=np.float64)


def _encode_npy(array: np.ndarray) -> bytes:
    buffer = io.BytesIO()
    np.save(buffer, array, allow_pickle=False)
    return buffer.getvalue()


class SyntheticDatasetWriter(FileManager):
    """Writes procedural clips and their manifest into an output directory"""

    def __init__(self, output_files_path: str, config: SynthConfig, categories: Sequence[str] = DEFAULT_CATEGORIES):
        super().__init__("", output_files_path)
        if not 1 <= len(categories) <= len(ARCHETYPES):
            raise ConfigError(f"synthetic data supports 1..{len(ARCHETYPES)} categories, got {len(categories)}")
        self.config = config
        self.categories = tuple(categories)

    async def _write_single_clip(self, category_index: int, clip_index: int) -> ClipRecord:
        category = self.categories[category_index]
        clip_id = f"{category}_{clip_index:03d}"
        relative = os.path.join("clips", category, f"{clip_id}.npy")
        target = self.output_path(relative)
        rng = derive_rng(self.config.seed, category_index, clip_index)
        frames = render_clip(ARCHETYPES[category_index], self.config, rng)
        loop = asyncio.get_running_loop()
        await loop.run_in_executor(None, write_atomic, target, _encode_npy(frames))
        return ClipRecord(
            clip_id=clip_id,
            frame_source=relative,
            label=category,
            num_frames=self.config.num_frames,
            fps=self.config.fps,
            camera_id="synthetic",
        )

    async def write_all(self) -> Manifest:
        await self.ensure_output_directory()
        for category in self.categories:
            try:
                os.makedirs(self.output_path(os.path.join("clips", category)), exist_ok=True)
            except OSError as exc:
                raise DataError(f"Cannot create clip directory under {self.output_files_path}: {exc}") from exc
        tasks = [
            self._write_single_clip(c, i)
            for c in range(len(self.categories))
            for i in range(self.config.clips_per_category)
        ]
        logger.info("Writing %d synthetic clips to %s", len(tasks), self.output_files_path)
        records = await asyncio.gather(*tasks)
        manifest = Manifest(records=tuple(records), categories=self.categories)
        await write_manifest(manifest, self.output_files_path)
        return manifest


async def generate_synthetic_dataset(
    config: SynthConfig, output_dir: str, categories: Sequence[str] = DEFAULT_CATEGORIES
) -> Manifest:
    """
    Write a deterministic synthetic dataset.

    Args:
        config: Generator settings, including the seed
        output_dir: Directory receiving clips/ and manifest.jsonl
        categories: Category names, one archetype each

    Returns:
        The manifest that was written
    """
    return await SyntheticDatasetWriter(output_dir, config, categories).write_all()


def category_statistics(frames_by_category: Dict[str, List[np.ndarray]]) -> Dict[str, np.ndarray]:
    """Mean archetype statistics per category"""
    return {
        category: np.mean([archetype_statistics(f) for f in clips], axis=0)
        for category, clips in frames_by_category.items()
    }
