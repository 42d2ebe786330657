"""
Fill-then-resize preprocessing and clip-consistent train augmentations.

Frames are never cropped: ``fill_to_aspect`` pads to the target aspect ratio and
``resize`` rescales. Bilinear resampling uses corner alignment, so the four
corner pixels of the output equal the four corner pixels of the input.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn.functional as F
import torchvision.transforms.functional as TF

from cattle_clip.data.sampling import FrameStack
from cattle_clip.errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AugConfig:
    """
    Augmentation settings. ``target_size`` of None means the model's image size.
    ``enabled=False`` leaves only fill + resize.
    """

    target_size: Optional[Tuple[int, int]] = None
    fill_value: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    flip_prob: float = 0.5
    jitter_strength: Tuple[float, float, float] = (0.2, 0.2, 0.2)
    grayscale_prob: float = 0.2
    enabled: bool = True

    def __post_init__(self):
        for name in ("flip_prob", "grayscale_prob"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"augmentation.{name} must lie in [0, 1], got {value}")
        if len(self.fill_value) != 3 or any(not 0.0 <= v <= 1.0 for v in self.fill_value):
            raise ConfigError(f"augmentation.fill_value must be three values in [0, 1], got {self.fill_value}")
        if len(self.jitter_strength) != 3 or any(s < 0 for s in self.jitter_strength):
            raise ConfigError(f"augmentation.jitter_strength must be three non-negative values")
        if self.target_size is not None:
            if len(self.target_size) != 2 or min(self.target_size) < 1:
                raise ConfigError(f"augmentation.target_size must be (H, W) >= 1, got {self.target_size}")
            object.__setattr__(self, "target_size", tuple(int(v) for v in self.target_size))

    @property
    def target_aspect(self) -> Fraction:
        """Width / height of the target frame"""
        if self.target_size is None:
            raise ConfigError("augmentation.target_size has not been resolved")
        height, width = self.target_size
        return Fraction(width, height)


def fill_geometry(height: int, width: int, target_aspect: Fraction) -> Tuple[int, int, int, int]:
    """
    Smallest padded size with exactly ``target_aspect`` (width / height) that
    contains the frame, and the offset of the original block inside it.

    Only the short axis grows whenever the aspect is reachable that way in
    whole pixels (always for 1:1). Otherwise both axes grow to the smallest
    common multiple of the aspect terms.

    Returns:
        (padded height, padded width, top offset, left offset)
    """
    if height < 1 or width < 1:
        raise ValueError(f"frame must be at least 1 x 1, got {height} x {width}")
    aspect = Fraction(target_aspect)
    if aspect <= 0:
        raise ValueError(f"target aspect must be positive, got {aspect}")
    p, q = aspect.numerator, aspect.denominator
    k = max(math.ceil(height / q), math.ceil(width / p))
    new_h, new_w = k * q, k * p
    # odd remainders put the extra pixel bottom / right
    return new_h, new_w, (new_h - height) // 2, (new_w - width) // 2


def fill_to_aspect(frame: np.ndarray, target_aspect: Fraction, fill_value: Sequence[float] = (0.0, 0.0, 0.0)) -> np.ndarray:
    """Pad a H x W x 3 frame to ``target_aspect`` with a constant colour"""
    height, width = frame.shape[:2]
    new_h, new_w, top, left = fill_geometry(height, width, target_aspect)
    if (new_h, new_w) == (height, width):
        return frame.copy()
    padded = np.empty((new_h, new_w, frame.shape[2]), dtype=frame.dtype)
    padded[...] = np.asarray(fill_value, dtype=frame.dtype)
    padded[top : top + height, left : left + width] = frame
    return padded


def resize(frame: np.ndarray, target_size: Tuple[int, int]) -> np.ndarray:
    """
    Bilinear resize of a H x W x 3 frame, or a K x H x W x 3 stack, with corner
    alignment. Output values are clamped to [0, 1].
    """
    single = frame.ndim == 3
    stack = frame[None] if single else frame
    if tuple(stack.shape[1:3]) == tuple(target_size):
        out = np.clip(stack, 0.0, 1.0).astype(np.float32)
    else:
        tensor = torch.from_numpy(np.ascontiguousarray(stack, dtype=np.float32)).permute(0, 3, 1, 2)
        tensor = F.interpolate(tensor, size=tuple(target_size), mode="bilinear", align_corners=True)
        out = tensor.clamp_(0.0, 1.0).permute(0, 2, 3, 1).contiguous().numpy()
    return out[0] if single else out


def preprocess_stack(stack: FrameStack, config: AugConfig) -> FrameStack:
    """Eval-time pipeline: fill + resize only"""
    frames = np.stack([fill_to_aspect(f, config.target_aspect, config.fill_value) for f in stack.frames])
    return FrameStack(frames=resize(frames, config.target_size), source_indices=stack.source_indices)


@dataclass(frozen=True)
class ClipTransform:
    """Random parameters drawn once per clip"""

    flip: bool
    brightness: float
    contrast: float
    saturation: float
    grayscale: bool


def draw_clip_transform(config: AugConfig, rng: np.random.Generator) -> ClipTransform:
    # every draw happens regardless of the outcome so the stream stays aligned
    flip = bool(rng.random() < config.flip_prob)
    factors = [float(rng.uniform(max(0.0, 1.0 - s), 1.0 + s)) for s in config.jitter_strength]
    grayscale = bool(rng.random() < config.grayscale_prob)
    return ClipTransform(flip, factors[0], factors[1], factors[2], grayscale)


def apply_clip_transform(frames: np.ndarray, transform: ClipTransform) -> np.ndarray:
    """Apply one set of parameters to every frame of a K x H x W x 3 stack"""
    tensor = torch.from_numpy(np.ascontiguousarray(frames, dtype=np.float32)).permute(0, 3, 1, 2)
    if transform.flip:
        tensor = TF.hflip(tensor)
    if transform.brightness != 1.0:
        tensor = TF.adjust_brightness(tensor, transform.brightness)
    if transform.contrast != 1.0:
        tensor = TF.adjust_contrast(tensor, transform.contrast)
    if transform.saturation != 1.0:
        tensor = TF.adjust_saturation(tensor, transform.saturation)
    if transform.grayscale:
        tensor = TF.rgb_to_grayscale(tensor, num_output_channels=3).contiguous()
    return tensor.clamp_(0.0, 1.0).permute(0, 2, 3, 1).contiguous().numpy()


def apply_train_augs(stack: FrameStack, config: AugConfig, rng: np.random.Generator) -> FrameStack:
    """
    Train-time pipeline: fill + resize, then flip / colour jitter / grayscale
    with a single random draw shared by all K frames.
    """
    prepared = preprocess_stack(stack, config)
    if not config.enabled:
        return prepared
    transform = draw_clip_transform(config, rng)
    return FrameStack(frames=apply_clip_transform(prepared.frames, transform), source_indices=stack.source_indices)
