from dataclasses import asdict, dataclass, replace
from typing import Any, Dict, Optional, Tuple

import torch

from cattle_clip.errors import ConfigError

_DTYPES = {"float32": torch.float32, "float64": torch.float64}


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters shared by the image and text towers"""

    image_layers: int = 2
    text_layers: int = 2
    hidden_dim: int = 32
    heads: int = 4
    patch_size: int = 4
    image_size: Tuple[int, int] = (16, 16)
    projection_dim: int = 16
    vocab_size: int = 256
    max_tokens: int = 77
    frames: int = 4
    mlp_ratio: float = 4.0
    dropout: float = 0.0
    init_std: float = 0.02
    dtype: str = "float32"
    init_weights: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "image_size", tuple(int(v) for v in self.image_size))
        H, W = self.image_size
        if H % self.patch_size or W % self.patch_size:
            raise ConfigError(f"image size {H}x{W} is not divisible by patch size {self.patch_size}")
        if self.projection_dim > self.hidden_dim:
            raise ConfigError(f"projection_dim {self.projection_dim} exceeds hidden_dim {self.hidden_dim}")
        if self.hidden_dim % self.heads:
            raise ConfigError(f"hidden_dim {self.hidden_dim} is not divisible by {self.heads} heads")
        if min(self.image_layers, self.text_layers, self.frames, self.max_tokens, self.vocab_size) < 1:
            raise ConfigError("layer counts, frames, max_tokens and vocab_size must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.dtype not in _DTYPES:
            raise ConfigError(f"dtype must be one of {sorted(_DTYPES)}, got {self.dtype!r}")

    @property
    def num_patches(self) -> int:
        H, W = self.image_size
        return (H // self.patch_size) * (W // self.patch_size)

    @property
    def patch_dim(self) -> int:
        return 3 * self.patch_size**2

    @property
    def mlp_dim(self) -> int:
        return int(round(self.mlp_ratio * self.hidden_dim))

    @property
    def torch_dtype(self) -> torch.dtype:
        return _DTYPES[self.dtype]

    @classmethod
    def preset(cls, name: str, **overrides: Any) -> "ModelConfig":
        try:
            base = PRESETS[name]
        except KeyError:
            raise ConfigError(f"unknown model preset {name!r}, choose from {sorted(PRESETS)}") from None
        return replace(base, **overrides) if overrides else base

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["image_size"] = list(self.image_size)
        return data


PRESETS = {
    "desk": ModelConfig(),
    "vitb16": ModelConfig(
        image_layers=12,
        text_layers=12,
        hidden_dim=768,
        heads=12,
        patch_size=16,
        image_size=(224, 224),
        projection_dim=512,
        vocab_size=49408,
        frames=8,
    ),
}
