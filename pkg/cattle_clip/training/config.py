from dataclasses import dataclass

from cattle_clip.errors import ConfigError


@dataclass(frozen=True)
class TrainConfig:
    """
    Optimiser and schedule settings for one supervised run.

    ``augment`` and ``prompt_remap`` are the ablation switches; with both off
    the run follows the plain fine-tuning path.
    """

    base_lr: float = 2e-3
    weight_decay: float = 1e-3
    warmup_epochs: int = 5
    total_epochs: int = 30
    batch_size: int = 8
    seed: int = 0
    augment: bool = True
    prompt_remap: bool = True
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8

    def __post_init__(self):
        if self.base_lr <= 0:
            raise ConfigError(f"training.base_lr must be positive, got {self.base_lr}")
        if self.weight_decay < 0:
            raise ConfigError(f"training.weight_decay must be >= 0, got {self.weight_decay}")
        if not 0 <= self.warmup_epochs < self.total_epochs:
            raise ConfigError(
                f"training.warmup_epochs ({self.warmup_epochs}) must lie in [0, total_epochs={self.total_epochs})"
            )
        if self.batch_size < 1:
            raise ConfigError(f"training.batch_size must be >= 1, got {self.batch_size}")
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))

    @property
    def ablation_row(self) -> str:
        if self.augment and self.prompt_remap:
            return "full"
        if self.augment:
            return "vanilla+aug"
        if self.prompt_remap:
            return "vanilla+text prompts"
        return "vanilla"
