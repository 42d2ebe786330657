from dataclasses import dataclass, field
from typing import Tuple

from cattle_clip.augmentation import AugConfig
from cattle_clip.errors import ConfigError
from cattle_clip.model.config import ModelConfig
from cattle_clip.model.head import ContrastiveConfig
from cattle_clip.text.config import TextConfig
from cattle_clip.training.config import TrainConfig

SHOTS = (16, 8, 4, 2)
STAGES = ("base", "final", "baseline")


@dataclass(frozen=True)
class FewShotConfig:
    """
    Protocol settings. The two learning rates are the stage-1 (base and
    baseline) and stage-2 (final) values; ``final_epochs_full`` applies to
    n = 16 and ``final_epochs_few`` to smaller n.
    """

    ns: Tuple[int, ...] = SHOTS
    seeds: Tuple[int, ...] = (0,)
    categories: Tuple[str, ...] = ()
    base_epochs: int = 30
    final_epochs_full: int = 30
    final_epochs_few: int = 100
    base_lr: float = 2.2e-5
    final_lr: float = 2.2e-4

    def __post_init__(self):
        object.__setattr__(self, "ns", tuple(int(n) for n in self.ns))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "categories", tuple(self.categories))
        bad = [n for n in self.ns if n not in SHOTS]
        if bad or not self.ns:
            raise ConfigError(f"fewshot.ns must be drawn from {SHOTS}, got {self.ns}")
        if not self.seeds:
            raise ConfigError("fewshot.seeds must not be empty")
        if min(self.base_epochs, self.final_epochs_full, self.final_epochs_few) < 1:
            raise ConfigError("few-shot epoch counts must be >= 1")
        if self.base_lr <= 0 or self.final_lr <= 0:
            raise ConfigError("few-shot learning rates must be positive")

    def final_epochs(self, n: int) -> int:
        return self.final_epochs_full if n == 16 else self.final_epochs_few


@dataclass(frozen=True)
class FewShotPlan:
    scarce_category: str
    n: int
    seed: int = 0
    base_epochs: int = 30
    final_epochs: int = 30
    base_lr_stage1: float = 2.2e-5
    base_lr_stage2: float = 2.2e-4

    def __post_init__(self):
        if self.n not in SHOTS:
            raise ConfigError(f"n must be one of {SHOTS}, got {self.n}")

    @classmethod
    def from_config(cls, scarce_category: str, n: int, seed: int, config: FewShotConfig) -> "FewShotPlan":
        return cls(
            scarce_category=scarce_category,
            n=n,
            seed=seed,
            base_epochs=config.base_epochs,
            final_epochs=config.final_epochs(n),
            base_lr_stage1=config.base_lr,
            base_lr_stage2=config.final_lr,
        )

    @property
    def cell(self) -> str:
        return f"{self.scarce_category}/seed{self.seed}/n{self.n}"


@dataclass(frozen=True)
class StageSettings:
    """Everything a stage needs besides the plan and the data"""

    model: ModelConfig = field(default_factory=ModelConfig)
    contrastive: ContrastiveConfig = field(default_factory=ContrastiveConfig)
    text: TextConfig = field(default_factory=TextConfig)
    aug: AugConfig = field(default_factory=AugConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval_seed: int = 0
    threshold: float = 0.17
