import math

from cattle_clip.errors import DataError
from cattle_clip.training.config import TrainConfig


def lr_at(epoch: int, config: TrainConfig) -> float:
    """
    Epoch-granular learning rate: linear warmup from base_lr / warmup_epochs,
    then cosine decay reaching exactly zero at ``total_epochs``.
    """
    if not 0 <= epoch <= config.total_epochs:
        raise DataError(f"epoch {epoch} outside [0, {config.total_epochs}]")
    if epoch < config.warmup_epochs:
        return config.base_lr * (epoch + 1) / config.warmup_epochs
    progress = (epoch - config.warmup_epochs) / (config.total_epochs - config.warmup_epochs)
    return config.base_lr * 0.5 * (1.0 + math.cos(math.pi * progress))
