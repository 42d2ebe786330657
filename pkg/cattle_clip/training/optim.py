"""AdamW with decoupled weight decay over the model's parameter groups."""

import torch

from cattle_clip.errors import DataError, NumericalError
from cattle_clip.model.clip import CattleClip
from cattle_clip.training.config import TrainConfig


def build_optimizer(model: CattleClip, config: TrainConfig) -> torch.optim.AdamW:
    return torch.optim.AdamW(
        model.parameter_groups(config.weight_decay),
        lr=config.base_lr,
        betas=config.betas,
        eps=config.eps,
    )


def optimizer_step(optimizer: torch.optim.Optimizer, lr: float) -> None:
    """
    Apply one update at ``lr``. Parameters without a gradient are treated as
    having a zero gradient, so decay still applies to them.

    Raises:
        DataError: a gradient whose shape differs from its parameter
        NumericalError: a non-finite gradient
    """
    for group in optimizer.param_groups:
        group["lr"] = lr
        for param in group["params"]:
            if param.grad is None:
                param.grad = torch.zeros_like(param)
            elif param.grad.shape != param.shape:
                raise DataError(f"gradient shape {tuple(param.grad.shape)} differs from parameter {tuple(param.shape)}")
            elif not torch.isfinite(param.grad).all():
                raise NumericalError(f"non-finite gradient for a parameter of shape {tuple(param.shape)}")
    optimizer.step()
