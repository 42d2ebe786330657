from cattle_clip.training.checkpoint import Checkpoint, load_checkpoint, restore_model, save_checkpoint
from cattle_clip.training.config import TrainConfig
from cattle_clip.training.gradcheck import CHECKED_PARAMETERS, GradCheckEntry, grad_check
from cattle_clip.training.optim import build_optimizer, optimizer_step
from cattle_clip.training.schedule import lr_at
from cattle_clip.training.trainer import (
    EpochRecord,
    Trainer,
    TrainHistory,
    evaluate_clips,
    evaluate_report,
    resolve_aug,
    train_supervised,
)

__all__ = [
    "Checkpoint",
    "load_checkpoint",
    "restore_model",
    "save_checkpoint",
    "TrainConfig",
    "CHECKED_PARAMETERS",
    "GradCheckEntry",
    "grad_check",
    "build_optimizer",
    "optimizer_step",
    "lr_at",
    "EpochRecord",
    "Trainer",
    "TrainHistory",
    "evaluate_clips",
    "evaluate_report",
    "resolve_aug",
    "train_supervised",
]
