"""
Self-describing training checkpoints.

An archive holds the format version, the model and contrastive settings, the
category order, the parameter store, optional optimiser state, the next epoch
to run and the history so far. Archives are written atomically.
"""

import io
import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import torch

from cattle_clip.errors import CheckpointError
from cattle_clip.model.clip import CattleClip
from cattle_clip.model.config import ModelConfig
from cattle_clip.model.head import ContrastiveConfig
from cattle_clip.utils.file_manager import write_atomic

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    model_config: Dict[str, Any]
    contrastive: Dict[str, Any]
    categories: List[str]
    state_dict: Dict[str, torch.Tensor]
    epoch: int = 0
    optimizer: Optional[Dict[str, Any]] = None
    history: List[Dict[str, Any]] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def build_model(self) -> CattleClip:
        model = CattleClip(ModelConfig(**self.model_config), ContrastiveConfig(**self.contrastive))
        restore_model(model, self.state_dict)
        return model


def _contrastive_dict(config: ContrastiveConfig) -> Dict[str, Any]:
    data = asdict(config)
    data["category_order"] = list(config.category_order)
    return data


def save_checkpoint(
    path: str,
    model: CattleClip,
    categories: List[str],
    optimizer: Optional[torch.optim.Optimizer] = None,
    epoch: int = 0,
    history: Optional[List[Dict[str, Any]]] = None,
    metadata: Optional[Dict[str, Any]] = None,
) -> Checkpoint:
    checkpoint = Checkpoint(
        model_config=model.config.to_dict(),
        contrastive=_contrastive_dict(model.contrastive),
        categories=list(categories),
        state_dict={k: v.detach().clone() for k, v in model.state_dict().items()},
        epoch=epoch,
        optimizer=optimizer.state_dict() if optimizer is not None else None,
        history=list(history or []),
        metadata=dict(metadata or {}),
    )
    buffer = io.BytesIO()
    torch.save(asdict(checkpoint), buffer)
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    write_atomic(path, buffer.getvalue())
    logger.info("Saved checkpoint at epoch %d to %s", epoch, path)
    return checkpoint


def load_checkpoint(path: str) -> Checkpoint:
    if not os.path.isfile(path):
        raise FileNotFoundError(f"Checkpoint {path} not found")
    try:
        data = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise CheckpointError(f"unreadable checkpoint {path}: {exc}") from exc
    if not isinstance(data, dict) or "format_version" not in data:
        raise CheckpointError(f"{path} is not a cattle-clip checkpoint")
    if data["format_version"] != FORMAT_VERSION:
        raise CheckpointError(f"{path}: format version {data['format_version']}, expected {FORMAT_VERSION}")
    try:
        return Checkpoint(**data)
    except TypeError as exc:
        raise CheckpointError(f"{path}: malformed checkpoint ({exc})") from exc


def restore_model(model: CattleClip, state_dict: Dict[str, torch.Tensor]) -> None:
    """
    Load a parameter store, requiring identical names and shapes.

    Raises:
        CheckpointError: listing every missing, unexpected and mis-shaped entry
    """
    current = model.state_dict()
    problems = [f"missing {name}" for name in current if name not in state_dict]
    problems += [f"unexpected {name}" for name in state_dict if name not in current]
    problems += [
        f"{name}: model {tuple(current[name].shape)} vs checkpoint {tuple(state_dict[name].shape)}"
        for name in current
        if name in state_dict and current[name].shape != state_dict[name].shape
    ]
    if problems:
        raise CheckpointError("checkpoint does not match the model:\n  " + "\n  ".join(problems))
    model.load_state_dict(state_dict, strict=True)
