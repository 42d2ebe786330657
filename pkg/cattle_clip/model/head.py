"""Cosine-similarity logits, the temperature-scaled cross-entropy, prediction."""

import math
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np
import torch
import torch.nn.functional as F

from cattle_clip.errors import ConfigError, DataError, NumericalError

ArrayLike = Union[np.ndarray, torch.Tensor, Sequence[float]]
TEMPERATURE_MODES = ("fixed", "learnable-log")


@dataclass(frozen=True)
class ContrastiveConfig:
    """
    Temperature settings. An empty ``category_order`` means the manifest's
    category order defines the logit columns.
    """

    temperature_mode: str = "learnable-log"
    tau_init: float = 0.07
    tau_min: float = 0.01
    category_order: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.temperature_mode not in TEMPERATURE_MODES:
            raise ConfigError(f"temperature_mode must be one of {TEMPERATURE_MODES}, got {self.temperature_mode!r}")
        if self.tau_init <= 0 or self.tau_min <= 0:
            raise ConfigError("tau_init and tau_min must be positive")
        if self.tau_init < self.tau_min:
            raise ConfigError(f"tau_init {self.tau_init} is below tau_min {self.tau_min}")
        object.__setattr__(self, "category_order", tuple(self.category_order))

    @property
    def log_tau_init(self) -> float:
        return math.log(self.tau_init)


def _as_double(x: ArrayLike) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x.to(torch.float64)
    return torch.as_tensor(np.asarray(x, dtype=np.float64))


def _normalize(x: torch.Tensor, name: str) -> torch.Tensor:
    norms = x.norm(dim=-1, keepdim=True)
    if (norms == 0).any():
        raise NumericalError(f"cosine similarity is undefined: {name} has zero norm")
    return x / norms


def cosine_similarity(a: ArrayLike, b: ArrayLike) -> float:
    """a.b / (|a| |b|) in double precision"""
    a, b = _as_double(a), _as_double(b)
    return float((_normalize(a, "a") * _normalize(b, "b")).sum())


def _tau(tau: Union[float, torch.Tensor]) -> torch.Tensor:
    tau = _as_double(tau) if isinstance(tau, torch.Tensor) else torch.tensor(float(tau), dtype=torch.float64)
    if not bool(tau > 0):
        raise NumericalError(f"temperature must be positive, got {float(tau)}")
    return tau


def class_logits(v: ArrayLike, text_embs: ArrayLike, tau: Union[float, torch.Tensor]) -> torch.Tensor:
    """
    cos(v, t_c) / tau for every category c.

    Args:
        v: D or B x D video embeddings
        text_embs: C x D category text embeddings, in category order
        tau: temperature
    """
    v = _normalize(_as_double(v), "video embedding")
    t = _normalize(_as_double(text_embs), "text embedding")
    return (v @ t.transpose(0, 1)) / _tau(tau)


def contrastive_ce_loss(
    video_embs: ArrayLike,
    labels: ArrayLike,
    text_embs: ArrayLike,
    tau: Union[float, torch.Tensor],
) -> torch.Tensor:
    """Mean over the batch of -log softmax(logits)[label] over every category prompt"""
    logits = class_logits(video_embs, text_embs, tau)
    if logits.ndim != 2 or logits.shape[0] < 1:
        raise DataError("contrastive loss needs a batch of at least one embedding")
    labels = torch.as_tensor(labels, dtype=torch.long)
    if labels.shape != (logits.shape[0],):
        raise DataError(f"expected {logits.shape[0]} labels, got shape {tuple(labels.shape)}")
    if labels.min() < 0 or labels.max() >= logits.shape[1]:
        raise DataError(f"labels must index one of {logits.shape[1]} categories")
    # cross_entropy evaluates log-sum-exp in max-shifted form
    per_sample = F.cross_entropy(logits, labels, reduction="none")
    finite = torch.isfinite(per_sample)
    if not finite.all():
        index = int((~finite).nonzero()[0])
        raise NumericalError(f"non-finite loss at batch index {index}")
    return per_sample.mean()


def predict(v: ArrayLike, text_embs: ArrayLike, tau: Union[float, torch.Tensor]) -> Tuple[int, np.ndarray]:
    """Arg-max category (ties go to the lowest index) and the softmax probabilities"""
    with torch.no_grad():
        logits = class_logits(v, text_embs, tau).reshape(-1)
        probs = logits.softmax(dim=-1).numpy()
    return int(np.argmax(logits.numpy())), probs


def predict_batch(video_embs: ArrayLike, text_embs: ArrayLike, tau: Union[float, torch.Tensor]) -> Tuple[np.ndarray, np.ndarray]:
    with torch.no_grad():
        logits = class_logits(video_embs, text_embs, tau)
        probs = logits.softmax(dim=-1).numpy()
    return np.argmax(logits.numpy(), axis=-1), probs
