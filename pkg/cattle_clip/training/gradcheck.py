"""Central finite-difference check of the contrastive loss gradients."""

import copy
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np
import torch

from cattle_clip.model.clip import CattleClip
from cattle_clip.model.head import contrastive_ce_loss
from cattle_clip.text.tokenizer import TokenSequence

CHECKED_PARAMETERS = (
    "visual.proj",
    "text.proj",
    "visual.cls_token",
    "visual.pos_embedding",
    "visual.patch_proj.weight",
)
RELATIVE_FLOOR = 1e-6


@dataclass(frozen=True)
class GradCheckEntry:
    name: str
    max_relative_error: float
    max_abs_analytic: float
    max_abs_numeric: float
    coordinates: int


def grad_check(
    model: CattleClip,
    videos: np.ndarray,
    labels: Sequence[int],
    prompts: Sequence[TokenSequence],
    step: float = 1e-4,
    coordinates: int = 6,
    seed: int = 0,
    names: Sequence[str] = CHECKED_PARAMETERS,
) -> Dict[str, GradCheckEntry]:
    """
    Compare autograd against central differences on a double-precision copy
    of ``model`` for a seeded sample of coordinates of each named parameter.
    The relative error uses max(|analytic|, |numeric|, 1e-6) as denominator.
    """
    model = copy.deepcopy(model).to(torch.float64)
    model.eval()
    params = dict(model.named_parameters())
    videos = torch.as_tensor(np.asarray(videos), dtype=torch.float64)
    labels = torch.as_tensor(np.asarray(labels), dtype=torch.long)

    def loss() -> torch.Tensor:
        video_embs = model.encode_videos(videos)
        text_embs = model.encode_token_sequences(prompts)
        return contrastive_ce_loss(video_embs, labels, text_embs, model.temperature())

    model.zero_grad(set_to_none=True)
    loss().backward()
    rng = np.random.default_rng(seed)
    report = {}
    for name in names:
        param = params[name]
        analytic = param.grad.detach().reshape(-1).clone()
        flat = param.data.view(-1)
        picks = rng.choice(flat.numel(), size=min(coordinates, flat.numel()), replace=False)
        errors, numeric_values = [], []
        with torch.no_grad():
            for index in picks:
                index = int(index)
                original = flat[index].item()
                flat[index] = original + step
                plus = loss().item()
                flat[index] = original - step
                minus = loss().item()
                flat[index] = original
                numeric = (plus - minus) / (2 * step)
                a = analytic[index].item()
                numeric_values.append(numeric)
                errors.append(abs(a - numeric) / max(abs(a), abs(numeric), RELATIVE_FLOOR))
        report[name] = GradCheckEntry(
            name=name,
            max_relative_error=float(max(errors)),
            max_abs_analytic=float(analytic[torch.as_tensor(picks)].abs().max()),
            max_abs_numeric=float(np.max(np.abs(numeric_values))),
            coordinates=len(picks),
        )
    return report


def max_relative_error(report: Dict[str, GradCheckEntry]) -> Tuple[str, float]:
    name = max(report, key=lambda n: report[n].max_relative_error)
    return name, report[name].max_relative_error
