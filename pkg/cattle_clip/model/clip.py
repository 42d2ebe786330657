"""
The dual-encoder classifier.

The parameter store is the module's ``state_dict``; names are stable across
save/load and the weight-import hook matches external arrays against them.
"""

import logging
import os
from typing import Dict, List, Mapping, Sequence, Union

import numpy as np
import torch
import torch.nn as nn

from cattle_clip.data.sampling import FrameStack
from cattle_clip.errors import CheckpointError, DataError
from cattle_clip.model.config import ModelConfig
from cattle_clip.model.encoders import ImageEncoder, TextEncoder
from cattle_clip.model.head import ContrastiveConfig
from cattle_clip.text.tokenizer import TokenSequence

logger = logging.getLogger(__name__)

# names excluded from weight decay besides 1-D tensors (norm gains, biases, log τ)
NO_DECAY_NAMES = ("cls_token", "pos_embedding")


class CattleClip(nn.Module):
    def __init__(self, config: ModelConfig, contrastive: ContrastiveConfig = ContrastiveConfig(), seed: int = 0):
        super().__init__()
        self.config = config
        self.contrastive = contrastive
        self.visual = ImageEncoder(config)
        self.text = TextEncoder(config)
        self.log_temperature = nn.Parameter(
            torch.tensor(contrastive.log_tau_init),
            requires_grad=contrastive.temperature_mode == "learnable-log",
        )
        self.reset_parameters(seed)
        self.to(config.torch_dtype)

    def reset_parameters(self, seed: int) -> None:
        """Seeded cold start; the global torch RNG is left untouched"""
        std = self.config.init_std
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(seed)
            for module in self.modules():
                if isinstance(module, nn.Linear):
                    nn.init.trunc_normal_(module.weight, std=std, a=-2 * std, b=2 * std)
                    if module.bias is not None:
                        nn.init.zeros_(module.bias)
                elif isinstance(module, nn.LayerNorm):
                    nn.init.ones_(module.weight)
                    nn.init.zeros_(module.bias)
                elif isinstance(module, nn.Embedding):
                    nn.init.trunc_normal_(module.weight, std=std, a=-2 * std, b=2 * std)
            for tensor in (self.visual.cls_token, self.visual.pos_embedding, self.text.pos_embedding):
                nn.init.trunc_normal_(tensor, std=std, a=-2 * std, b=2 * std)
            proj_std = self.config.hidden_dim**-0.5
            for tensor in (self.visual.proj, self.text.proj):
                nn.init.trunc_normal_(tensor, std=proj_std, a=-2 * proj_std, b=2 * proj_std)
        with torch.no_grad():
            self.log_temperature.fill_(self.contrastive.log_tau_init)

    @property
    def dtype(self) -> torch.dtype:
        return self.visual.proj.dtype

    def temperature(self) -> torch.Tensor:
        return self.log_temperature.exp().clamp(min=self.contrastive.tau_min)

    def _tensor(self, array: Union[np.ndarray, torch.Tensor]) -> torch.Tensor:
        return torch.as_tensor(array).to(self.dtype)

    def encode_frames(self, frames: Union[np.ndarray, torch.Tensor]) -> torch.Tensor:
        """B x H x W x 3 frames to B x projection_dim image embeddings"""
        return self.visual(self._tensor(frames))

    def encode_videos(self, videos: Union[np.ndarray, torch.Tensor]) -> torch.Tensor:
        """B x K x H x W x 3 clips to B x projection_dim video embeddings"""
        videos = self._tensor(videos)
        B, K = videos.shape[:2]
        per_frame = self.visual(videos.reshape(B * K, *videos.shape[2:]))
        return temporal_pool(per_frame.reshape(B, K, -1))

    def encode_token_sequences(self, sequences: Sequence[TokenSequence]) -> torch.Tensor:
        ids = torch.tensor([s.ids for s in sequences], dtype=torch.long)
        eos = torch.tensor([s.eos_position for s in sequences], dtype=torch.long)
        return self.text(ids, eos)

    def parameter_groups(self, weight_decay: float) -> List[Dict]:
        """AdamW groups: decayed weight matrices, and everything else undecayed"""
        decay, no_decay = [], []
        for name, param in self.named_parameters():
            if not param.requires_grad:
                continue
            if param.ndim < 2 or any(key in name for key in NO_DECAY_NAMES):
                no_decay.append(param)
            else:
                decay.append(param)
        return [
            {"params": decay, "weight_decay": weight_decay},
            {"params": no_decay, "weight_decay": 0.0},
        ]

    def decayed_parameter_names(self) -> List[str]:
        return [
            name
            for name, param in self.named_parameters()
            if param.requires_grad and param.ndim >= 2 and not any(key in name for key in NO_DECAY_NAMES)
        ]


def temporal_pool(frame_embeddings: Union[np.ndarray, torch.Tensor]) -> torch.Tensor:
    """Average over the frame axis (second to last)"""
    frame_embeddings = torch.as_tensor(frame_embeddings)
    if frame_embeddings.shape[-2] < 1:
        raise DataError("temporal pooling needs at least one frame")
    return frame_embeddings.mean(dim=-2)


def embed_image_tokens(patches: Union[np.ndarray, torch.Tensor], model: CattleClip) -> torch.Tensor:
    """N x 3P^2 patches to the (N+1) x d token sequence"""
    patches = model._tensor(patches)
    return model.visual.embed_tokens(patches[None])[0]


def encode_image(frame: Union[np.ndarray, torch.Tensor], model: CattleClip) -> torch.Tensor:
    return model.encode_frames(model._tensor(frame)[None])[0]


def encode_text(tokens: TokenSequence, model: CattleClip) -> torch.Tensor:
    return model.encode_token_sequences([tokens])[0]


def forward_video(stack: Union[FrameStack, np.ndarray], model: CattleClip) -> torch.Tensor:
    """K preprocessed frames, encoded with shared weights and mean-pooled"""
    frames = stack.frames if isinstance(stack, FrameStack) else stack
    return model.encode_videos(model._tensor(frames)[None])[0]


def import_weights(model: CattleClip, arrays: Mapping[str, Union[np.ndarray, torch.Tensor]]) -> List[str]:
    """
    Copy externally supplied named arrays into the parameter store.

    Names absent from the store are ignored; shape mismatches raise.

    Returns:
        Names that were imported
    """
    state = model.state_dict()
    imported = []
    mismatched = []
    for name, value in arrays.items():
        if name not in state:
            continue
        tensor = torch.as_tensor(np.asarray(value))
        if tuple(tensor.shape) != tuple(state[name].shape):
            mismatched.append(f"{name}: store {tuple(state[name].shape)} vs file {tuple(tensor.shape)}")
            continue
        state[name] = tensor.to(state[name].dtype)
        imported.append(name)
    if mismatched:
        raise CheckpointError("shape mismatch importing weights:\n  " + "\n  ".join(mismatched))
    model.load_state_dict(state)
    logger.info("Imported %d of %d parameter arrays", len(imported), len(state))
    return imported


def load_weight_file(path: str) -> Dict[str, np.ndarray]:
    """Read named arrays from a .npz or torch state-dict file"""
    if not os.path.isfile(path):
        raise FileNotFoundError(f"Weight file {path} not found")
    if path.endswith(".npz"):
        with np.load(path, allow_pickle=False) as archive:
            return {name: archive[name] for name in archive.files}
    try:
        state = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise CheckpointError(f"unreadable weight file {path}: {exc}") from exc
    return {name: tensor.numpy() for name, tensor in state.items()}

