"""
Image and text transformer towers.

Blocks use pre-layer normalisation: x + attn(ln_1(x)), then x + mlp(ln_2(x)).
The text tower attends causally and reads out the [EOS] position.
"""

from typing import Union

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F
from einops import rearrange

from cattle_clip.errors import DataError, NumericalError
from cattle_clip.model.config import ModelConfig


def patchify(frames: Union[np.ndarray, torch.Tensor], patch_size: int) -> torch.Tensor:
    """
    Split frames (... x H x W x 3) into non-overlapping patches.

    Returns:
        ... x N x (3 P^2), patches in row-major order, each flattened as (row, col, channel)
    """
    frames = torch.as_tensor(frames)
    H, W = frames.shape[-3], frames.shape[-2]
    if H % patch_size or W % patch_size:
        raise ValueError(f"frame size {H}x{W} is not divisible by patch size {patch_size}")
    return rearrange(frames, "... (h p1) (w p2) c -> ... (h w) (p1 p2 c)", p1=patch_size, p2=patch_size)


class Attention(nn.Module):
    def __init__(self, dim: int, heads: int, dropout: float = 0.0, causal: bool = False):
        super().__init__()
        self.heads = heads
        self.causal = causal
        self.scale = (dim // heads) ** -0.5
        self.qkv = nn.Linear(dim, dim * 3)
        self.out = nn.Linear(dim, dim)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        q, k, v = map(
            lambda t: rearrange(t, "b n (h d) -> b h n d", h=self.heads),
            self.qkv(x).chunk(3, dim=-1),
        )
        dots = torch.matmul(q, k.transpose(-1, -2)) * self.scale
        if self.causal:
            n = x.shape[1]
            future = torch.ones(n, n, dtype=torch.bool, device=x.device).triu(1)
            dots = dots.masked_fill(future, float("-inf"))
        attn = self.dropout(dots.softmax(dim=-1))
        out = rearrange(torch.matmul(attn, v), "b h n d -> b n (h d)")
        return self.out(out)


class MLP(nn.Module):
    def __init__(self, dim: int, hidden_dim: int, dropout: float = 0.0):
        super().__init__()
        self.fc1 = nn.Linear(dim, hidden_dim)
        self.fc2 = nn.Linear(hidden_dim, dim)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.dropout(self.fc2(F.gelu(self.fc1(x))))


class ResidualBlock(nn.Module):
    def __init__(self, config: ModelConfig, causal: bool = False):
        super().__init__()
        self.ln_1 = nn.LayerNorm(config.hidden_dim)
        self.attn = Attention(config.hidden_dim, config.heads, config.dropout, causal)
        self.ln_2 = nn.LayerNorm(config.hidden_dim)
        self.mlp = MLP(config.hidden_dim, config.mlp_dim, config.dropout)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x + self.attn(self.ln_1(x))
        return x + self.mlp(self.ln_2(x))


class Transformer(nn.Module):
    def __init__(self, config: ModelConfig, layers: int, causal: bool, name: str):
        super().__init__()
        self.name = name
        self.blocks = nn.ModuleList([ResidualBlock(config, causal) for _ in range(layers)])

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        for index, block in enumerate(self.blocks):
            x = block(x)
            if not torch.isfinite(x).all():
                raise NumericalError(f"non-finite activation in {self.name} layer {index}")
        return x


class ImageEncoder(nn.Module):
    """Patch projection, [CLS] token, positional embedding, blocks, projection A_img"""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        d = config.hidden_dim
        self.patch_proj = nn.Linear(config.patch_dim, d, bias=False)
        self.cls_token = nn.Parameter(torch.zeros(d))
        self.pos_embedding = nn.Parameter(torch.zeros(config.num_patches + 1, d))
        self.dropout = nn.Dropout(config.dropout)
        self.transformer = Transformer(config, config.image_layers, causal=False, name="image")
        self.ln_post = nn.LayerNorm(d)
        self.proj = nn.Parameter(torch.zeros(d, config.projection_dim))

    def embed_tokens(self, patches: torch.Tensor) -> torch.Tensor:
        """B x N x 3P^2 patches to the B x (N+1) x d input sequence"""
        if patches.shape[-2:] != (self.config.num_patches, self.config.patch_dim):
            raise DataError(
                f"expected patches of shape (N={self.config.num_patches}, {self.config.patch_dim}), "
                f"got {tuple(patches.shape[-2:])}"
            )
        tokens = self.patch_proj(patches)
        cls = self.cls_token.expand(tokens.shape[0], 1, -1)
        return torch.cat([cls, tokens], dim=1) + self.pos_embedding

    def forward(self, frames: torch.Tensor) -> torch.Tensor:
        """B x H x W x 3 frames to B x projection_dim embeddings"""
        if tuple(frames.shape[-3:-1]) != self.config.image_size:
            raise DataError(f"frames must be {self.config.image_size}, got {tuple(frames.shape[-3:-1])}")
        x = self.dropout(self.embed_tokens(patchify(frames, self.config.patch_size)))
        x = self.transformer(x)
        return self.ln_post(x[:, 0]) @ self.proj


class TextEncoder(nn.Module):
    """Token embedding, positional embedding, causal blocks, [EOS] readout, projection A_text"""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        d = config.hidden_dim
        self.token_embedding = nn.Embedding(config.vocab_size, d)
        self.pos_embedding = nn.Parameter(torch.zeros(config.max_tokens, d))
        self.transformer = Transformer(config, config.text_layers, causal=True, name="text")
        self.ln_final = nn.LayerNorm(d)
        self.proj = nn.Parameter(torch.zeros(d, config.projection_dim))

    def forward(self, ids: torch.Tensor, eos_positions: torch.Tensor) -> torch.Tensor:
        """B x max_tokens ids to B x projection_dim embeddings"""
        if ids.shape[-1] != self.config.max_tokens:
            raise DataError(f"token sequences must have {self.config.max_tokens} ids, got {ids.shape[-1]}")
        if ids.min() < 0 or ids.max() >= self.config.vocab_size:
            raise DataError(f"token id out of vocabulary range [0, {self.config.vocab_size})")
        x = self.token_embedding(ids) + self.pos_embedding
        x = self.transformer(x)
        eos = x[torch.arange(x.shape[0]), eos_positions]
        return self.ln_final(eos) @ self.proj
