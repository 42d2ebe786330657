from cattle_clip.model.clip import (
    CattleClip,
    embed_image_tokens,
    encode_image,
    encode_text,
    forward_video,
    import_weights,
    load_weight_file,
    temporal_pool,
)
from cattle_clip.model.config import ModelConfig
from cattle_clip.model.encoders import patchify
from cattle_clip.model.head import (
    ContrastiveConfig,
    class_logits,
    contrastive_ce_loss,
    cosine_similarity,
    predict,
    predict_batch,
)

__all__ = [
    "CattleClip",
    "embed_image_tokens",
    "encode_image",
    "encode_text",
    "forward_video",
    "import_weights",
    "load_weight_file",
    "temporal_pool",
    "ModelConfig",
    "patchify",
    "ContrastiveConfig",
    "class_logits",
    "contrastive_ce_loss",
    "cosine_similarity",
    "predict",
    "predict_batch",
]
