from cattle_clip.text.config import PromptSet, TextConfig, build_prompt_set
from cattle_clip.text.diagnostics import TokenSplitReport, check_token_split
from cattle_clip.text.prompts import (
    COW_TEMPLATE,
    DEFAULT_TEMPLATE,
    BehaviourVocabulary,
    PromptTemplate,
    build_prompts,
    remap_category,
    render_prompt,
)
from cattle_clip.text.tokenizer import (
    MAX_TOKENS,
    BPETokenizer,
    DeskTokenizer,
    Tokenizer,
    TokenSequence,
    build_tokenizer,
    tokenize,
)

__all__ = [
    "PromptSet",
    "TextConfig",
    "build_prompt_set",
    "TokenSplitReport",
    "check_token_split",
    "COW_TEMPLATE",
    "DEFAULT_TEMPLATE",
    "BehaviourVocabulary",
    "PromptTemplate",
    "build_prompts",
    "remap_category",
    "render_prompt",
    "MAX_TOKENS",
    "BPETokenizer",
    "DeskTokenizer",
    "Tokenizer",
    "TokenSequence",
    "build_tokenizer",
    "tokenize",
]
