from dataclasses import dataclass, field
from typing import List, Mapping, Optional, Sequence, Tuple

from cattle_clip.errors import ConfigError
from cattle_clip.text.prompts import (
    COW_TEMPLATE,
    DEFAULT_REMAP,
    DEFAULT_TEMPLATE,
    BehaviourVocabulary,
    PromptTemplate,
    build_prompts,
)
from cattle_clip.text.tokenizer import MAX_TOKENS, Tokenizer, TokenSequence, build_tokenizer, tokenize

TOKENIZER_MODES = ("desk", "bpe-file")


@dataclass(frozen=True)
class TextConfig:
    """
    Prompt and tokenizer settings. ``cow_template`` switches to the
    "a photo of a cow {category} ." variant.
    """

    template: str = DEFAULT_TEMPLATE
    cow_template: bool = False
    remap: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_REMAP))
    tokenizer: str = "desk"
    vocab_file: Optional[str] = None
    merges_file: Optional[str] = None

    def __post_init__(self):
        if self.tokenizer not in TOKENIZER_MODES:
            raise ConfigError(f"text.tokenizer must be one of {TOKENIZER_MODES}, got {self.tokenizer!r}")
        PromptTemplate(self.pattern)
        BehaviourVocabulary(dict(self.remap))

    @property
    def pattern(self) -> str:
        return COW_TEMPLATE if self.cow_template else self.template

    def vocabulary(self, remap: bool = True) -> Optional[BehaviourVocabulary]:
        return BehaviourVocabulary(dict(self.remap)) if remap else None

    def build_tokenizer(self) -> Tokenizer:
        return build_tokenizer(self.tokenizer, self.vocab_file, self.merges_file)


@dataclass(frozen=True)
class PromptSet:
    """Rendered prompts and their token sequences, in category order"""

    categories: Tuple[str, ...]
    prompts: Tuple[str, ...]
    sequences: Tuple[TokenSequence, ...]

    def subset(self, categories: Sequence[str]) -> "PromptSet":
        index = [self.categories.index(c) for c in categories]
        return PromptSet(
            tuple(categories), tuple(self.prompts[i] for i in index), tuple(self.sequences[i] for i in index)
        )


def build_prompt_set(
    categories: Sequence[str],
    config: TextConfig = TextConfig(),
    remap: bool = True,
    tokenizer: Optional[Tokenizer] = None,
    max_tokens: int = MAX_TOKENS,
    vocab_size: Optional[int] = None,
) -> PromptSet:
    """
    Render and tokenize one prompt per category.

    Raises:
        ConfigError: the tokenizer emits ids beyond ``vocab_size`` (the text encoder's embedding table)
    """
    tokenizer = tokenizer or config.build_tokenizer()
    if vocab_size is not None and tokenizer.vocab_size > vocab_size:
        raise ConfigError(
            f"{tokenizer.mode} tokenizer has {tokenizer.vocab_size} ids but model.vocab_size is {vocab_size}"
        )
    prompts: List[str] = build_prompts(categories, PromptTemplate(config.pattern), config.vocabulary(remap))
    sequences = tuple(tokenize(p, tokenizer, max_tokens) for p in prompts)
    return PromptSet(tuple(categories), tuple(prompts), sequences)
