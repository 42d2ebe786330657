"""Category names to prompt strings."""

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

from cattle_clip.errors import ConfigError

SLOT = "{category}"
DEFAULT_TEMPLATE = "a photo of a {category} ."
COW_TEMPLATE = "a photo of a cow {category} ."
DEFAULT_REMAP: Dict[str, str] = {"ruminating": "chewing", "-": " "}


@dataclass(frozen=True)
class PromptTemplate:
    pattern: str = DEFAULT_TEMPLATE

    def __post_init__(self):
        count = self.pattern.count(SLOT)
        if count != 1:
            raise ConfigError(f"prompt template must contain exactly one {SLOT} slot, found {count}: {self.pattern!r}")


@dataclass(frozen=True)
class BehaviourVocabulary:
    """Substring remaps applied to raw labels, longest key first"""

    remap: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_REMAP))

    def __post_init__(self):
        for key, value in self.remap.items():
            if not key:
                raise ConfigError("remap keys must be non-empty")
            clashes = [k for k in self.remap if k in value]
            # a replacement that re-creates a key would make remapping non-idempotent
            if clashes:
                raise ConfigError(f"remap value {value!r} for {key!r} contains remap key(s) {clashes}")

    @property
    def ordered_items(self) -> List[tuple]:
        return sorted(self.remap.items(), key=lambda kv: (-len(kv[0]), kv[0]))


def remap_category(label: str, vocab: BehaviourVocabulary) -> str:
    """Apply the vocabulary remaps to a raw category label"""
    if not label:
        raise ValueError("label must be non-empty")
    phrase = label
    for source, target in vocab.ordered_items:
        phrase = phrase.replace(source, target)
    return " ".join(phrase.split())


def render_prompt(template: PromptTemplate, phrase: str) -> str:
    """Substitute the phrase into the template and normalise whitespace"""
    if not isinstance(template, PromptTemplate):
        template = PromptTemplate(template)
    return " ".join(template.pattern.replace(SLOT, phrase).split())


def build_prompts(
    categories: Sequence[str],
    template: PromptTemplate,
    vocab: Optional[BehaviourVocabulary] = None,
) -> List[str]:
    """
    One prompt per category, in category order. Without a vocabulary the raw
    label goes into the slot unchanged.
    """
    phrases = [remap_category(c, vocab) if vocab is not None else c for c in categories]
    return [render_prompt(template, p) for p in phrases]
