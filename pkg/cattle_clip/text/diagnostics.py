"""Flags category words that a tokenizer splits into several sub-word pieces."""

from dataclasses import asdict, dataclass
from typing import List, Sequence, Tuple

import pandas as pd

from cattle_clip.text.tokenizer import Tokenizer


@dataclass(frozen=True)
class TokenSplitRow:
    phrase: str
    word: str
    pieces: Tuple[str, ...]
    n_tokens: int
    flagged: bool


@dataclass(frozen=True)
class TokenSplitReport:
    rows: Tuple[TokenSplitRow, ...]

    @property
    def flagged(self) -> List[TokenSplitRow]:
        return [r for r in self.rows if r.flagged]

    def to_frame(self) -> pd.DataFrame:
        columns = ["phrase", "word", "pieces", "n_tokens", "flagged"]
        frame = pd.DataFrame([asdict(r) for r in self.rows], columns=columns)
        frame["pieces"] = frame["pieces"].map(lambda p: " ".join(p))
        return frame

    def to_records(self) -> List[dict]:
        return [dict(asdict(r), pieces=list(r.pieces)) for r in self.rows]


def check_token_split(category_phrases: Sequence[str], tokenizer: Tokenizer) -> TokenSplitReport:
    """
    Token count of every content word of every phrase. Words that need more
    than one token lose their identity as a unit and are flagged.
    """
    rows = []
    for phrase in category_phrases:
        for word in tokenizer.pre_tokenize(phrase):
            if not word.isalnum():
                continue
            pieces = tuple(tokenizer.tokenize_word(word))
            rows.append(TokenSplitRow(phrase, word, pieces, len(pieces), len(pieces) > 1))
    return TokenSplitReport(rows=tuple(rows))
