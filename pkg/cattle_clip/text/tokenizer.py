"""
Tokenizers with the 77-token framing: [start] content... [end] [pad]...

``DeskTokenizer`` is word level with a single-character fallback. ``BPETokenizer``
applies byte-pair merges read from a merges file, CLIP style, with ``</w>``
marking the end of a word.
"""

import logging
import re
import string
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from cattle_clip.errors import ConfigError, DataError

logger = logging.getLogger(__name__)

MAX_TOKENS = 77
PAD, START, END, UNK = "<pad>", "<start>", "<end>", "<unk>"
SPECIAL_TOKENS = (PAD, START, END, UNK)
END_OF_WORD = "</w>"
CHARACTERS = string.ascii_lowercase + string.digits + string.punctuation

DESK_WORDS = (
    "a",
    "photo",
    "of",
    "cow",
    "feeding",
    "drinking",
    "standing",
    "lying",
    "self",
    "grooming",
    "chewing",
)

_PRE_TOKEN = re.compile(r"[a-z0-9]+|[^\sa-z0-9]")


@dataclass(frozen=True)
class TokenSequence:
    ids: Tuple[int, ...]
    eos_position: int

    def __post_init__(self):
        if len(self.ids) > MAX_TOKENS:
            raise DataError(f"token sequence longer than {MAX_TOKENS}")
        if not 0 < self.eos_position < len(self.ids):
            raise DataError(f"eos_position {self.eos_position} outside the sequence")

    def __len__(self) -> int:
        return len(self.ids)


class Tokenizer:
    """Base class for tokenizers"""

    mode = ""

    def __init__(self, vocabulary: Dict[str, int]):
        missing = [t for t in SPECIAL_TOKENS if t not in vocabulary]
        if missing:
            raise ConfigError(f"vocabulary lacks special token(s) {missing}")
        if len(set(vocabulary.values())) != len(vocabulary):
            raise ConfigError("vocabulary ids must be unique")
        self.vocabulary = dict(vocabulary)
        self.id_to_token = {i: t for t, i in self.vocabulary.items()}
        self.pad_id = self.vocabulary[PAD]
        self.start_id = self.vocabulary[START]
        self.end_id = self.vocabulary[END]
        self.unk_id = self.vocabulary[UNK]

    @property
    def vocab_size(self) -> int:
        return max(self.vocabulary.values()) + 1

    @staticmethod
    def pre_tokenize(text: str) -> List[str]:
        """Lowercase, then split into words and single punctuation marks"""
        return _PRE_TOKEN.findall(text.lower())

    def tokenize_word(self, word: str) -> List[str]:
        raise NotImplementedError("Subclasses must implement this method")

    def encode(self, text: str) -> List[int]:
        """Content ids, without framing"""
        ids = []
        for word in self.pre_tokenize(text):
            ids.extend(self.vocabulary.get(piece, self.unk_id) for piece in self.tokenize_word(word))
        return ids

    def decode(self, ids: Iterable[int]) -> str:
        raise NotImplementedError("Subclasses must implement this method")

    def _content_tokens(self, ids: Iterable[int]) -> List[str]:
        tokens = []
        for i in ids:
            if i == self.end_id:
                break
            if i in (self.start_id, self.pad_id):
                continue
            tokens.append(self.id_to_token.get(i, UNK))
        return tokens


def load_vocabulary_file(path: str) -> Dict[str, int]:
    """One token per line; the id is the 0-based line number"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            tokens = [line.rstrip("\n") for line in f]
    except OSError as exc:
        raise FileNotFoundError(f"Vocabulary file {path} not found") from exc
    vocabulary = {}
    for line_no, token in enumerate(tokens, start=1):
        if not token:
            raise DataError(f"{path}:{line_no}: empty token")
        if token in vocabulary:
            raise DataError(f"{path}:{line_no}: duplicate token {token!r}")
        vocabulary[token] = line_no - 1
    return vocabulary


def write_vocabulary_file(tokenizer: Tokenizer, path: str) -> None:
    tokens = [tokenizer.id_to_token[i] for i in sorted(tokenizer.id_to_token)]
    with open(path, "w", encoding="utf-8") as f:
        f.write("".join(t + "\n" for t in tokens))


class DeskTokenizer(Tokenizer):
    """Word-level tokenizer; out-of-vocabulary words fall back to characters"""

    mode = "desk"

    @classmethod
    def default(cls, extra_words: Sequence[str] = ()) -> "DeskTokenizer":
        tokens = list(SPECIAL_TOKENS)
        for token in list(DESK_WORDS) + list(extra_words) + list(CHARACTERS):
            if token not in tokens:
                tokens.append(token)
        return cls({t: i for i, t in enumerate(tokens)})

    @classmethod
    def from_file(cls, vocab_path: str) -> "DeskTokenizer":
        return cls(load_vocabulary_file(vocab_path))

    def tokenize_word(self, word: str) -> List[str]:
        if word in self.vocabulary:
            return [word]
        return list(word)

    def decode(self, ids: Iterable[int]) -> str:
        return " ".join(self._content_tokens(ids))


class BPETokenizer(Tokenizer):
    """Byte-pair tokenizer driven by an external merges file"""

    mode = "bpe-file"

    def __init__(self, merges: Sequence[Tuple[str, str]], vocabulary: Optional[Dict[str, int]] = None):
        self.merges = [tuple(m) for m in merges]
        self.merges_rank = {pair: rank for rank, pair in enumerate(self.merges)}
        if vocabulary is None:
            vocabulary = self._derive_vocabulary(self.merges)
        super().__init__(vocabulary)

    @staticmethod
    def _derive_vocabulary(merges: Sequence[Tuple[str, str]]) -> Dict[str, int]:
        tokens = list(SPECIAL_TOKENS)
        tokens += list(CHARACTERS) + [c + END_OF_WORD for c in CHARACTERS]
        seen = set(tokens)
        for first, second in merges:
            merged = first + second
            if merged not in seen:
                seen.add(merged)
                tokens.append(merged)
        return {t: i for i, t in enumerate(tokens)}

    @classmethod
    def from_files(cls, merges_path: str, vocab_path: Optional[str] = None) -> "BPETokenizer":
        merges = []
        try:
            with open(merges_path, "r", encoding="utf-8") as f:
                lines = f.read().splitlines()
        except OSError as exc:
            raise FileNotFoundError(f"Merges file {merges_path} not found") from exc
        for line_no, line in enumerate(lines, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise DataError(f"{merges_path}:{line_no}: expected one merge pair per line")
            merges.append((parts[0], parts[1]))
        vocabulary = load_vocabulary_file(vocab_path) if vocab_path else None
        logger.info("Loaded %d merges from %s", len(merges), merges_path)
        return cls(merges, vocabulary)

    def tokenize_word(self, word: str) -> List[str]:
        pieces = list(word[:-1]) + [word[-1] + END_OF_WORD]
        while len(pieces) > 1:
            pairs = {(pieces[i], pieces[i + 1]) for i in range(len(pieces) - 1)}
            ranked = [p for p in pairs if p in self.merges_rank]
            if not ranked:
                break
            first, second = min(ranked, key=self.merges_rank.__getitem__)
            merged = []
            i = 0
            while i < len(pieces):
                if i < len(pieces) - 1 and pieces[i] == first and pieces[i + 1] == second:
                    merged.append(first + second)
                    i += 2
                else:
                    merged.append(pieces[i])
                    i += 1
            pieces = merged
        return pieces

    def decode(self, ids: Iterable[int]) -> str:
        text = "".join(self._content_tokens(ids)).replace(END_OF_WORD, " ")
        return " ".join(text.split())


def tokenize(text: str, tokenizer: Tokenizer, max_tokens: int = MAX_TOKENS) -> TokenSequence:
    """
    Frame and pad a text to ``max_tokens`` ids.

    Raises:
        DataError: empty text, or content that does not fit between the markers
    """
    if not text or not text.strip():
        raise DataError("cannot tokenize empty text")
    content = tokenizer.encode(text)
    if len(content) + 2 > max_tokens:
        raise DataError(f"text needs {len(content) + 2} tokens, capacity is {max_tokens}: {text[:40]!r}...")
    ids = [tokenizer.start_id] + content + [tokenizer.end_id]
    eos_position = len(ids) - 1
    ids += [tokenizer.pad_id] * (max_tokens - len(ids))
    return TokenSequence(ids=tuple(ids), eos_position=eos_position)


def build_tokenizer(mode: str = "desk", vocab_file: Optional[str] = None, merges_file: Optional[str] = None) -> Tokenizer:
    if mode == "desk":
        return DeskTokenizer.from_file(vocab_file) if vocab_file else DeskTokenizer.default()
    if mode == "bpe-file":
        if not merges_file:
            raise ConfigError("text.merges_file is required in bpe-file mode")
        return BPETokenizer.from_files(merges_file, vocab_file)
    raise ConfigError(f"unknown tokenizer mode {mode!r}")
