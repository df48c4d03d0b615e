"""Closed word dictionary with reserved PAD and EOC tokens, plus one-hot
and padded-command encoding.

There is deliberately no unknown-word token: the dictionary is closed over
the training corpus and an out-of-vocabulary word at encode time is a data
error, not a silent substitution.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

PAD_TOKEN = "<pad>"
EOC_TOKEN = "<eoc>"
PAD_INDEX = 0
EOC_INDEX = 1
_RESERVED = (PAD_TOKEN, EOC_TOKEN)


def _check_token(token: str):
    if not token:
        raise DataError("empty token")
    if token != token.lower():
        raise DataError(f"token {token!r} is not lowercase")
    if any(ch.isspace() for ch in token):
        raise DataError(f"token {token!r} contains whitespace")
    if token in _RESERVED:
        raise DataError(f"token {token!r} collides with a reserved token")


class Vocabulary:
    """Immutable token<->index bijection with PAD at 0 and EOC at 1."""

    def __init__(self, tokens: Sequence[str]):
        tokens = tuple(tokens)
        if len(tokens) < 2 or tokens[0] != PAD_TOKEN or tokens[1] != EOC_TOKEN:
            raise DataError(
                f"vocabulary must start with {PAD_TOKEN!r}, {EOC_TOKEN!r}; got {tokens[:2]!r}"
            )
        if len(set(tokens)) != len(tokens):
            raise DataError("vocabulary tokens must be unique")
        for token in tokens[2:]:
            _check_token(token)
        self.tokens = tokens
        self._index = {tok: i for i, tok in enumerate(tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    def index(self, token: str) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise DataError(f"token {token!r} not in vocabulary") from None

    def token(self, index: int) -> str:
        if not 0 <= index < len(self.tokens):
            raise DataError(f"index {index} outside vocabulary of size {len(self.tokens)}")
        return self.tokens[index]

    def save(self, path):
        Path(path).write_text("\n".join(self.tokens) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        text = Path(path).read_text(encoding="utf-8")
        lines = text.splitlines()
        if len(lines) < 2:
            raise DataError(f"vocabulary file {path} has fewer than 2 lines")
        return cls(lines)


def build_vocab(commands: Iterable[Sequence[str]]) -> Vocabulary:
    """Dictionary over a command corpus: [PAD, EOC] then corpus tokens by
    descending frequency, ties broken lexicographically.  Deterministic and
    independent of corpus order."""
    counts: Counter[str] = Counter()
    for command in commands:
        for token in command:
            _check_token(token)
            counts[token] += 1
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return Vocabulary(list(_RESERVED) + [tok for tok, _ in ordered])


@dataclass(frozen=True)
class OneHot:
    """A |D|-dimensional indicator vector: 1 at ``index``, 0 elsewhere."""

    dim: int
    index: int

    def __post_init__(self):
        if not 0 <= self.index < self.dim:
            raise DataError(f"one-hot index {self.index} outside dimension {self.dim}")

    def to_vector(self) -> np.ndarray:
        v = np.zeros(self.dim)
        v[self.index] = 1.0
        return v


def encode_word(vocabulary: Vocabulary, token: str) -> OneHot:
    """One-hot embedding of a dictionary word."""
    return OneHot(dim=len(vocabulary), index=vocabulary.index(token))


def encode_command(vocabulary: Vocabulary, words: Sequence[str], n: int
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Word indices followed by EOC, PAD-filled to exactly n entries.

    The mask is true at the word and EOC positions.  A command longer than
    n - 1 words is refused rather than truncated.
    """
    if len(words) > n - 1:
        raise DataError(
            f"command of {len(words)} words does not fit n={n} (needs room for EOC)"
        )
    indices = np.full(n, PAD_INDEX, dtype=np.int64)
    for j, word in enumerate(words):
        indices[j] = vocabulary.index(word)
    indices[len(words)] = EOC_INDEX
    mask = np.zeros(n, dtype=bool)
    mask[: len(words) + 1] = True
    return indices, mask
