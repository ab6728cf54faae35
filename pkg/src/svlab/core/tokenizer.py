"""Closed-vocabulary word-level tokenizer.

Tokens are newlines, the template literals ``Q:`` and ``A:``, words
(letters, digits, hyphens, apostrophes) and single punctuation marks.
Spaces are not tokens, so ``"\\n A:"`` and ``"\\nA:"`` encode identically;
``decode`` renders a canonical spacing that ``encode`` maps back to the same
ids.
Case is part of the token: ``"paris"`` and ``"Paris"`` are different ids,
as they would be in a subword vocabulary.
"""

from __future__ import annotations

import re
from typing import Iterable, Sequence

from ..errors import ConfigurationError

PAD, UNK, EOS, NEWLINE, Q_TOK, A_TOK = "<pad>", "<unk>", "<eos>", "\n", "Q:", "A:"
SPECIALS = (PAD, UNK, EOS, NEWLINE, Q_TOK, A_TOK)
PUNCT = (",", ".", ";", "!", "?", ":")

_TOKEN_RE = re.compile(r"<pad>|<unk>|<eos>|\n|[QA]:|[A-Za-z0-9][A-Za-z0-9'\-]*|[^\sA-Za-z0-9]")


def split_tokens(text: str) -> list[str]:
    return _TOKEN_RE.findall(text)


class Tokenizer:
    def __init__(self, vocabulary: Sequence[str]):
        vocab = list(vocabulary)
        if tuple(vocab[: len(SPECIALS)]) != SPECIALS:
            raise ConfigurationError(f"vocabulary must start with {SPECIALS}")
        if len(set(vocab)) != len(vocab):
            raise ConfigurationError("vocabulary contains duplicate tokens")
        self.vocabulary = vocab
        self._ids = {t: i for i, t in enumerate(vocab)}
        self.pad_id = 0
        self.unk_id = 1
        self.eos_id = 2
        self.newline_id = 3
        self.q_id = 4
        self.a_id = 5

    @classmethod
    def from_texts(cls, texts: Iterable[str]) -> "Tokenizer":
        seen: dict[str, None] = {}
        for text in texts:
            for tok in split_tokens(text):
                seen.setdefault(tok, None)
        for p in PUNCT:
            seen.setdefault(p, None)
        body = sorted(t for t in seen if t not in SPECIALS)
        return cls(list(SPECIALS) + body)

    def __len__(self) -> int:
        return len(self.vocabulary)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def token_id(self, token: str) -> int:
        return self._ids.get(token, self.unk_id)

    def encode(self, text: str) -> list[int]:
        return [self._ids.get(t, self.unk_id) for t in split_tokens(text)]

    def decode(self, ids: Iterable[int]) -> str:
        toks = [t for t in (self.vocabulary[int(i)] for i in ids) if t != PAD]
        out: list[str] = []
        prev = None
        for tok in toks:
            if tok == NEWLINE:
                out.append("\n")
            elif prev is None or prev == NEWLINE or tok in PUNCT:
                out.append(tok)
            else:
                out.append(" " + tok)
            prev = tok
        return "".join(out)

    def tokens(self, ids: Iterable[int]) -> list[str]:
        return [self.vocabulary[int(i)] for i in ids]
