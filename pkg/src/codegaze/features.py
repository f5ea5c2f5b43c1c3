"""Vocabulary building and per-token state feature vectors.

Supported representations: bag-of-words one-hot, one-hot plus normalized
position, hashed character n-gram counts, and an external embedding table.
"""

from __future__ import annotations

import os
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .lexer import Snippet

UNK_ID = 0
UNK_TEXT = "<unk>"

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


@dataclass
class Vocab:
    ids: dict[str, int] = field(default_factory=lambda: {UNK_TEXT: UNK_ID})
    min_count: int = 1

    def __len__(self):
        return len(self.ids)

    def lookup(self, text: str) -> int:
        return self.ids.get(text, UNK_ID)


@dataclass
class FeatureSpec:
    mode: str  # "onehot" | "onehot_pos" | "char_ngram" | "external"
    ngram_n: int = 3
    buckets: int = 64
    path: str = ""

    def dim(self, vocab: Vocab, table: dict[str, np.ndarray] | None = None) -> int:
        if self.mode == "onehot":
            return len(vocab)
        if self.mode == "onehot_pos":
            return len(vocab) + 2
        if self.mode == "char_ngram":
            return self.buckets
        if self.mode == "external":
            if not table:
                raise ValueError("external feature mode requires a loaded table")
            return next(iter(table.values())).shape[0]
        raise ValueError(f"unknown feature mode {self.mode!r}")


def build_vocab(snippets: list[Snippet], min_count: int = 1) -> Vocab:
    """Frequency-ordered dense ids; ties broken lexicographically; 0 is UNK."""
    if not snippets:
        raise ValueError("build_vocab: no snippets")
    counts = Counter(tok.text for sn in snippets for tok in sn.tokens)
    kept = sorted(
        (text for text, c in counts.items() if c >= min_count),
        key=lambda t: (-counts[t], t),
    )
    vocab = Vocab(min_count=min_count)
    for text in kept:
        vocab.ids[text] = len(vocab.ids)
    return vocab


def assign_vocab_ids(snippet: Snippet, vocab: Vocab) -> None:
    for tok in snippet.tokens:
        tok.vocab_id = vocab.lookup(tok.text)


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & _MASK64
    return h


def load_embedding_table(path: str | os.PathLike) -> dict[str, np.ndarray]:
    """One line per token: `<text> <v1> ... <vd>`; all rows must agree on d."""
    table: dict[str, np.ndarray] = {}
    width = None
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f):
            parts = line.split()
            if not parts:
                continue
            vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            if width is None:
                width = vec.shape[0]
                if width == 0:
                    raise ValueError(f"embedding table {path}: line {line_no} has no values")
            elif vec.shape[0] != width:
                raise ValueError(
                    f"embedding table {path}: line {line_no} has width "
                    f"{vec.shape[0]}, expected {width}")
            table[parts[0]] = vec
    if not table:
        raise ValueError(f"embedding table {path}: empty")
    return table


def featurize(snippet: Snippet, spec: FeatureSpec, vocab: Vocab,
              table: dict[str, np.ndarray] | None = None) -> np.ndarray:
    """Per-token feature matrix of shape (n_tokens, d_feat)."""
    n = len(snippet.tokens)
    if spec.mode == "onehot":
        out = np.zeros((n, len(vocab)))
        for i, tok in enumerate(snippet.tokens):
            out[i, tok.vocab_id] = 1.0
        return out
    if spec.mode == "onehot_pos":
        out = np.zeros((n, len(vocab) + 2))
        n_lines = max(snippet.n_lines, 1)
        max_cols = max((tok.col_end for tok in snippet.tokens), default=1)
        for i, tok in enumerate(snippet.tokens):
            out[i, tok.vocab_id] = 1.0
            out[i, -2] = tok.line / n_lines
            out[i, -1] = tok.col_start / max_cols
        return out
    if spec.mode == "char_ngram":
        out = np.zeros((n, spec.buckets))
        for i, tok in enumerate(snippet.tokens):
            text = tok.text
            for j in range(len(text) - spec.ngram_n + 1):
                gram = text[j:j + spec.ngram_n]
                out[i, fnv1a64(gram.encode("utf-8")) % spec.buckets] += 1.0
        return out
    if spec.mode == "external":
        if table is None:
            table = load_embedding_table(spec.path)
        width = next(iter(table.values())).shape[0]
        out = np.zeros((n, width))
        for i, tok in enumerate(snippet.tokens):
            vec = table.get(tok.text)
            if vec is not None:
                out[i] = vec
        return out
    raise ValueError(f"unknown feature mode {spec.mode!r}")
