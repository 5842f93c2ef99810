"""Pre-trained word-vector loading and document centroids.

The file format is the common ``.vec`` text convention: an optional first
line ``count dim`` (two integers), then one record per line, ``word f1 ...
fdim``.  Vectors are stored at 32-bit precision; centroid accumulation runs
at 64-bit.  Tables are read-only after loading and safe to share across
threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, DimensionError, FormatError

__all__ = ["EmbeddingTable", "load_embeddings", "centroid", "cosine"]


@dataclass(frozen=True)
class EmbeddingTable:
    """Word -> fixed-dimension vector map with zero-vector fallback.

    Looking up an absent word yields the all-zero vector of length ``dim``;
    it is never an error.
    """

    dim: int
    vectors: dict[str, np.ndarray]
    skipped_lines: int = 0

    def __contains__(self, word: str) -> bool:
        return word in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def lookup(self, word: str) -> np.ndarray:
        vec = self.vectors.get(word)
        if vec is None:
            return np.zeros(self.dim, dtype=np.float32)
        return vec.copy()

    def matrix(self, words: Sequence[str]) -> np.ndarray:
        """Stack vectors for ``words`` into a (len(words), dim) float32 array."""
        out = np.zeros((len(words), self.dim), dtype=np.float32)
        for i, word in enumerate(words):
            vec = self.vectors.get(word)
            if vec is not None:
                out[i] = vec
        return out


def load_embeddings(
    path: str | Path, restrict_to: Iterable[str] | None = None
) -> EmbeddingTable:
    """Load a text word-vector file.

    Lines with the wrong number of fields or unparsable values are skipped
    and counted; more than 1% skipped lines is treated as a broken file.
    ``restrict_to`` keeps only the named words (memory control for large
    files).
    """
    keep = set(restrict_to) if restrict_to is not None else None
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    data_lines = 0
    skipped = 0
    with open(path, encoding="utf-8", errors="replace") as handle:
        for line_no, line in enumerate(handle):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            if line_no == 0 and len(parts) == 2:
                try:
                    int(parts[0]), int(parts[1])
                    continue  # "count dim" header
                except ValueError:
                    pass
            data_lines += 1
            if dim is None:
                if len(parts) < 2:
                    skipped += 1
                    continue
                try:
                    values = np.array(parts[1:], dtype=np.float32)
                except ValueError:
                    skipped += 1
                    continue
                if not np.all(np.isfinite(values)):
                    skipped += 1
                    continue
                dim = len(values)
            else:
                if len(parts) != dim + 1:
                    skipped += 1
                    continue
                try:
                    values = np.array(parts[1:], dtype=np.float32)
                except ValueError:
                    skipped += 1
                    continue
                if not np.all(np.isfinite(values)):
                    skipped += 1
                    continue
            if keep is not None and parts[0] not in keep:
                continue
            vectors[parts[0]] = values
    if data_lines == 0:
        raise FormatError(f"{path}: no vector records found")
    if skipped > 0.01 * data_lines:
        raise FormatError(
            f"{path}: {skipped} of {data_lines} lines skipped (wrong arity or "
            f"unparsable values), over the 1% budget"
        )
    if not vectors:
        raise FormatError(f"{path}: no embedding vectors loaded")
    return EmbeddingTable(int(dim), vectors, skipped)


def centroid(doc, table: EmbeddingTable) -> np.ndarray:
    """Token-count-weighted mean vector of a document.

    The divisor is the total token count, including out-of-vocabulary
    tokens, whose vectors are zero; repeated tokens contribute once per
    occurrence.  Returns a float64 vector of length ``table.dim``.
    """
    tokens = getattr(doc, "tokens", doc)
    if len(tokens) == 0:
        raise DataError("centroid of a document with no tokens is undefined")
    acc = np.zeros(table.dim, dtype=np.float64)
    for tok in tokens:
        vec = table.vectors.get(tok)
        if vec is not None:
            acc += vec
    return acc / len(tokens)


def cosine(u, v) -> float:
    """Cosine similarity with the zero-norm convention: either norm 0 -> 0.0."""
    a = np.asarray(u, dtype=np.float64)
    b = np.asarray(v, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionError(f"cosine: incompatible shapes {a.shape} and {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))
