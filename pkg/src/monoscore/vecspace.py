"""Embedding spaces: text I/O, lookup, phrase vectorization and cosine."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING, Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import FormatError, MonoScoreError

if TYPE_CHECKING:
    from .embedtrain import PVModel

logger = logging.getLogger(__name__)

WORD = "word"
PHRASE = "phrase"
AVERAGE = "average"
PARAGRAPH = "paragraph"

_FORBIDDEN = ("|||", "\t", "\n", "\r", " ")


def check_token(token: str) -> None:
    if not token:
        raise ValueError("empty token")
    for bad in _FORBIDDEN:
        if bad in token:
            raise ValueError(f"token {token!r} contains separator {bad!r}")


@dataclass(frozen=True, eq=False)
class VectorSpace:
    """Immutable mapping from tokens to ``dim``-dimensional vectors.

    Vectors are stored as rows of a read-only float64 matrix in token
    insertion order.  ``duplicates`` records how many repeated tokens were
    discarded when the space was loaded.
    """

    tokens: tuple
    matrix: np.ndarray
    kind: str = WORD
    duplicates: int = 0
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[1] < 1:
            raise ValueError("matrix must be 2-D with at least one column")
        if matrix.shape[0] != len(self.tokens):
            raise ValueError(
                f"{len(self.tokens)} tokens but {matrix.shape[0]} vectors")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("vectors must be finite")
        if self.kind not in (WORD, PHRASE):
            raise ValueError(f"unknown space kind {self.kind!r}")
        tokens = tuple(self.tokens)
        index = {}
        for i, tok in enumerate(tokens):
            check_token(tok)
            if tok in index:
                raise ValueError(f"duplicate token {tok!r}")
            index[tok] = i
        matrix.setflags(write=False)
        object.__setattr__(self, "tokens", tokens)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "index", index)

    @classmethod
    def from_dict(cls, entries: Mapping[str, Sequence[float]], kind=WORD):
        tokens = list(entries)
        if not tokens:
            raise ValueError("cannot build a space from no entries")
        return cls(tuple(tokens), np.array([entries[t] for t in tokens], dtype=np.float64), kind)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.index

    def lookup(self, token: str) -> Optional[np.ndarray]:
        i = self.index.get(token)
        return None if i is None else self.matrix[i]

    @cached_property
    def unit_matrix(self) -> np.ndarray:
        # zero rows stay zero, so they score cosine 0 against everything
        norms = np.linalg.norm(self.matrix, axis=1, keepdims=True)
        out = np.divide(self.matrix, norms, out=np.zeros_like(self.matrix), where=norms > 0)
        out.setflags(write=False)
        return out

    def scaled(self, factor: float) -> "VectorSpace":
        return VectorSpace(self.tokens, self.matrix * factor, self.kind)


def lookup(space: VectorSpace, token: str) -> Optional[np.ndarray]:
    return space.lookup(token)


def load_vectors(path, expected_dim: Optional[int] = None, lowercase: bool = False,
                 kind: str = WORD) -> VectorSpace:
    """Read a word2vec-style text file (``<count> <dim>`` header, then rows).

    Duplicate tokens keep their first vector; the number discarded is
    logged and stored on the returned space.  With ``lowercase`` tokens are
    case-folded before the duplicate check.
    """
    tokens = []
    rows = []
    seen = set()
    duplicates = 0
    with open(path, encoding="utf-8") as f:
        header = f.readline()
        if not header.strip():
            raise FormatError("empty vector file", path=path)
        parts = header.split()
        if len(parts) != 2:
            raise FormatError("header must be '<count> <dim>'", path=path, lineno=1)
        try:
            count, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise FormatError("header must hold two integers", path=path, lineno=1) from None
        if dim < 1 or count < 0:
            raise FormatError(f"bad header values {count} {dim}", path=path, lineno=1)
        if expected_dim is not None and dim != expected_dim:
            raise FormatError(f"dimension {dim} conflicts with expected {expected_dim}",
                              path=path, lineno=1)
        for lineno, line in enumerate(f, start=2):
            fields = line.split()
            if not fields:
                continue
            token, values = fields[0], fields[1:]
            if len(values) != dim:
                raise FormatError(
                    f"row has {len(values)} components, header says {dim}",
                    path=path, lineno=lineno)
            try:
                vec = [float(v) for v in values]
            except ValueError:
                raise FormatError(f"non-numeric component in row for {token!r}",
                                  path=path, lineno=lineno) from None
            if not all(math.isfinite(v) for v in vec):
                raise FormatError(f"non-finite component in row for {token!r}",
                                  path=path, lineno=lineno)
            if "|||" in token:
                raise FormatError(f"token {token!r} contains '|||'", path=path, lineno=lineno)
            if lowercase:
                token = token.lower()
            if token in seen:
                duplicates += 1
                continue
            seen.add(token)
            tokens.append(token)
            rows.append(vec)
    if not tokens:
        raise FormatError("vector file holds no rows", path=path)
    if count != len(tokens) + duplicates:
        logger.warning("%s: header announces %d rows, found %d", path, count,
                       len(tokens) + duplicates)
    if duplicates:
        logger.warning("%s: %d duplicate tokens ignored (first occurrence kept)",
                       path, duplicates)
    return VectorSpace(tuple(tokens), np.array(rows, dtype=np.float64), kind, duplicates)


def format_vector(values: Iterable[float]) -> str:
    return " ".join(_fmt(v) for v in values)


def _fmt(v: float) -> str:
    s = "%.6g" % v
    return "0" if s == "-0" else s


def save_vectors(space: VectorSpace, path) -> None:
    """Write ``space`` in the format read by :func:`load_vectors`.

    Rows are sorted lexicographically by token; components carry six
    significant digits.
    """
    if len(space) == 0:
        raise MonoScoreError("refusing to save an empty vector space")
    order = sorted(range(len(space)), key=lambda i: space.tokens[i])
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"{len(space)} {space.dim}\n")
        for i in order:
            f.write(space.tokens[i] + " " + format_vector(space.matrix[i]) + "\n")


def cosine(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("cosine undefined for a zero vector")
    c = float(np.dot(a, b) / (na * nb))
    return min(1.0, max(-1.0, c))


@dataclass(frozen=True)
class PhraseVectorizer:
    """Maps a token sequence to one fixed-size vector.

    ``average`` takes the mean of the in-vocabulary word vectors;
    ``paragraph`` runs paragraph-vector inference with ``pv_model``.
    """

    word_space: VectorSpace
    strategy: str = AVERAGE
    pv_model: Optional["PVModel"] = None

    def __post_init__(self):
        if self.strategy not in (AVERAGE, PARAGRAPH):
            raise ValueError(f"unknown phrase strategy {self.strategy!r}")

    @property
    def dim(self) -> int:
        return self.word_space.dim

    def __call__(self, phrase: Sequence[str]) -> Optional[np.ndarray]:
        return vectorize_phrase(self, phrase)


def vectorize_phrase(vz: PhraseVectorizer, phrase: Sequence[str]) -> Optional[np.ndarray]:
    if isinstance(phrase, str):
        phrase = phrase.split()
    if len(phrase) == 0:
        raise ValueError("cannot vectorize an empty phrase")
    if vz.strategy == PARAGRAPH:
        if vz.pv_model is None:
            return None
        from .embedtrain import infer_paragraph
        try:
            return infer_paragraph(vz.pv_model, phrase)
        except MonoScoreError:
            return None
    index = vz.word_space.index
    rows = [index[t] for t in phrase if t in index]
    if not rows:
        return None
    if len(rows) == 1:
        return vz.word_space.matrix[rows[0]].copy()
    return vz.word_space.matrix[rows].mean(axis=0)
