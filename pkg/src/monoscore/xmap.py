"""Linear cross-lingual projection: learn ``z ~ W x`` from seed pairs.

Matrices are stored as ``w`` of shape (d_src, d_tgt) and act on row
vectors, so ``project(m, x) == x @ m.w``.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from .errors import FormatError, MonoScoreError, OOVError, SingularSystemError
from .vecspace import PhraseVectorizer, VectorSpace, vectorize_phrase

logger = logging.getLogger(__name__)

SRC2TGT = "src2tgt"
TGT2SRC = "tgt2src"
DIRECTIONS = (SRC2TGT, TGT2SRC)
LEVELS = ("word", "phrase")
DICTIONARY = "dictionary"
PARALLEL = "parallel-short-sentences"


@dataclass
class SeedPairs:
    """Deduplicated (source, target) seed pairs, order of first appearance kept."""

    pairs: List[Tuple[str, str]]
    provenance: str = DICTIONARY

    def __post_init__(self):
        seen = set()
        unique = []
        for src, tgt in self.pairs:
            if (src, tgt) not in seen:
                seen.add((src, tgt))
                unique.append((src, tgt))
        self.pairs = unique

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def swapped(self) -> "SeedPairs":
        return SeedPairs([(t, s) for s, t in self.pairs], self.provenance)


def read_seed_pairs(path, provenance: str = DICTIONARY) -> SeedPairs:
    pairs = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                raise FormatError("expected 'source<TAB>target'", path=path, lineno=lineno)
            pairs.append((parts[0].strip(), parts[1].strip()))
    return SeedPairs(pairs, provenance)


def write_seed_pairs(pairs: Iterable[Tuple[str, str]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for src, tgt in pairs:
            f.write(f"{src}\t{tgt}\n")


def select_word_seeds(pairs: SeedPairs, frequencies: Dict[str, int], n: int = 10000) -> SeedPairs:
    """Keep the pairs whose source word is among the ``n`` most frequent."""
    ranked = sorted({s for s, _ in pairs}, key=lambda w: (-frequencies.get(w, 0), w))
    keep = set(w for w in ranked[:n] if frequencies.get(w, 0) > 0)
    return SeedPairs([p for p in pairs if p[0] in keep], DICTIONARY)


def select_sentence_seeds(pairs: SeedPairs, n: int = 5000, min_len: int = 1,
                          max_len: int = 8, seed: int = 0) -> SeedPairs:
    """Randomly pick ``n`` unique sentence pairs of ``min_len``..``max_len`` tokens per side."""
    eligible = [p for p in pairs
                if min_len <= len(p[0].split()) <= max_len
                and min_len <= len(p[1].split()) <= max_len]
    rng = np.random.default_rng(seed)
    if len(eligible) > n:
        idx = np.sort(rng.choice(len(eligible), size=n, replace=False))
        eligible = [eligible[i] for i in idx]
    return SeedPairs(eligible, PARALLEL)


def word_frequencies(corpus: Iterable[Sequence[str]]) -> Counter:
    return Counter(tok for sent in corpus for tok in sent)


def _vector(side, text: str):
    if isinstance(side, PhraseVectorizer):
        return vectorize_phrase(side, text.split())
    return side.lookup(text)


def resolve_pairs(pairs: SeedPairs, src, tgt):
    """Stack the vectors of every pair whose both sides resolve.

    ``src``/``tgt`` are VectorSpaces (exact token lookup) or
    PhraseVectorizers (multi-word text).  Returns ``(X, Z, dropped)``.
    """
    xs, zs = [], []
    dropped = 0
    for s, t in pairs:
        x = _vector(src, s)
        z = _vector(tgt, t)
        if x is None or z is None:
            dropped += 1
            continue
        xs.append(x)
        zs.append(z)
    if dropped:
        logger.info("dropped %d of %d seed pairs with an unresolvable side", dropped, len(pairs))
    d_src, d_tgt = src.dim, tgt.dim
    return (np.array(xs, dtype=np.float64).reshape(-1, d_src),
            np.array(zs, dtype=np.float64).reshape(-1, d_tgt), dropped)


@dataclass
class TrainingReport:
    pairs: int
    dropped: int
    loss: float
    solver: str
    params: Dict[str, object] = field(default_factory=dict)

    def lines(self) -> List[str]:
        out = [f"pairs = {self.pairs}", f"dropped = {self.dropped}",
               f"loss = {self.loss:.10g}", f"solver = {self.solver}"]
        out += [f"{k} = {v}" for k, v in self.params.items()]
        return out


@dataclass(eq=False)
class ProjectionMatrix:
    w: np.ndarray
    direction: str = SRC2TGT
    level: str = "word"
    report: Optional[TrainingReport] = None

    def __post_init__(self):
        w = np.array(self.w, dtype=np.float64)
        if w.ndim != 2:
            raise ValueError("projection matrix must be 2-D")
        if not np.all(np.isfinite(w)):
            raise ValueError("projection matrix has non-finite entries")
        if self.direction not in DIRECTIONS:
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.level not in LEVELS:
            raise ValueError(f"unknown level {self.level!r}")
        w.setflags(write=False)
        self.w = w

    @property
    def d_src(self) -> int:
        return self.w.shape[0]

    @property
    def d_tgt(self) -> int:
        return self.w.shape[1]

    @classmethod
    def identity(cls, dim, direction=SRC2TGT, level="word"):
        return cls(np.eye(dim), direction, level)


def squared_loss(w: np.ndarray, x: np.ndarray, z: np.ndarray) -> float:
    r = x @ w - z
    return float(np.sum(r * r))


def pair_loss_and_gradient(w: np.ndarray, x: np.ndarray, z: np.ndarray):
    """``||x W - z||^2`` for one pair and its gradient with respect to ``w``."""
    r = x @ w - z
    return float(r @ r), 2.0 * np.outer(x, r)


def train_projection_closed_form(pairs: SeedPairs, src, tgt, ridge: float = 1e-3,
                                 direction: str = SRC2TGT, level: str = "word",
                                 min_pairs: int = 1) -> ProjectionMatrix:
    """Exact minimiser of ``sum ||W x_i - z_i||^2 + ridge ||W||_F^2``."""
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    x, z, dropped = resolve_pairs(pairs, src, tgt)
    n, d = x.shape
    if n < max(1, min_pairs):
        raise MonoScoreError(f"only {n} resolvable seed pairs (need {max(1, min_pairs)})")
    if ridge == 0:
        if n < d or np.linalg.matrix_rank(x) < d:
            raise SingularSystemError(
                f"{n} pairs of rank {np.linalg.matrix_rank(x)} cannot determine a "
                f"{d}-dimensional map without ridge")
        w = np.linalg.lstsq(x, z, rcond=None)[0]
    else:
        gram = x.T @ x + ridge * np.eye(d)
        w = np.linalg.solve(gram, x.T @ z)
    loss = squared_loss(w, x, z)
    report = TrainingReport(n, dropped, loss, "closed", {"ridge": ridge})
    return ProjectionMatrix(w, direction, level, report)


def train_projection_sgd(pairs: SeedPairs, src, tgt, epochs: int = 500,
                         learning_rate: float = 1.0, seed: int = 0,
                         batch_size: Optional[int] = None, direction: str = SRC2TGT,
                         level: str = "word", min_pairs: int = 1) -> ProjectionMatrix:
    """Gradient descent on the mean squared projection error, from ``W = 0``.

    The step is ``learning_rate / L`` with ``L`` a Lipschitz bound of the
    batch gradient: the exact top Hessian eigenvalue for full-batch descent
    (``batch_size=None``), twice the largest squared input norm otherwise.
    Minibatch order is shuffled per epoch from ``seed``.
    """
    if epochs < 0:
        raise ValueError("epochs must be non-negative")
    if not learning_rate > 0:
        raise ValueError("learning_rate must be positive")
    x, z, dropped = resolve_pairs(pairs, src, tgt)
    n, d = x.shape
    if n < max(1, min_pairs):
        raise MonoScoreError(f"only {n} resolvable seed pairs (need {max(1, min_pairs)})")
    w = np.zeros((d, z.shape[1]))
    if batch_size is None or batch_size >= n:
        bs = n
        lipschitz = 2.0 * np.linalg.eigvalsh(x.T @ x / n)[-1]
    else:
        bs = batch_size
        lipschitz = 2.0 * np.max(np.sum(x * x, axis=1))
    step = learning_rate / lipschitz if lipschitz > 0 else 0.0
    rng = np.random.default_rng(seed)
    for _ in range(epochs):
        order = rng.permutation(n) if bs < n else np.arange(n)
        for start in range(0, n, bs):
            idx = order[start:start + bs]
            xb, zb = x[idx], z[idx]
            grad = 2.0 * xb.T @ (xb @ w - zb) / len(idx)
            w -= step * grad
    loss = squared_loss(w, x, z)
    report = TrainingReport(n, dropped, loss, "sgd",
                            {"epochs": epochs, "learning_rate": learning_rate,
                             "batch_size": bs, "seed": seed})
    return ProjectionMatrix(w, direction, level, report)


def project(m: ProjectionMatrix, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != m.d_src:
        raise ValueError(f"vector of dimension {x.shape[-1]} for a {m.d_src}-dim source space")
    return x @ m.w


def _lex_rank(space: VectorSpace) -> np.ndarray:
    order = sorted(range(len(space)), key=lambda i: space.tokens[i])
    rank = np.empty(len(space), dtype=np.int64)
    rank[order] = np.arange(len(space))
    return rank


def induce_translations(m: ProjectionMatrix, src: VectorSpace, tgt: VectorSpace,
                        token: str, k: int = 1) -> List[Tuple[str, float]]:
    """Top-``k`` target tokens by cosine to the projected source vector.

    Ties are broken by token order; ``k`` beyond the vocabulary returns
    the full ranking.
    """
    if k < 1:
        raise ValueError("k must be positive")
    x = src.lookup(token)
    if x is None:
        raise OOVError(f"{token!r} is not in the source space")
    z = project(m, x)
    norm = np.linalg.norm(z)
    if norm == 0:
        raise ValueError(f"projection of {token!r} is the zero vector")
    cos = np.clip(tgt.unit_matrix @ (z / norm), -1.0, 1.0)
    order = np.lexsort((_lex_rank(tgt), -cos))[:k]
    return [(tgt.tokens[i], float(cos[i])) for i in order]


def precision_at_k(m: ProjectionMatrix, src: VectorSpace, tgt: VectorSpace,
                   gold: Dict[str, Set[str]], k: int = 1) -> Tuple[float, int]:
    """Fraction of in-vocabulary gold sources with a gold target in the top ``k``.

    Returns ``(precision, evaluated_count)``.
    """
    hits = 0
    total = 0
    for s in sorted(gold):
        if s not in src:
            continue
        total += 1
        top = {t for t, _ in induce_translations(m, src, tgt, s, k)}
        hits += bool(top & gold[s])
    return (hits / total if total else 0.0), total


def save_matrix(m: ProjectionMatrix, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"{m.d_src} {m.d_tgt} {m.direction} {m.level}\n")
        for row in m.w:
            f.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_matrix(path) -> ProjectionMatrix:
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 4:
            raise FormatError("header must be '<d_src> <d_tgt> <direction> <level>'",
                              path=path, lineno=1)
        try:
            d_src, d_tgt = int(header[0]), int(header[1])
        except ValueError:
            raise FormatError("matrix dimensions must be integers", path=path, lineno=1) from None
        direction, level = header[2], header[3]
        if direction not in DIRECTIONS or level not in LEVELS:
            raise FormatError(f"bad direction/level {direction} {level}", path=path, lineno=1)
        rows = []
        for lineno, line in enumerate(f, start=2):
            if not line.strip():
                continue
            try:
                row = [float(v) for v in line.split()]
            except ValueError:
                raise FormatError("non-numeric matrix entry", path=path, lineno=lineno) from None
            if len(row) != d_tgt:
                raise FormatError(f"row has {len(row)} entries, expected {d_tgt}",
                                  path=path, lineno=lineno)
            rows.append(row)
    if len(rows) != d_src:
        raise FormatError(f"found {len(rows)} rows, header says {d_src}", path=path)
    try:
        return ProjectionMatrix(np.array(rows), direction, level)
    except ValueError as exc:
        raise FormatError(str(exc), path=path) from None
