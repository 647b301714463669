"""Desk-scale word2vec (skipgram / CBOW, negative sampling) and PV-DM inference.

All three models share one objective.  A hidden vector ``h`` is the mean of
one or more input rows (the centre word for skipgram, the context words for
CBOW, the context words plus a paragraph vector for PV-DM) and is scored
against the output row of a target word and ``K`` sampled negatives::

    loss = -log sigmoid(h . u_target) - sum_k log sigmoid(-h . u_neg_k)

Training is single-threaded minibatch SGD with a linearly decaying step and
is bit-deterministic for a fixed seed.
"""

from __future__ import annotations

import logging
import zlib
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import numpy as np
from scipy import sparse

from .errors import MonoScoreError, OOVError
from .vecspace import WORD, VectorSpace

logger = logging.getLogger(__name__)

SKIPGRAM = "skipgram"
CBOW = "cbow"


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 200
    window: int = 5
    epochs: int = 30
    negative_samples: int = 5
    learning_rate: float = 0.025
    seed: int = 1
    min_count: int = 1
    model: str = SKIPGRAM
    batch_size: int = 64
    vectors: str = "sum"

    def __post_init__(self):
        if self.dim < 1 or self.window < 1 or self.epochs < 1:
            raise ValueError("dim, window and epochs must all be >= 1")
        if self.negative_samples < 0 or self.min_count < 0:
            raise ValueError("negative_samples and min_count must be >= 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.model not in (SKIPGRAM, CBOW):
            raise ValueError(f"unknown model {self.model!r}")
        if self.vectors not in ("sum", "input"):
            raise ValueError(f"unknown vector export {self.vectors!r}")


@dataclass
class Batch:
    """Training examples in padded array form.

    ``inputs``/``input_mask`` are (B, C); ``targets`` is (B,);
    ``negatives``/``neg_mask`` are (B, K).  Masked-out entries are ignored.
    """

    inputs: np.ndarray
    input_mask: np.ndarray
    targets: np.ndarray
    negatives: np.ndarray
    neg_mask: np.ndarray

    def __len__(self):
        return len(self.targets)

    def take(self, idx) -> "Batch":
        return Batch(self.inputs[idx], self.input_mask[idx], self.targets[idx],
                     self.negatives[idx], self.neg_mask[idx])

    @classmethod
    def concat(cls, batches: Sequence["Batch"]) -> "Batch":
        return cls(*(np.concatenate([getattr(b, name) for b in batches])
                     for name in ("inputs", "input_mask", "targets", "negatives", "neg_mask")))


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _hidden_terms(h, w_out, batch: Batch):
    """Loss and gradients for hidden vectors ``h`` of shape (B, dim).

    Returns (loss, grad_h, grad_target_rows, grad_negative_rows).
    """
    u_t = w_out[batch.targets]                      # (B, d)
    u_n = w_out[batch.negatives]                    # (B, K, d)
    s_t = np.einsum("bd,bd->b", h, u_t)
    s_n = np.einsum("bd,bkd->bk", h, u_n)
    nmask = batch.neg_mask.astype(np.float64)
    loss = -np.sum(_log_sigmoid(s_t)) - np.sum(_log_sigmoid(-s_n) * nmask)
    c_t = _sigmoid(s_t) - 1.0                       # d loss / d s_t
    c_n = _sigmoid(s_n) * nmask                     # d loss / d s_n
    grad_h = c_t[:, None] * u_t + np.einsum("bk,bkd->bd", c_n, u_n)
    g_t = c_t[:, None] * h
    g_n = c_n[:, :, None] * h[:, None, :]
    return float(loss), grad_h, g_t, g_n


def scatter_add(target: np.ndarray, rows: np.ndarray, values: np.ndarray) -> None:
    """``target[rows[i]] += values[i]`` with repeated rows accumulated."""
    rows = rows.reshape(-1)
    if len(rows) == 0:
        return
    values = values.reshape(len(rows), -1)
    uniq, inv = np.unique(rows, return_inverse=True)
    sel = sparse.csr_matrix((np.ones(len(rows)), (inv, np.arange(len(rows)))),
                            shape=(len(uniq), len(rows)))
    target[uniq] += sel @ values


def _hidden(w_in, batch: Batch):
    mask = batch.input_mask.astype(np.float64)
    counts = mask.sum(axis=1, keepdims=True)
    h = np.einsum("bc,bcd->bd", mask, w_in[batch.inputs]) / counts
    return h, mask / counts


def loss_and_gradient(w_in: np.ndarray, w_out: np.ndarray, batch: Batch):
    """Summed negative-sampling loss of ``batch`` and its dense gradients.

    Returns ``(loss, (grad_in, grad_out))`` where the gradients have the
    shapes of ``w_in`` and ``w_out``.
    """
    h, weights = _hidden(w_in, batch)
    loss, grad_h, g_t, g_n = _hidden_terms(h, w_out, batch)
    grad_in = np.zeros_like(w_in)
    scatter_add(grad_in, batch.inputs, weights[:, :, None] * grad_h[:, None, :])
    grad_out = np.zeros_like(w_out)
    scatter_add(grad_out, batch.targets, g_t)
    scatter_add(grad_out, batch.negatives, g_n)
    return loss, (grad_in, grad_out)


@dataclass
class Vocabulary:
    tokens: List[str]
    counts: np.ndarray
    index: dict = field(init=False)

    def __post_init__(self):
        self.index = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self):
        return len(self.tokens)

    @classmethod
    def build(cls, corpus: Iterable[Sequence[str]], min_count: int = 1) -> "Vocabulary":
        counter = Counter(tok for sent in corpus for tok in sent)
        kept = sorted((t for t, c in counter.items() if c >= min_count),
                      key=lambda t: (-counter[t], t))
        return cls(kept, np.array([counter[t] for t in kept], dtype=np.float64))

    def noise_distribution(self) -> np.ndarray:
        p = self.counts ** 0.75
        return p / p.sum()


class NegativeSampler:
    def __init__(self, probs: np.ndarray, k: int):
        self.cdf = np.cumsum(probs)
        self.cdf[-1] = 1.0
        self.k = k

    def sample(self, rng: np.random.Generator, targets: np.ndarray):
        neg = np.searchsorted(self.cdf, rng.random((len(targets), self.k)), side="right")
        # a negative equal to the target carries no signal
        return neg, neg != targets[:, None]


def _examples(corpus, vocab: Vocabulary, window: int, model: str):
    """Fixed-window (input, target) examples without negatives."""
    inputs, masks, targets = [], [], []
    width = 1 if model == SKIPGRAM else 2 * window
    for sent in corpus:
        ids = [vocab.index[t] for t in sent if t in vocab.index]
        n = len(ids)
        for pos, centre in enumerate(ids):
            lo, hi = max(0, pos - window), min(n, pos + window + 1)
            ctx = [ids[j] for j in range(lo, hi) if j != pos]
            if not ctx:
                continue
            if model == SKIPGRAM:
                for c in ctx:
                    inputs.append([centre])
                    masks.append([True])
                    targets.append(c)
            else:
                pad = width - len(ctx)
                inputs.append(ctx + [0] * pad)
                masks.append([True] * len(ctx) + [False] * pad)
                targets.append(centre)
    if not targets:
        return None
    return (np.array(inputs, dtype=np.int64).reshape(-1, width),
            np.array(masks, dtype=bool).reshape(-1, width),
            np.array(targets, dtype=np.int64))


@dataclass
class WordModel:
    """Trained parameters plus the per-epoch mean loss history."""

    vocab: Vocabulary
    w_in: np.ndarray
    w_out: np.ndarray
    config: TrainConfig
    epoch_losses: List[float]

    def to_space(self) -> VectorSpace:
        """Export word vectors.

        ``sum`` (default) adds input and output rows, which places words that
        co-occur next to each other; ``input`` keeps the input rows only.
        """
        vecs = self.w_in + self.w_out if self.config.vectors == "sum" else self.w_in.copy()
        return VectorSpace(tuple(self.vocab.tokens), vecs, WORD)


def train_word_model(corpus: Sequence[Sequence[str]], cfg: TrainConfig) -> WordModel:
    corpus = [list(s) for s in corpus]
    vocab = Vocabulary.build(corpus, cfg.min_count)
    if len(vocab) == 0:
        raise MonoScoreError("corpus has no token with frequency >= min_count")
    ex = _examples(corpus, vocab, cfg.window, cfg.model)
    if ex is None:
        raise MonoScoreError("corpus yields no (word, context) examples")
    inputs, masks, targets = ex
    rng = np.random.default_rng(cfg.seed)
    v, d = len(vocab), cfg.dim
    w_in = (rng.random((v, d)) - 0.5) / d
    w_out = np.zeros((v, d))
    sampler = NegativeSampler(vocab.noise_distribution(), cfg.negative_samples)

    n = len(targets)
    steps_per_epoch = -(-n // cfg.batch_size)
    total = steps_per_epoch * cfg.epochs
    step = 0
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            neg, nmask = sampler.sample(rng, targets[idx])
            batch = Batch(inputs[idx], masks[idx], targets[idx], neg, nmask)
            lr = cfg.learning_rate * max(1e-4, 1.0 - step / total)
            epoch_loss += _sgd_step(w_in, w_out, batch, lr)
            step += 1
        history.append(epoch_loss / n)
        logger.debug("epoch %d mean loss %.6f", epoch + 1, history[-1])
    return WordModel(vocab, w_in, w_out, cfg, history)


def _sgd_step(w_in, w_out, batch: Batch, lr: float) -> float:
    h, weights = _hidden(w_in, batch)
    loss, grad_h, g_t, g_n = _hidden_terms(h, w_out, batch)
    out_rows = np.concatenate([batch.targets, batch.negatives.reshape(-1)])
    out_grads = np.concatenate([g_t, g_n.reshape(-1, g_t.shape[1])])
    scatter_add(w_out, out_rows, -lr * out_grads)
    scatter_add(w_in, batch.inputs, (-lr * weights)[:, :, None] * grad_h[:, None, :])
    return loss


def train_word_vectors(corpus: Sequence[Sequence[str]], cfg: TrainConfig) -> VectorSpace:
    """Train word vectors and return them as a space (see WordModel.to_space)."""
    return train_word_model(corpus, cfg).to_space()


def read_corpus(path) -> List[List[str]]:
    with open(path, encoding="utf-8") as f:
        return [line.split() for line in f if line.strip()]


@dataclass(frozen=True, eq=False)
class PVModel:
    """Frozen word-model parameters used for paragraph-vector inference."""

    vocab: Vocabulary
    w_in: np.ndarray
    w_out: np.ndarray
    window: int = 5
    negative_samples: int = 5
    steps: int = 50
    learning_rate: float = 0.025
    seed: int = 1

    def __post_init__(self):
        for name in ("w_in", "w_out"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_word_model(cls, model: WordModel, **kwargs) -> "PVModel":
        kwargs.setdefault("window", model.config.window)
        kwargs.setdefault("negative_samples", model.config.negative_samples)
        kwargs.setdefault("seed", model.config.seed)
        return cls(model.vocab, model.w_in, model.w_out, **kwargs)

    @property
    def dim(self) -> int:
        return self.w_in.shape[1]

    def save(self, path) -> None:
        # a file object stops numpy from appending ".npz" to the name
        with open(path, "wb") as fh:
            np.savez(fh, tokens=np.array(self.vocab.tokens), counts=self.vocab.counts,
                     w_in=self.w_in, w_out=self.w_out,
                     params=np.array([self.window, self.negative_samples, self.steps, self.seed]),
                     learning_rate=np.array(self.learning_rate))

    @classmethod
    def load(cls, path) -> "PVModel":
        with np.load(path, allow_pickle=False) as z:
            window, neg, steps, seed = (int(x) for x in z["params"])
            vocab = Vocabulary([str(t) for t in z["tokens"]], z["counts"])
            return cls(vocab, z["w_in"], z["w_out"], window, neg, steps,
                       float(z["learning_rate"]), seed)


def infer_paragraph(pv: PVModel, text: Sequence[str]) -> np.ndarray:
    """Infer a paragraph vector for ``text`` with word parameters frozen.

    Each in-vocabulary position predicts its word from the mean of the
    paragraph vector and its context words.  The objective is convex in the
    paragraph vector, so it starts at zero; only negative sampling draws
    from the random stream, seeded by ``pv.seed`` and the text itself.
    """
    ids = [pv.vocab.index[t] for t in text if t in pv.vocab.index]
    if not ids:
        raise OOVError(f"no token of {' '.join(text)!r} is in the vocabulary")
    n, d = len(ids), pv.dim
    ctx_rows, ctx_w = [], []
    for pos in range(n):
        lo, hi = max(0, pos - pv.window), min(n, pos + pv.window + 1)
        ctx = [ids[j] for j in range(lo, hi) if j != pos]
        ctx_rows.append(pv.w_in[ctx].sum(axis=0) if ctx else np.zeros(d))
        ctx_w.append(1.0 / (len(ctx) + 1))
    ctx_sum = np.array(ctx_rows)
    share = np.array(ctx_w)[:, None]
    targets = np.array(ids, dtype=np.int64)

    key = zlib.crc32(" ".join(text).encode("utf-8"))
    rng = np.random.default_rng([pv.seed, key])
    vec = np.zeros(d)
    probs = pv.vocab.noise_distribution()
    sampler = NegativeSampler(probs, pv.negative_samples)
    dummy = np.zeros((n, 1), dtype=np.int64)
    dmask = np.ones((n, 1), dtype=bool)
    for step in range(pv.steps):
        lr = pv.learning_rate * max(1e-4, 1.0 - step / pv.steps)
        neg, nmask = sampler.sample(rng, targets)
        batch = Batch(dummy, dmask, targets, neg, nmask)
        h = (ctx_sum + vec) * share
        _, grad_h, _, _ = _hidden_terms(h, pv.w_out, batch)
        vec = vec - lr * np.sum(grad_h * share, axis=0)
    return vec
