"""Seeded toy bilingual worlds with a known rotation between the two spaces.

Source vectors have i.i.d. N(0, 1/dim) components (norm close to 1);
target vectors are ``R x + e`` for a random rotation ``R`` and noise ``e``
with N(0, noise^2/dim) components, so ``noise`` is relative to the vector
norm.  Token ``s017`` translates to ``t017``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Dict, List, Set, Tuple

import numpy as np

from .phrasetable import LexiconEntry, PhrasePair, emit_phrase_table_line, write_lexicon
from .vecspace import VectorSpace, save_vectors
from .xmap import write_seed_pairs

FILES = {
    "src_vectors": "src.vec",
    "tgt_vectors": "tgt.vec",
    "gold": "gold.tsv",
    "word_seeds": "word_seeds.tsv",
    "phrase_seeds": "phrase_seeds.tsv",
    "table": "table.txt",
    "lexicon": "lexicon.txt",
    "queries": "queries.txt",
}


def random_rotation(dim: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


@dataclass
class SyntheticWorld:
    src: VectorSpace
    tgt: VectorSpace
    rotation: np.ndarray
    gold: List[Tuple[str, str]]
    sentences: List[Tuple[str, str]]
    table: List[PhrasePair]
    matched: List[bool]
    lexicon: List[LexiconEntry]
    params: Dict[str, object] = field(default_factory=dict)

    def gold_dict(self) -> Dict[str, Set[str]]:
        out: Dict[str, Set[str]] = {}
        for s, t in self.gold:
            out.setdefault(s, set()).add(t)
        return out


def _src_name(i, width):
    return f"s{i:0{width}d}"


def _tgt_name(i, width):
    return f"t{i:0{width}d}"


def _round6(x: float) -> float:
    return float("%.6g" % x)


def make_world(dim: int = 50, vocab_size: int = 200, noise: float = 0.0, seed: int = 0,
               n_phrases: int = 200, distractors: int = 2, n_sentences: int = 500,
               max_phrase_len: int = 3) -> SyntheticWorld:
    if dim < 1 or vocab_size < 2:
        raise ValueError("dim must be >= 1 and vocab_size >= 2")
    if not noise >= 0:
        raise ValueError("noise must be non-negative")
    if n_phrases < 0 or distractors < 0 or n_sentences < 0 or max_phrase_len < 1:
        raise ValueError("counts must be non-negative and max_phrase_len >= 1")
    rng = np.random.default_rng(seed)
    width = len(str(vocab_size - 1))
    x = rng.standard_normal((vocab_size, dim)) / np.sqrt(dim)
    rot = random_rotation(dim, rng)
    z = x @ rot.T + rng.standard_normal((vocab_size, dim)) * (noise / np.sqrt(dim))
    src_tokens = tuple(_src_name(i, width) for i in range(vocab_size))
    tgt_tokens = tuple(_tgt_name(i, width) for i in range(vocab_size))
    src = VectorSpace(src_tokens, x)
    tgt = VectorSpace(tgt_tokens, z)
    gold = list(zip(src_tokens, tgt_tokens))

    def words(n):
        return rng.integers(0, vocab_size, size=n)

    sentences = []
    seen = set()
    for _ in range(n_sentences):
        ids = words(int(rng.integers(1, 9)))
        pair = (" ".join(src_tokens[i] for i in ids), " ".join(tgt_tokens[i] for i in ids))
        if pair not in seen:
            seen.add(pair)
            sentences.append(pair)

    table, matched = [], []
    for _ in range(n_phrases):
        ids = words(int(rng.integers(1, max_phrase_len + 1)))
        src_phrase = [src_tokens[i] for i in ids]
        rows = [(ids, True)]
        for _ in range(distractors):
            other = words(int(rng.integers(1, max_phrase_len + 1)))
            rows.append((other, False))
        for k in rng.permutation(len(rows)):
            tgt_ids, is_gold = rows[k]
            n = min(len(ids), len(tgt_ids))
            scores = [_round6(v) for v in rng.uniform(0.01, 1.0, size=4)]
            table.append(PhrasePair(list(src_phrase), [tgt_tokens[i] for i in tgt_ids], scores,
                                    [(i, i) for i in range(n)]))
            matched.append(is_gold)

    lexicon = []
    used = set()
    for s, t in gold:
        lexicon.append(LexiconEntry(s, t, _round6(rng.uniform(0.3, 1.0))))
        used.add((s, t))
    for _ in range(vocab_size):
        i, j = words(2)
        if (src_tokens[i], tgt_tokens[j]) not in used:
            used.add((src_tokens[i], tgt_tokens[j]))
            lexicon.append(LexiconEntry(src_tokens[i], tgt_tokens[j], _round6(rng.uniform(0.0, 0.1))))
    for j in range(0, vocab_size, 10):
        lexicon.append(LexiconEntry("NULL", tgt_tokens[j], _round6(rng.uniform(0.0, 0.05))))

    params = {"dim": dim, "vocab_size": vocab_size, "noise": noise, "seed": seed,
              "n_phrases": n_phrases, "n_sentences": n_sentences}
    return SyntheticWorld(src, tgt, rot, gold, sentences, table, matched, lexicon, params)


def write_world(world: SyntheticWorld, outdir) -> Dict[str, str]:
    """Write every artifact of ``world`` under ``outdir``; returns name -> path."""
    os.makedirs(outdir, exist_ok=True)
    paths = {k: os.path.join(outdir, v) for k, v in FILES.items()}
    save_vectors(world.src, paths["src_vectors"])
    save_vectors(world.tgt, paths["tgt_vectors"])
    write_seed_pairs(world.gold, paths["gold"])
    write_seed_pairs(world.gold, paths["word_seeds"])
    write_seed_pairs(world.sentences, paths["phrase_seeds"])
    with open(paths["table"], "w", encoding="utf-8", newline="\n") as fh:
        for pair in world.table:
            fh.write(emit_phrase_table_line(pair) + "\n")
    write_lexicon(world.lexicon, paths["lexicon"])
    with open(paths["queries"], "w", encoding="utf-8", newline="\n") as fh:
        for s, _ in world.gold:
            fh.write(s + "\n")
    return paths
