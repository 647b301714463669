"""Random phrase pairs shared by the unit and acceptance tests."""

import numpy as np

from monoscore.phrasetable import PhrasePair

ALPHABET = list("abcdefghijklmnopqrstuvwxyz") + ["é", "ß", "ж", "中", "'", ".", "-", "&"]


def random_token(rng):
    return "".join(rng.choice(ALPHABET, size=int(rng.integers(1, 6))))


def random_pair(rng, max_len=6, n_scores=4, extras=True):
    src = [random_token(rng) for _ in range(int(rng.integers(1, max_len + 1)))]
    tgt = [random_token(rng) for _ in range(int(rng.integers(1, max_len + 1)))]
    scores = [float("%.6g" % v) for v in rng.uniform(0, 1, n_scores) * 10.0 ** rng.integers(-8, 2)]
    links = sorted({(int(rng.integers(len(src))), int(rng.integers(len(tgt))))
                    for _ in range(int(rng.integers(0, 5)))})
    raw = []
    if extras and rng.random() < 0.4:
        raw = ["%d %d %d" % tuple(rng.integers(1, 100, 3))]
        if links == [] and rng.random() < 0.5:
            raw = []
        if rng.random() < 0.3:
            raw.append("")
    return PhrasePair(src, tgt, scores, links, raw)
