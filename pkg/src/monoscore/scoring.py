"""Monolingual phrase-table features and table rescoring.

Four features are produced, always in this order::

    mono-phrase-direct   cos(W_pd . v(src phrase), v(tgt phrase))
    mono-lex-direct      lexical weighting over source words, sim = cos(W_wd x_f, z_e)
    mono-phrase-inverse  cos(W_pi . v(tgt phrase), v(src phrase))
    mono-lex-inverse     lexical weighting over target words, sim = cos(W_wi z_e, x_f)

Similarities are clamped below at ``cosine_floor``.  Lexical weighting
averages the similarities of a word's alignment links, uses
``null_align_constant`` for unaligned words and multiplies the factors.
"""

from __future__ import annotations

import logging
import os
import time
from collections import OrderedDict
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import MonoScoreError, UnscorableError
from .phrasetable import (MAX_PHRASE_LENGTH, NULL, SEP, LexiconEntry, PhrasePair,
                          emit_phrase_table_line, format_score, parse_lexicon, stream_table)
from .vecspace import PhraseVectorizer, VectorSpace
from .xmap import ProjectionMatrix, project

logger = logging.getLogger(__name__)

PHRASE_DIRECT = "mono-phrase-direct"
LEX_DIRECT = "mono-lex-direct"
PHRASE_INVERSE = "mono-phrase-inverse"
LEX_INVERSE = "mono-lex-inverse"
FEATURES = (PHRASE_DIRECT, LEX_DIRECT, PHRASE_INVERSE, LEX_INVERSE)

DIRECT = "direct"
INVERSE = "inverse"
REPLACE = "replace"
APPEND = "append"
FLOOR = "floor"
DROP = "drop-pair"

# replace-mode feature sets compared in ablations
ABLATIONS = {
    "phrase-direct": (PHRASE_DIRECT,),
    "phrase-both": (PHRASE_DIRECT, PHRASE_INVERSE),
    "direct-both": (PHRASE_DIRECT, LEX_DIRECT),
    "all": FEATURES,
}


def parse_features(text: str) -> Tuple[str, ...]:
    names = [t.strip() for t in text.replace(",", " ").split() if t.strip()]
    if names == ["all"]:
        return FEATURES
    unknown = [n for n in names if n not in FEATURES]
    if unknown:
        raise ValueError(f"unknown feature(s) {', '.join(unknown)}; choose from {', '.join(FEATURES)}")
    if not names:
        raise ValueError("no features selected")
    return tuple(f for f in FEATURES if f in names)


@dataclass(frozen=True)
class ScoreConfig:
    cosine_floor: float = 1e-4
    null_align_constant: float = 1e-3
    mode: str = REPLACE
    features: Tuple[str, ...] = FEATURES
    oov_policy: str = FLOOR

    def __post_init__(self):
        if not 0 < self.cosine_floor < 1:
            raise ValueError("cosine_floor must lie in (0, 1)")
        if not 0 < self.null_align_constant <= 1:
            raise ValueError("null_align_constant must lie in (0, 1]")
        if self.mode not in (REPLACE, APPEND):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.oov_policy not in (FLOOR, DROP):
            raise ValueError(f"unknown oov policy {self.oov_policy!r}")
        feats = tuple(self.features)
        if not feats or any(f not in FEATURES for f in feats):
            raise ValueError(f"features must be a non-empty subset of {FEATURES}")
        object.__setattr__(self, "features", tuple(f for f in FEATURES if f in feats))

    @property
    def emitted(self) -> Tuple[str, ...]:
        return FEATURES if self.mode == APPEND else self.features


def _clamped_cosine(a, b, cfg: ScoreConfig) -> Tuple[float, bool]:
    """(max(cos, floor), floor_hit); unscorable inputs go through the OOV policy."""
    if a is not None and b is not None:
        na = np.linalg.norm(a)
        nb = np.linalg.norm(b)
        if na > 0 and nb > 0:
            c = min(1.0, float(np.dot(a, b) / (na * nb)))
            if c > cfg.cosine_floor:
                return c, False
            return cfg.cosine_floor, True
    if cfg.oov_policy == DROP:
        raise UnscorableError("vector missing or zero")
    return cfg.cosine_floor, True


def word_similarity(f: str, e: str, m: ProjectionMatrix, src: VectorSpace, tgt: VectorSpace,
                    cfg: ScoreConfig) -> float:
    """max(cos(project(m, x_f), z_e), floor); an OOV side follows ``cfg.oov_policy``."""
    x = src.lookup(f)
    z = tgt.lookup(e)
    return _clamped_cosine(None if x is None else project(m, x), z, cfg)[0]


@dataclass
class WordSimTable:
    """Precomputed word similarities keyed by (source word, target word).

    Pairs missing from ``scores`` go to ``fallback`` when one is set,
    otherwise they count as unscorable.
    """

    direction: str
    scores: Dict[Tuple[str, str], float]
    cfg: ScoreConfig
    fallback: Optional[Callable[[str, str], float]] = None

    def __post_init__(self):
        if self.direction not in (DIRECT, INVERSE):
            raise ValueError(f"unknown direction {self.direction!r}")

    def __len__(self):
        return len(self.scores)

    def get(self, f: str, e: str) -> float:
        value = self.scores.get((f, e))
        if value is not None:
            return value
        if self.fallback is not None:
            return self.fallback(f, e)
        if self.cfg.oov_policy == DROP:
            raise UnscorableError(f"no similarity for ({f}, {e})")
        return self.cfg.cosine_floor


def _lru(fn, maxsize):
    cache: OrderedDict = OrderedDict()

    def wrapper(*key):
        try:
            cache.move_to_end(key)
            return cache[key]
        except KeyError:
            pass
        value = fn(*key)
        cache[key] = value
        if len(cache) > maxsize:
            cache.popitem(last=False)
        return value
    return wrapper


def sim_function(direction: str, m: ProjectionMatrix, src: VectorSpace, tgt: VectorSpace,
                 cfg: ScoreConfig) -> Callable[[str, str], float]:
    """``(f, e) -> similarity`` for one direction; arguments are always (source, target) words."""
    if direction == DIRECT:
        return lambda f, e: word_similarity(f, e, m, src, tgt, cfg)
    return lambda f, e: word_similarity(e, f, m, tgt, src, cfg)


def cached_sim_function(direction: str, m: ProjectionMatrix, src: VectorSpace, tgt: VectorSpace,
                        cfg: ScoreConfig, maxsize: int = 100_000) -> Callable[[str, str], float]:
    """:func:`sim_function` behind a bounded LRU cache."""
    return _lru(sim_function(direction, m, src, tgt, cfg), maxsize)


def build_direction_table(lexicon: Sequence[LexiconEntry], direction: str, m: ProjectionMatrix,
                          src: VectorSpace, tgt: VectorSpace, cfg: ScoreConfig,
                          with_fallback: bool = True) -> WordSimTable:
    """Score every distinct non-NULL (f, e) lexicon pair in one direction.

    Under the drop-pair policy unscorable pairs are left out of the table.
    """
    if not lexicon:
        raise MonoScoreError("empty lexicon")
    sim = sim_function(direction, m, src, tgt, cfg)
    scores = {}
    for ent in lexicon:
        if ent.f == NULL or ent.e == NULL or (ent.f, ent.e) in scores:
            continue
        try:
            scores[(ent.f, ent.e)] = sim(ent.f, ent.e)
        except UnscorableError:
            continue
    fallback = cached_sim_function(direction, m, src, tgt, cfg) if with_fallback else None
    return WordSimTable(direction, scores, cfg, fallback)


def build_wordsim_table(lexicon: Sequence[LexiconEntry], m_direct: ProjectionMatrix,
                        m_inverse: ProjectionMatrix, src: VectorSpace, tgt: VectorSpace,
                        cfg: ScoreConfig, with_fallback: bool = True
                        ) -> Tuple[WordSimTable, WordSimTable]:
    """Direct and inverse tables for ``lexicon`` (see :func:`build_direction_table`)."""
    return (build_direction_table(lexicon, DIRECT, m_direct, src, tgt, cfg, with_fallback),
            build_direction_table(lexicon, INVERSE, m_inverse, src, tgt, cfg, with_fallback))


def write_wordsim_table(table: WordSimTable, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for (f, e), v in sorted(table.scores.items()):
            fh.write(f"{f} {e} {format_score(v)}\n")


def read_wordsim_table(path, direction: str, cfg: ScoreConfig) -> WordSimTable:
    return WordSimTable(direction, {(x.f, x.e): x.p for x in parse_lexicon(path)}, cfg)


def _lex_factors(p: PhrasePair, sim: WordSimTable, cfg: ScoreConfig, direction: str):
    links = set(p.alignment)
    for i, j in links:
        if not (0 <= i < len(p.src) and 0 <= j < len(p.tgt)):
            raise ValueError(f"alignment link {i}-{j} out of range")
    if direction == DIRECT:
        n_scored = len(p.src)
        partners = [[] for _ in p.src]
        for i, j in links:
            partners[i].append(j)
        pairs = lambda pos, other: (p.src[pos], p.tgt[other])
    else:
        n_scored = len(p.tgt)
        partners = [[] for _ in p.tgt]
        for i, j in links:
            partners[j].append(i)
        pairs = lambda pos, other: (p.src[other], p.tgt[pos])
    for pos in range(n_scored):
        if partners[pos]:
            vals = [sim.get(*pairs(pos, other)) for other in sorted(partners[pos])]
            yield sum(vals) / len(vals)
        else:
            yield cfg.null_align_constant


def lexical_weight(p: PhrasePair, sim: WordSimTable, cfg: ScoreConfig, direction: str = DIRECT) -> float:
    """Product over the scored side's words of their mean link similarity.

    ``direct`` scores source words against the links as given; ``inverse``
    scores target words over the transposed links.  Unaligned words
    contribute ``cfg.null_align_constant``.
    """
    if sim.direction != direction:
        raise ValueError(f"{sim.direction} table used for a {direction} weight")
    result = 1.0
    for factor in _lex_factors(p, sim, cfg, direction):
        result *= factor
    return result


def phrase_similarity(p: PhrasePair, vz_src: PhraseVectorizer, vz_tgt: PhraseVectorizer,
                      m: ProjectionMatrix, cfg: ScoreConfig, direction: str = DIRECT) -> float:
    return _phrase_similarity(p, vz_src, vz_tgt, m, cfg, direction)[0]


def _phrase_similarity(p, vz_src, vz_tgt, m, cfg, direction):
    if direction == DIRECT:
        a, b = vz_src(p.src), vz_tgt(p.tgt)
    else:
        a, b = vz_tgt(p.tgt), vz_src(p.src)
    return _clamped_cosine(None if a is None else project(m, a), b, cfg)


@dataclass
class ModelBundle:
    """Everything the four features need; unused members may be None."""

    src_words: Optional[VectorSpace] = None
    tgt_words: Optional[VectorSpace] = None
    src_phrases: Optional[PhraseVectorizer] = None
    tgt_phrases: Optional[PhraseVectorizer] = None
    word_direct: Optional[ProjectionMatrix] = None
    word_inverse: Optional[ProjectionMatrix] = None
    phrase_direct: Optional[ProjectionMatrix] = None
    phrase_inverse: Optional[ProjectionMatrix] = None
    sim_direct: Optional[WordSimTable] = None
    sim_inverse: Optional[WordSimTable] = None

    def check(self, features: Sequence[str]) -> None:
        need = {
            PHRASE_DIRECT: ("src_phrases", "tgt_phrases", "phrase_direct"),
            PHRASE_INVERSE: ("src_phrases", "tgt_phrases", "phrase_inverse"),
            LEX_DIRECT: ("sim_direct",),
            LEX_INVERSE: ("sim_inverse",),
        }
        missing = sorted({name for f in features for name in need[f] if getattr(self, name) is None})
        if missing:
            raise MonoScoreError(f"missing model components: {', '.join(missing)}")

    def with_sim_tables(self, cfg: ScoreConfig) -> "ModelBundle":
        """Fill absent similarity tables with on-demand (cached) ones."""
        out = ModelBundle(**{f: getattr(self, f) for f in self.__dataclass_fields__})
        for attr, direction, m in (("sim_direct", DIRECT, self.word_direct),
                                   ("sim_inverse", INVERSE, self.word_inverse)):
            if getattr(out, attr) is None and m is not None and self.src_words and self.tgt_words:
                fn = cached_sim_function(direction, m, self.src_words, self.tgt_words, cfg)
                setattr(out, attr, WordSimTable(direction, {}, cfg, fn))
        return out


def score_features(p: PhrasePair, bundle: ModelBundle, cfg: ScoreConfig,
                   features: Sequence[str] = FEATURES) -> Dict[str, Tuple[float, bool]]:
    """``{feature: (value, floor_hit)}`` for the requested features.

    Emitted values never drop below ``cosine_floor``: lexical weights that
    fall under it are raised to it and reported as floor hits.
    """
    out = {}
    for feat in features:
        if feat == PHRASE_DIRECT:
            out[feat] = _phrase_similarity(p, bundle.src_phrases, bundle.tgt_phrases,
                                           bundle.phrase_direct, cfg, DIRECT)
        elif feat == PHRASE_INVERSE:
            out[feat] = _phrase_similarity(p, bundle.src_phrases, bundle.tgt_phrases,
                                           bundle.phrase_inverse, cfg, INVERSE)
        else:
            direction = DIRECT if feat == LEX_DIRECT else INVERSE
            table = bundle.sim_direct if direction == DIRECT else bundle.sim_inverse
            w = lexical_weight(p, table, cfg, direction)
            out[feat] = (w, False) if w >= cfg.cosine_floor else (cfg.cosine_floor, True)
    return out


def rescore_pair(p: PhrasePair, bundle: ModelBundle, cfg: ScoreConfig) -> PhrasePair:
    """Replace or extend the scores of ``p`` with monolingual features.

    Replace mode keeps only the enabled features; append mode keeps the
    original scores and adds all four.  Raises UnscorableError under the
    drop-pair policy.
    """
    values = score_features(p, bundle, cfg, cfg.emitted)
    mono = [values[f][0] for f in cfg.emitted]
    scores = list(p.scores) + mono if cfg.mode == APPEND else mono
    return PhrasePair(list(p.src), list(p.tgt), scores, list(p.alignment), list(p.raw_extras))


def append_scores(line: str, values: Sequence[float]) -> str:
    """Add ``values`` after the score field of ``line``, leaving all other bytes alone."""
    fields = line.split(SEP)
    extra = " ".join(format_score(v) for v in values)
    fields[2] = f"{fields[2]} {extra}" if fields[2] else extra
    return SEP.join(fields)


class _CachedVectorizer:
    """Bounded LRU over phrase vectors; tables list each source phrase many times."""

    def __init__(self, vz: PhraseVectorizer, maxsize: int = 50_000):
        self.vz = vz
        self._get = _lru(lambda *toks: vz(list(toks)), maxsize)

    @property
    def dim(self):
        return self.vz.dim

    def __call__(self, phrase):
        return self._get(*phrase)


@dataclass
class RunReport:
    pairs_in: int = 0
    pairs_out: int = 0
    dropped: int = 0
    lines_read: int = 0
    parse_errors: List[Tuple[int, str]] = field(default_factory=list)
    floor_hits: Dict[str, int] = field(default_factory=dict)
    wall_time: float = 0.0
    feature_order: Tuple[str, ...] = ()
    config: Dict[str, object] = field(default_factory=dict)

    def summary(self) -> str:
        lines = [
            f"pairs in:   {self.pairs_in}",
            f"pairs out:  {self.pairs_out}",
            f"dropped:    {self.dropped}",
            f"bad lines:  {len(self.parse_errors)} of {self.lines_read}",
            f"wall time:  {self.wall_time:.2f}s",
            "appended/emitted features: " + " ".join(self.feature_order),
        ]
        for feat, n in self.floor_hits.items():
            lines.append(f"floor hits {feat}: {n}")
        for lineno, msg in self.parse_errors[:20]:
            lines.append(f"line {lineno}: {msg}")
        if len(self.parse_errors) > 20:
            lines.append(f"... {len(self.parse_errors) - 20} more bad lines")
        return "\n".join(lines)

    def key_values(self) -> Dict[str, object]:
        kv = {
            "report.pairs_in": self.pairs_in,
            "report.pairs_out": self.pairs_out,
            "report.dropped": self.dropped,
            "report.lines_read": self.lines_read,
            "report.parse_errors": len(self.parse_errors),
            "report.wall_time": f"{self.wall_time:.3f}",
            "report.feature_order": ",".join(self.feature_order),
        }
        for feat, n in self.floor_hits.items():
            kv[f"report.floor_hits.{feat}"] = n
        for lineno, msg in self.parse_errors:
            kv[f"report.bad_line.{lineno}"] = msg
        return kv


def rescore_table(input_path, output_path, bundle: ModelBundle, cfg: ScoreConfig,
                  max_errors: Optional[int] = 1000,
                  max_phrase_length: Optional[int] = MAX_PHRASE_LENGTH,
                  on_scores: Optional[Callable[[Dict[str, float]], None]] = None) -> RunReport:
    """Stream ``input_path`` into ``output_path`` with monolingual scores.

    Memory use does not grow with table length.  ``on_scores`` receives the
    emitted monolingual feature values of every written pair.
    """
    start = time.perf_counter()
    bundle = bundle.with_sim_tables(cfg)
    bundle.check(cfg.emitted)
    if bundle.src_phrases is not None:
        bundle.src_phrases = _CachedVectorizer(bundle.src_phrases)
    if bundle.tgt_phrases is not None:
        bundle.tgt_phrases = _CachedVectorizer(bundle.tgt_phrases)
    report = RunReport(feature_order=cfg.emitted, floor_hits={f: 0 for f in cfg.emitted},
                       config={k: v for k, v in asdict(cfg).items()})

    with open(output_path, "w", encoding="utf-8", newline="\n") as out:
        def handle(pair: PhrasePair, line: str):
            report.pairs_in += 1
            try:
                values = score_features(pair, bundle, cfg, cfg.emitted)
            except UnscorableError:
                report.dropped += 1
                return
            mono = []
            for feat in cfg.emitted:
                v, hit = values[feat]
                mono.append(v)
                report.floor_hits[feat] += hit
            if on_scores is not None:
                on_scores({f: values[f][0] for f in cfg.emitted})
            if cfg.mode == APPEND:
                out.write(append_scores(line, mono) + "\n")
            else:
                out.write(emit_phrase_table_line(PhrasePair(pair.src, pair.tgt, mono,
                                                            pair.alignment, pair.raw_extras)) + "\n")
            report.pairs_out += 1

        summary = stream_table(input_path, handle, max_errors=max_errors,
                               max_phrase_length=max_phrase_length, with_line=True)
    report.lines_read = summary.lines_read
    report.parse_errors = summary.errors
    report.wall_time = time.perf_counter() - start
    logger.info("rescored %s -> %s: %d in, %d out, %d dropped", os.fspath(input_path),
                os.fspath(output_path), report.pairs_in, report.pairs_out, report.dropped)
    return report
