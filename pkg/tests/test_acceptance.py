"""Acceptance criteria 1-8, each with the tolerance it is judged by."""

import itertools
import math
import time
import tracemalloc

import numpy as np
import pytest
from scipy.stats import spearmanr

from helpers import random_pair, random_token
from monoscore.cli import main
from monoscore.embedtrain import TrainConfig, train_word_model
from monoscore.phrasetable import (PhrasePair, emit_phrase_table_line, parse_phrase_table_line,
                                   stream_table)
from monoscore.scoring import (ABLATIONS, APPEND, DIRECT, DROP, FEATURES, INVERSE, REPLACE,
                               LEX_DIRECT, LEX_INVERSE, PHRASE_DIRECT, PHRASE_INVERSE, ModelBundle,
                               ScoreConfig, WordSimTable, lexical_weight, rescore_pair,
                               rescore_table)
from monoscore.synthetic import make_world
from monoscore.vecspace import PhraseVectorizer, VectorSpace, cosine
from monoscore.xmap import (TGT2SRC, ProjectionMatrix, SeedPairs, pair_loss_and_gradient,
                            precision_at_k, train_projection_closed_form, train_projection_sgd)


def planted_data(rng, n=500, d=200, sigma=0.0):
    x = rng.normal(size=(n, d))
    w = rng.normal(size=(d, d))
    z = x @ w + sigma * rng.normal(size=(n, d))
    src = VectorSpace(tuple(f"s{i}" for i in range(n)), x)
    tgt = VectorSpace(tuple(f"t{i}" for i in range(n)), z)
    return SeedPairs([(f"s{i}", f"t{i}") for i in range(n)]), src, tgt, w


# 1 -------------------------------------------------------------------------

def test_planted_matrix_recovery(criterion):
    pairs, src, tgt, w_true = planted_data(np.random.default_rng(1))
    start = time.perf_counter()
    m = train_projection_closed_form(pairs, src, tgt, ridge=0.0)
    elapsed = time.perf_counter() - start
    err = np.linalg.norm(m.w - w_true)
    criterion(1, err < 1e-6 and elapsed < 5.0,
              f"Frobenius error {err:.2e} < 1e-6, runtime {elapsed:.2f}s < 5s")


# 2 -------------------------------------------------------------------------

def test_solver_agreement(criterion):
    rng = np.random.default_rng(2)
    pairs, src, tgt, _ = planted_data(rng, sigma=0.01)
    exact = train_projection_closed_form(pairs, src, tgt, ridge=0.0)
    gd = train_projection_sgd(pairs, src, tgt, seed=2)
    rel_loss = abs(gd.report.loss - exact.report.loss) / exact.report.loss

    w = rng.normal(size=(200, 200)) * 0.1
    x, z = src.matrix[7], tgt.matrix[7]
    _, grad = pair_loss_and_gradient(w, x, z)
    worst = 0.0
    eps = 1e-5
    for _ in range(20):
        i, j = rng.integers(200), rng.integers(200)
        wp, wm = w.copy(), w.copy()
        wp[i, j] += eps
        wm[i, j] -= eps
        num = (pair_loss_and_gradient(wp, x, z)[0] - pair_loss_and_gradient(wm, x, z)[0]) / (2 * eps)
        worst = max(worst, abs(num - grad[i, j]) / max(abs(grad[i, j]), 1e-12))
    criterion(2, rel_loss < 0.01 and worst < 1e-3,
              f"SGD loss {gd.report.loss:.6g} vs closed {exact.report.loss:.6g}, rel {rel_loss:.1e} < 1e-2; "
              f"worst gradient rel error {worst:.1e} < 1e-3 over 20 coordinates")


# 3 -------------------------------------------------------------------------

def induction_precision(noise, seed):
    world = make_world(dim=50, vocab_size=200, noise=noise, seed=seed, n_phrases=0, n_sentences=0)
    order = np.random.default_rng(seed).permutation(200)
    train = SeedPairs([world.gold[i] for i in order[:150]])
    held = {world.gold[i][0]: {world.gold[i][1]} for i in order[150:]}
    m = train_projection_closed_form(train, world.src, world.tgt)
    return precision_at_k(m, world.src, world.tgt, held, 1)[0]


def test_dictionary_induction(criterion):
    start = time.perf_counter()
    noisy = [induction_precision(0.05, s) for s in range(5)]
    clean = [induction_precision(0.0, s) for s in range(5)]
    elapsed = time.perf_counter() - start
    mean_noisy = float(np.mean(noisy))
    criterion(3, mean_noisy >= 0.9 and min(clean) == 1.0 and elapsed < 10.0,
              f"held-out p@1 at sigma=0.05 mean {mean_noisy:.3f} >= 0.9, at sigma=0 "
              f"min {min(clean):.3f} == 1.0, runtime {elapsed:.2f}s < 10s")


# 4 -------------------------------------------------------------------------

def brute_force_weight(n_src, n_tgt, links, sim, null, direction):
    """Product over scored words of the mean similarity to linked words, via link matrices."""
    a = np.zeros((n_src, n_tgt))
    for i, j in links:
        a[i, j] = 1.0
    s = np.array([[sim.get((i, j), 0.0) for j in range(n_tgt)] for i in range(n_src)])
    if direction == INVERSE:
        a, s = a.T, s.T
    counts = a.sum(axis=1)
    totals = (a * s).sum(axis=1)
    factors = [totals[k] / counts[k] if counts[k] else null for k in range(len(counts))]
    return math.prod(factors)


def test_lexical_weight_oracle(criterion):
    worst = 0.0
    cases = 0
    for n_src, n_tgt in itertools.product(range(1, 4), repeat=2):
        src = [f"f{i}" for i in range(n_src)]
        tgt = [f"e{j}" for j in range(n_tgt)]
        cells = list(itertools.product(range(n_src), range(n_tgt)))
        for k in range(4):
            for links in itertools.combinations(cells, k):
                for values in itertools.product((0.1, 0.5, 1.0), repeat=k):
                    sim = dict(zip(links, values))
                    scores = {(src[i], tgt[j]): v for (i, j), v in sim.items()}
                    p = PhrasePair(src, tgt, [1.0], list(links))
                    for null in (1e-3, 1e-2):
                        cfg = ScoreConfig(null_align_constant=null)
                        for direction in (DIRECT, INVERSE):
                            got = lexical_weight(p, WordSimTable(direction, scores, cfg), cfg, direction)
                            want = brute_force_weight(n_src, n_tgt, links, sim, null, direction)
                            worst = max(worst, abs(got - want))
                            cases += 1
    criterion(4, worst <= 1e-12, f"{cases} cases, max |difference| {worst:.1e} <= 1e-12")


# 5 -------------------------------------------------------------------------

def random_model(rng, dim=6, vocab=30):
    src = VectorSpace(tuple(f"s{i}" for i in range(vocab)), rng.normal(size=(vocab, dim)))
    tgt = VectorSpace(tuple(f"t{i}" for i in range(vocab)), rng.normal(size=(vocab, dim)))
    src_zero = VectorSpace(src.tokens + ("s_zero",), np.vstack([src.matrix, np.zeros(dim)]))
    mats = [ProjectionMatrix(rng.normal(size=(dim, dim)), d, lvl)
            for d, lvl in (("src2tgt", "word"), ("tgt2src", "word"),
                           ("src2tgt", "phrase"), ("tgt2src", "phrase"))]
    return ModelBundle(src_zero, tgt, PhraseVectorizer(src_zero), PhraseVectorizer(tgt), *mats)


def random_scored_pair(rng, n_scores=4):
    def phrase(prefix):
        toks = [f"{prefix}{rng.integers(30)}" for _ in range(int(rng.integers(1, 4)))]
        if rng.random() < 0.1:
            toks[0] = f"{prefix}_oov"
        if prefix == "s" and rng.random() < 0.05:
            toks = ["s_zero"]
        return toks
    src, tgt = phrase("s"), phrase("t")
    links = sorted({(int(rng.integers(len(src))), int(rng.integers(len(tgt))))
                    for _ in range(int(rng.integers(0, 4)))})
    return PhrasePair(src, tgt, [float("%.6g" % v) for v in rng.uniform(0, 1, n_scores)], links)


def test_score_range_invariants(criterion, tmp_path):
    rng = np.random.default_rng(5)
    bundles = [random_model(rng) for _ in range(5)]
    floors = (1e-4, 1e-3, 0.05)
    nulls = (1e-3, 1e-2, 0.5)
    feature_sets = [(f,) for f in FEATURES] + [ABLATIONS[k] for k in ("phrase-both", "direct-both", "all")]
    out_of_range = prefix_errors = count_errors = 0
    prepared = {}
    for call in range(10_000):
        cfg = ScoreConfig(cosine_floor=floors[call % 3], null_align_constant=nulls[(call // 3) % 3],
                          mode=APPEND if call % 2 else REPLACE,
                          features=feature_sets[call % len(feature_sets)])
        key = (call % 5, cfg)
        if key not in prepared:
            prepared[key] = bundles[call % 5].with_sim_tables(cfg)
        p = random_scored_pair(rng)
        out = rescore_pair(p, prepared[key], cfg)
        mono = out.scores[len(p.scores):] if cfg.mode == APPEND else out.scores
        out_of_range += sum(not (cfg.cosine_floor <= v <= 1.0) for v in mono)
        if cfg.mode == APPEND:
            old_field = emit_phrase_table_line(p).split(" ||| ")[2]
            new_field = emit_phrase_table_line(out).split(" ||| ")[2]
            prefix_errors += out.scores[:4] != p.scores or not new_field.startswith(old_field + " ")
            count_errors += len(mono) != 4
        else:
            count_errors += len(mono) != len(cfg.features)

    # table level: original bytes survive append mode unchanged, odd formatting included
    table = tmp_path / "odd.txt"
    lines = []
    for _ in range(500):
        p = random_scored_pair(rng)
        fields = [" ".join(p.src), " ".join(p.tgt), " ".join(f"{v:.9f}" for v in p.scores)]
        if p.alignment:
            fields.append(" ".join(f"{i}-{j}" for i, j in p.alignment))
        fields.append("c=1  x")
        lines.append(" ||| ".join(fields))
    table.write_text("\n".join(lines) + "\n", encoding="utf-8")
    cfg = ScoreConfig(mode=APPEND)
    rescore_table(table, tmp_path / "app.txt", bundles[0], cfg)
    for old, new in zip(lines, (tmp_path / "app.txt").read_text(encoding="utf-8").splitlines()):
        cut = len(" ||| ".join(old.split(" ||| ")[:3]))
        tail = new[len(new) - (len(old) - cut):] if len(old) > cut else ""
        prefix_errors += not (new.startswith(old[:cut] + " ") and tail == old[cut:])

    # table level: replace mode writes exactly the enabled features
    for feats in feature_sets:
        cfg = ScoreConfig(features=feats)
        rescore_table(table, tmp_path / "rep.txt", bundles[0], cfg)
        for line in (tmp_path / "rep.txt").read_text(encoding="utf-8").splitlines():
            count_errors += len(parse_phrase_table_line(line).scores) != len(feats)

    ok = out_of_range == 0 and prefix_errors == 0 and count_errors == 0
    criterion(5, ok, f"10000 calls: {out_of_range} values outside [floor, 1], {prefix_errors} "
                     f"append prefix mismatches, {count_errors} replace/append count mismatches "
                     f"over {len(feature_sets)} feature sets")


# 6 -------------------------------------------------------------------------

def malformed_variants(good):
    """Byte lines that are invalid by construction."""
    f = good.split(" ||| ")
    texts = [
        ("no separators", good.replace(" ||| ", " ")),
        ("two fields", " ||| ".join(f[:2])),
        ("text score", " ||| ".join(f[:2] + ["high"] + f[3:])),
        ("negative score", " ||| ".join(f[:2] + ["-1 " + f[2]] + f[3:])),
        ("nan score", " ||| ".join(f[:2] + ["nan"] + f[3:])),
        ("empty source", " ||| ".join([""] + f[1:])),
        ("link out of range", " ||| ".join(f[:3] + ["0-0 99-0"])),
        ("broken link", " ||| ".join(f[:3] + ["0-x"])),
        ("too long", " ||| ".join([" ".join(["w"] * 7)] + f[1:])),
    ]
    return [(label, text.encode("utf-8")) for label, text in texts] + [
        ("bad utf-8", b"\xff\xfe" + good.encode("utf-8"))]


def test_table_format_robustness(criterion, tmp_path):
    rng = np.random.default_rng(6)
    round_trip_failures = 0
    for _ in range(1000):
        p = random_pair(rng)
        line = emit_phrase_table_line(p)
        back = parse_phrase_table_line(line)
        round_trip_failures += back != p or emit_phrase_table_line(back) != line

    fuzz = tmp_path / "fuzz.txt"
    expected_bad = []
    with open(fuzz, "wb") as fh:
        lineno = 0
        for _ in range(300):
            good = emit_phrase_table_line(random_pair(rng, extras=False))
            variants = malformed_variants(good)
            _, bad = variants[int(rng.integers(len(variants)))]
            for raw, is_bad in ((good.encode("utf-8"), False), (bad, True)):
                lineno += 1
                fh.write(raw + b"\n")
                if is_bad:
                    expected_bad.append(lineno)
    crashed = False
    try:
        summary = stream_table(fuzz, lambda pair: None, max_errors=None)
        reported = [n for n, _ in summary.errors]
    except Exception:  # noqa: BLE001
        crashed, reported = True, []

    world = make_world(dim=50, vocab_size=200, noise=0.05, seed=6, n_phrases=700, n_sentences=500)
    pairs, sent = SeedPairs(world.gold), SeedPairs(world.sentences)
    vs, vt = PhraseVectorizer(world.src), PhraseVectorizer(world.tgt)
    bundle = ModelBundle(
        world.src, world.tgt, vs, vt,
        train_projection_closed_form(pairs, world.src, world.tgt),
        train_projection_closed_form(pairs.swapped(), world.tgt, world.src, direction=TGT2SRC),
        train_projection_closed_form(sent, vs, vt, level="phrase"),
        train_projection_closed_form(sent.swapped(), vt, vs, direction=TGT2SRC, level="phrase"))

    def big_table(n, path):
        scores = rng.uniform(0, 1, size=(n, 4))
        with open(path, "w", encoding="utf-8") as fh:
            for k in range(n):
                p = world.table[k % len(world.table)]
                fh.write(emit_phrase_table_line(PhrasePair(p.src, p.tgt, list(scores[k]), p.alignment)) + "\n")

    peaks = {}
    for n in (10_000, 100_000):
        big_table(n, tmp_path / f"t{n}")
        tracemalloc.start()
        start = time.perf_counter()
        report = rescore_table(tmp_path / f"t{n}", tmp_path / f"o{n}", bundle, ScoreConfig(mode=APPEND))
        elapsed = time.perf_counter() - start
        peaks[n] = tracemalloc.get_traced_memory()[1]
        tracemalloc.stop()
        assert report.pairs_out == n
    bounded = peaks[100_000] <= 1.25 * peaks[10_000] + 256 * 1024

    ok = (round_trip_failures == 0 and not crashed and reported == expected_bad
          and bounded and elapsed < 60.0)
    criterion(6, ok, f"{round_trip_failures}/1000 round-trip failures; {len(reported)} of "
                     f"{len(expected_bad)} malformed lines reported at the right line numbers, "
                     f"crashed={crashed}; traced peak {peaks[10_000] / 1e6:.2f} MB at 10k lines vs "
                     f"{peaks[100_000] / 1e6:.2f} MB at 100k; 100k lines in {elapsed:.1f}s < 60s")


# 7 -------------------------------------------------------------------------

def pipeline(tmp_path, seed):
    d = tmp_path / f"seed{seed}"
    run = lambda *args: main([str(a) for a in args])
    assert run("make-synthetic", "--output-dir", d, "--seed", seed, "--noise", 0.05) == 0
    vecs = ["--src-vectors", d / "src.vec", "--tgt-vectors", d / "tgt.vec", "--seed", seed]
    for name, seeds, extra in (("wd", "word_seeds.tsv", []),
                               ("wi", "word_seeds.tsv", ["--direction", "tgt2src"]),
                               ("pd", "phrase_seeds.tsv", ["--level", "phrase"]),
                               ("pi", "phrase_seeds.tsv", ["--level", "phrase", "--direction", "tgt2src"])):
        assert run("train-projection", "--seeds", d / seeds, "--output", d / f"{name}.mat", *vecs, *extra) == 0
    assert run("rescore", "--table", d / "table.txt", "--output", d / "out.txt", "--mode", "append",
               "--lexicon", d / "lexicon.txt", "--word-direct", d / "wd.mat", "--word-inverse", d / "wi.mat",
               "--phrase-direct", d / "pd.mat", "--phrase-inverse", d / "pi.mat", *vecs) == 0
    groups = {}
    for line in (d / "out.txt").read_text(encoding="utf-8").splitlines():
        p = parse_phrase_table_line(line)
        matched = [t[1:] for t in p.tgt] == [s[1:] for s in p.src]
        pd_score = p.scores[4 + FEATURES.index(PHRASE_DIRECT)]
        groups.setdefault(" ".join(p.src), {True: [], False: []})[matched].append(pd_score)
    return groups


def test_end_to_end_ablation(criterion, tmp_path):
    rates, rhos = [], []
    for seed in range(5):
        groups = pipeline(tmp_path, seed)
        usable = [g for g in groups.values() if g[True] and g[False]]
        rng = np.random.default_rng(seed)
        wins = 0
        labels, scores = [], []
        for _ in range(200):
            g = usable[int(rng.integers(len(usable)))]
            good = g[True][int(rng.integers(len(g[True])))]
            bad = g[False][int(rng.integers(len(g[False])))]
            wins += good > bad
            labels += [1, 0]
            scores += [good, bad]
        rates.append(wins / 200)
        rhos.append(spearmanr(labels, scores).statistic)
    criterion(7, min(rates) >= 0.9,
              f"matched beats mismatched mono-phrase-direct in {', '.join(f'{r:.0%}' for r in rates)} "
              f"of 200 trials per seed (need >= 90% each); Spearman rho "
              f"{', '.join(f'{r:.2f}' for r in rhos)}")


# 8 -------------------------------------------------------------------------

def toy_corpus():
    """400 sentences of shuffled collocations: a b, c d, e f, g h."""
    rng = np.random.default_rng(100)
    pairs = [("a", "b"), ("c", "d"), ("e", "f"), ("g", "h")]
    return [[w for k in rng.integers(0, 4, size=10) for w in pairs[k]] for _ in range(400)]


def test_embedding_trainer_sanity(criterion):
    corpus = toy_corpus()
    decreasing, neighbour_hits, deterministic = 0, 0, 0
    for seed in range(1, 6):
        cfg = TrainConfig(dim=32, window=1, epochs=5, seed=seed)
        model = train_word_model(corpus, cfg)
        again = train_word_model(corpus, cfg)
        decreasing += model.epoch_losses[-1] < model.epoch_losses[0]
        deterministic += (np.array_equal(model.w_in, again.w_in)
                          and np.array_equal(model.w_out, again.w_out)
                          and model.epoch_losses == again.epoch_losses)
        space = model.to_space()
        a = space.lookup("a")
        others = [t for t in space.tokens if t != "a"]
        nearest = max(others, key=lambda t: (cosine(a, space.lookup(t)), t))
        neighbour_hits += nearest == "b"
    criterion(8, decreasing == 5 and neighbour_hits >= 4 and deterministic == 5,
              f"final < first epoch loss in {decreasing}/5 seeds, nearest neighbour of a is b in "
              f"{neighbour_hits}/5 (need >= 4), bit-identical reruns {deterministic}/5")
