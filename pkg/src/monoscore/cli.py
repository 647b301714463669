"""``monoscore`` command line: one subcommand per pipeline stage.

Option values come from built-in defaults, then ``--config FILE`` (flat
``key = value``), then command-line flags.  Every run can write a report
(``--report FILE``) that embeds the resolved options; the report is itself
a valid config file, so ``--config REPORT`` reruns the same job.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
import traceback
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from . import __version__
from .config import format_config, read_config
from .embedtrain import CBOW, SKIPGRAM, PVModel, TrainConfig, read_corpus, train_word_model
from .errors import MonoScoreError
from .phrasetable import parse_lexicon
from .plotting import StreamingHistogram, plot_feature_histograms, plot_induction_scores
from .scoring import (APPEND, DIRECT, DROP, FLOOR, INVERSE, REPLACE, ModelBundle, ScoreConfig,
                      build_direction_table, build_wordsim_table, cached_sim_function,
                      parse_features, read_wordsim_table, rescore_table, write_wordsim_table)
from .synthetic import make_world, write_world
from .vecspace import AVERAGE, PARAGRAPH, PhraseVectorizer, load_vectors, save_vectors
from .xmap import (DICTIONARY, PARALLEL, SRC2TGT, TGT2SRC, induce_translations, load_matrix,
                   read_seed_pairs, save_matrix, select_sentence_seeds, select_word_seeds,
                   train_projection_closed_form, train_projection_sgd, word_frequencies)

logger = logging.getLogger("monoscore")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class Opt:
    type: Callable[[str], Any]
    default: Any = None
    help: str = ""
    choices: Optional[Tuple[str, ...]] = None


def _nonneg_float(text):
    v = float(text)
    if not v >= 0:
        raise ValueError(f"{text} is negative")
    return v


OPTIONS: Dict[str, Opt] = {
    # shared
    "seed": Opt(int, 1, "seed for every random choice of the run"),
    "report": Opt(str, None, "write a key = value run report here"),
    "plot_dir": Opt(str, None, "directory for report figures"),
    "src_vectors": Opt(str, None, "source-language vector file"),
    "tgt_vectors": Opt(str, None, "target-language vector file"),
    "output": Opt(str, None, "output path"),
    "phrase_strategy": Opt(str, AVERAGE, "phrase vectors", (AVERAGE, PARAGRAPH)),
    "src_pv": Opt(str, None, "source paragraph-vector model (.npz)"),
    "tgt_pv": Opt(str, None, "target paragraph-vector model (.npz)"),
    "cosine_floor": Opt(float, 1e-4, "lower clamp for similarities"),
    "null_constant": Opt(float, 1e-3, "factor for unaligned words"),
    "oov_policy": Opt(str, FLOOR, "unscorable pairs", (FLOOR, DROP)),
    "word_direct": Opt(str, None, "word matrix, source to target"),
    "word_inverse": Opt(str, None, "word matrix, target to source"),
    "lexicon": Opt(str, None, "lexical table, 'f e p' lines"),
    # train-embeddings
    "corpus": Opt(str, None, "UTF-8 text, one whitespace-tokenised sentence per line"),
    "model": Opt(str, SKIPGRAM, "word model", (SKIPGRAM, CBOW)),
    "dim": Opt(int, 200, "vector dimension"),
    "window": Opt(int, 5, "context half-width"),
    "epochs": Opt(int, 30, "training epochs"),
    "negative": Opt(int, 5, "negative samples per example"),
    "lr": Opt(float, 0.025, "initial learning rate"),
    "min_count": Opt(int, 1, "drop rarer words"),
    "batch_size": Opt(int, 64, "examples per SGD step"),
    "vectors": Opt(str, "sum", "exported rows", ("sum", "input")),
    "pv_model": Opt(str, None, "also save a paragraph-vector model (.npz)"),
    "pv_steps": Opt(int, 50, "inference steps of the saved paragraph-vector model"),
    # train-projection
    "seeds": Opt(str, None, "seed pairs, 'source<TAB>target' lines"),
    "direction": Opt(str, SRC2TGT, "matrix direction", (SRC2TGT, TGT2SRC)),
    "level": Opt(str, "word", "seed level", ("word", "phrase")),
    "solver": Opt(str, "closed", "least-squares solver", ("closed", "sgd")),
    "ridge": Opt(_nonneg_float, 1e-3, "ridge penalty of the closed-form solver"),
    "sgd_epochs": Opt(int, 500, "gradient-descent epochs"),
    "sgd_lr": Opt(float, 1.0, "step as a fraction of 1/Lipschitz"),
    "sgd_batch": Opt(int, 0, "minibatch size, 0 for full batch"),
    "top_n": Opt(int, 0, "keep seeds of the N most frequent source words (0 = all)"),
    "freq_corpus": Opt(str, None, "source corpus used to rank words for --top-n"),
    "sample_n": Opt(int, 0, "randomly keep N sentence seeds of 1-8 tokens (0 = all)"),
    "min_pairs": Opt(int, 0, "minimum resolvable pairs (0 = source dimension)"),
    # rescore
    "table": Opt(str, None, "input phrase table"),
    "phrase_direct": Opt(str, None, "phrase matrix, source to target"),
    "phrase_inverse": Opt(str, None, "phrase matrix, target to source"),
    "wordsim": Opt(str, None, "prefix of build-wordsim output"),
    "mode": Opt(str, REPLACE, "replace or append scores", (REPLACE, APPEND)),
    "features": Opt(str, "all", "comma list of features kept in replace mode"),
    "max_errors": Opt(int, 1000, "malformed lines tolerated"),
    "max_phrase_length": Opt(int, 6, "longest phrase accepted (0 = no limit)"),
    # induce-dict
    "matrix": Opt(str, None, "projection matrix"),
    "queries": Opt(str, None, "one source token per line"),
    "k": Opt(int, 5, "translations per query"),
    "eval": Opt(str, None, "gold pairs; report precision@1 and precision@k"),
    # make-synthetic
    "output_dir": Opt(str, None, "directory for the synthetic world"),
    "vocab_size": Opt(int, 200, "words per language"),
    "noise": Opt(float, 0.0, "target noise relative to vector norm"),
    "n_phrases": Opt(int, 200, "source phrases in the toy table"),
    "distractors": Opt(int, 2, "mismatched candidates per source phrase"),
    "n_sentences": Opt(int, 500, "short sentence pairs for phrase seeds"),
}

FLAG_ALIASES = {"null_constant": ["--null-constant"], "eval": ["--eval"]}

COMMANDS: Dict[str, Tuple[List[str], List[str], str]] = {
    "train-embeddings": (
        ["corpus", "output", "model", "dim", "window", "epochs", "negative", "lr", "min_count",
         "batch_size", "vectors", "pv_model", "pv_steps"],
        ["corpus", "output"], "train word vectors on a tokenised corpus"),
    "train-projection": (
        ["seeds", "src_vectors", "tgt_vectors", "output", "direction", "level", "solver", "ridge",
         "sgd_epochs", "sgd_lr", "sgd_batch", "top_n", "freq_corpus", "sample_n", "min_pairs",
         "phrase_strategy", "src_pv", "tgt_pv"],
        ["seeds", "src_vectors", "tgt_vectors", "output"], "fit a linear map from seed pairs"),
    "build-wordsim": (
        ["lexicon", "src_vectors", "tgt_vectors", "word_direct", "word_inverse", "output",
         "cosine_floor", "null_constant", "oov_policy"],
        ["lexicon", "src_vectors", "tgt_vectors", "word_direct", "word_inverse", "output"],
        "precompute word similarities for a lexicon"),
    "rescore": (
        ["table", "output", "src_vectors", "tgt_vectors", "word_direct", "word_inverse",
         "phrase_direct", "phrase_inverse", "lexicon", "wordsim", "mode", "features",
         "cosine_floor", "null_constant", "oov_policy", "max_errors", "max_phrase_length",
         "phrase_strategy", "src_pv", "tgt_pv", "plot_dir"],
        ["table", "output"], "replace or append monolingual phrase-table scores"),
    "induce-dict": (
        ["matrix", "src_vectors", "tgt_vectors", "queries", "k", "eval", "output", "plot_dir"],
        ["matrix", "src_vectors", "tgt_vectors"], "translate words by nearest projected neighbour"),
    "make-synthetic": (
        ["output_dir", "dim", "vocab_size", "noise", "n_phrases", "distractors", "n_sentences"],
        ["output_dir"], "write a seeded rotated toy world"),
}

COMMON = ["seed", "report"]
COMMAND_DEFAULTS = {"make-synthetic": {"dim": 50}}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="monoscore", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, (keys, _required, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="flat key = value file; flags override it")
        p.add_argument("-v", "--verbose", action="count", default=0)
        for key in keys + COMMON:
            opt = OPTIONS[key]
            flags = FLAG_ALIASES.get(key, ["--" + key.replace("_", "-")])
            default = COMMAND_DEFAULTS.get(name, {}).get(key, opt.default)
            p.add_argument(*flags, dest=key, type=opt.type, choices=opt.choices,
                           default=argparse.SUPPRESS, help=f"{opt.help} (default: {default})")
    return parser


def resolve(command: str, args: argparse.Namespace) -> Dict[str, Any]:
    keys, required, _ = COMMANDS[command]
    allowed = keys + COMMON
    values = {k: COMMAND_DEFAULTS.get(command, {}).get(k, OPTIONS[k].default) for k in allowed}
    config_path = getattr(args, "config", None)
    if config_path:
        if not os.path.exists(config_path):
            raise UsageError(f"config file {config_path} does not exist")
        for key, text in read_config(config_path).items():
            if key == "command" or key.startswith("report."):
                continue
            if key not in allowed:
                raise UsageError(f"{config_path}: unknown key {key!r} for {command}")
            opt = OPTIONS[key]
            try:
                value = opt.type(text)
            except ValueError as exc:
                raise UsageError(f"{config_path}: bad value for {key}: {exc}") from None
            if opt.choices and value not in opt.choices:
                raise UsageError(f"{config_path}: {key} must be one of {', '.join(opt.choices)}")
            values[key] = value
    for key in allowed:
        if key in vars(args):
            values[key] = getattr(args, key)
    missing = [k for k in required if values.get(k) in (None, "")]
    if missing:
        raise UsageError("missing required option(s): " +
                         ", ".join("--" + k.replace("_", "-") for k in missing))
    return values


def _require_files(values, *keys):
    for key in keys:
        path = values.get(key)
        if path and not os.path.exists(path):
            raise UsageError(f"--{key.replace('_', '-')}: {path} does not exist")


def _usage(fn, *args, **kwargs):
    """Call a config constructor, turning its ValueError into a usage error."""
    try:
        return fn(*args, **kwargs)
    except MonoScoreError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from None


@dataclass
class Outcome:
    summary: List[str]
    report: Dict[str, Any]
    code: int = EXIT_OK


def cmd_train_embeddings(v) -> Outcome:
    _require_files(v, "corpus")
    cfg = _usage(TrainConfig, dim=v["dim"], window=v["window"], epochs=v["epochs"],
                 negative_samples=v["negative"], learning_rate=v["lr"], seed=v["seed"],
                 min_count=v["min_count"], model=v["model"], batch_size=v["batch_size"],
                 vectors=v["vectors"])
    corpus = read_corpus(v["corpus"])
    model = train_word_model(corpus, cfg)
    save_vectors(model.to_space(), v["output"])
    if v["pv_model"]:
        PVModel.from_word_model(model, steps=v["pv_steps"]).save(v["pv_model"])
    losses = model.epoch_losses
    return Outcome(
        [f"vocabulary: {len(model.vocab)} words", f"loss: first epoch {losses[0]:.6f}, "
         f"last epoch {losses[-1]:.6f}", f"wrote {v['output']}"],
        {"vocab_size": len(model.vocab), "loss_first_epoch": f"{losses[0]:.6g}",
         "loss_last_epoch": f"{losses[-1]:.6g}"})


def _phrase_side(space, strategy, pv_path):
    if strategy == PARAGRAPH:
        if not pv_path:
            raise UsageError("paragraph phrase strategy needs --src-pv and --tgt-pv")
        return PhraseVectorizer(space, PARAGRAPH, PVModel.load(pv_path))
    return PhraseVectorizer(space, AVERAGE)


def cmd_train_projection(v) -> Outcome:
    _require_files(v, "seeds", "src_vectors", "tgt_vectors", "freq_corpus", "src_pv", "tgt_pv")
    level = v["level"]
    pairs = read_seed_pairs(v["seeds"], DICTIONARY if level == "word" else PARALLEL)
    n_read = len(pairs)
    if v["top_n"]:
        if level != "word" or not v["freq_corpus"]:
            raise UsageError("--top-n needs --level word and --freq-corpus")
        pairs = select_word_seeds(pairs, word_frequencies(read_corpus(v["freq_corpus"])), v["top_n"])
    if v["sample_n"]:
        if level != "phrase":
            raise UsageError("--sample-n applies to --level phrase")
        pairs = select_sentence_seeds(pairs, v["sample_n"], seed=v["seed"])
    src_space = load_vectors(v["src_vectors"])
    tgt_space = load_vectors(v["tgt_vectors"])
    if level == "phrase":
        src = _phrase_side(src_space, v["phrase_strategy"], v["src_pv"])
        tgt = _phrase_side(tgt_space, v["phrase_strategy"], v["tgt_pv"])
    else:
        src, tgt = src_space, tgt_space
    if v["direction"] == TGT2SRC:
        pairs = pairs.swapped()
        src, tgt = tgt, src
    min_pairs = v["min_pairs"] or src.dim
    if v["solver"] == "closed":
        m = train_projection_closed_form(pairs, src, tgt, ridge=v["ridge"], direction=v["direction"],
                                         level=level, min_pairs=min_pairs)
    else:
        m = train_projection_sgd(pairs, src, tgt, epochs=v["sgd_epochs"], learning_rate=v["sgd_lr"],
                                 seed=v["seed"], batch_size=v["sgd_batch"] or None,
                                 direction=v["direction"], level=level, min_pairs=min_pairs)
    save_matrix(m, v["output"])
    rep = m.report
    lines = [f"seed pairs read: {n_read}, selected: {len(pairs)}",
             f"resolvable pairs: {rep.pairs}, dropped (OOV side): {rep.dropped}",
             f"solver: {rep.solver}, final loss: {rep.loss:.10g}",
             f"wrote {m.d_src}x{m.d_tgt} {m.direction} {m.level} matrix to {v['output']}"]
    kv = {"pairs_read": n_read, "pairs_selected": len(pairs)}
    kv.update({f"training.{line.split(' = ')[0]}": line.split(" = ", 1)[1] for line in rep.lines()})
    return Outcome(lines, kv)


def _score_config(v, **extra) -> ScoreConfig:
    return _usage(ScoreConfig, cosine_floor=v["cosine_floor"],
                  null_align_constant=v["null_constant"], oov_policy=v["oov_policy"], **extra)


def _matrix(path, direction, level):
    m = load_matrix(path)
    if m.direction != direction or m.level != level:
        raise MonoScoreError(f"{path}: expected a {direction} {level} matrix, "
                             f"found {m.direction} {m.level}")
    return m


def cmd_build_wordsim(v) -> Outcome:
    _require_files(v, "lexicon", "src_vectors", "tgt_vectors", "word_direct", "word_inverse")
    cfg = _score_config(v)
    lexicon = parse_lexicon(v["lexicon"])
    direct, inverse = build_wordsim_table(
        lexicon, _matrix(v["word_direct"], SRC2TGT, "word"),
        _matrix(v["word_inverse"], TGT2SRC, "word"),
        load_vectors(v["src_vectors"]), load_vectors(v["tgt_vectors"]), cfg, with_fallback=False)
    prefix = v["output"]
    write_wordsim_table(direct, prefix + ".direct")
    write_wordsim_table(inverse, prefix + ".inverse")
    return Outcome([f"lexicon entries: {len(lexicon)}",
                    f"scored pairs: direct {len(direct)}, inverse {len(inverse)}",
                    f"wrote {prefix}.direct and {prefix}.inverse"],
                   {"lexicon_entries": len(lexicon), "scored_direct": len(direct),
                    "scored_inverse": len(inverse)})


def cmd_rescore(v) -> Outcome:
    _require_files(v, "table", "src_vectors", "tgt_vectors", "word_direct", "word_inverse",
                   "phrase_direct", "phrase_inverse", "lexicon", "src_pv", "tgt_pv")
    features = _usage(parse_features, v["features"])
    cfg = _score_config(v, mode=v["mode"], features=features)
    need = set(cfg.emitted)
    lex_needed = [(feat, attr, direction) for feat, attr, direction in (
        ("mono-lex-direct", "sim_direct", DIRECT), ("mono-lex-inverse", "sim_inverse", INVERSE))
        if feat in need]
    bundle = ModelBundle()
    if v["src_vectors"] and v["tgt_vectors"]:
        bundle.src_words = load_vectors(v["src_vectors"])
        bundle.tgt_words = load_vectors(v["tgt_vectors"])
    elif (need & {"mono-phrase-direct", "mono-phrase-inverse"}) or (lex_needed and not v["wordsim"]):
        raise UsageError("--src-vectors and --tgt-vectors are required for these features")
    if need & {"mono-phrase-direct", "mono-phrase-inverse"}:
        bundle.src_phrases = _phrase_side(bundle.src_words, v["phrase_strategy"], v["src_pv"])
        bundle.tgt_phrases = _phrase_side(bundle.tgt_words, v["phrase_strategy"], v["tgt_pv"])
    for feat, key, direction, level in (
            ("mono-phrase-direct", "phrase_direct", SRC2TGT, "phrase"),
            ("mono-phrase-inverse", "phrase_inverse", TGT2SRC, "phrase"),
            ("mono-lex-direct", "word_direct", SRC2TGT, "word"),
            ("mono-lex-inverse", "word_inverse", TGT2SRC, "word")):
        if feat not in need:
            continue
        if v[key]:
            setattr(bundle, key, _matrix(v[key], direction, level))
        elif level == "phrase" or not v["wordsim"]:
            raise UsageError(f"feature {feat} needs --{key.replace('_', '-')}")

    lexicon = parse_lexicon(v["lexicon"]) if v["lexicon"] and lex_needed and not v["wordsim"] else None
    for feat, attr, direction in lex_needed:
        m = bundle.word_direct if direction == DIRECT else bundle.word_inverse
        if v["wordsim"]:
            path = f"{v['wordsim']}.{direction}"
            if not os.path.exists(path):
                raise UsageError(f"--wordsim: {path} does not exist")
            table = read_wordsim_table(path, direction, cfg)
            if m is not None and bundle.src_words is not None:
                # pairs missing from the precomputed table are scored on demand
                table.fallback = cached_sim_function(direction, m, bundle.src_words,
                                                     bundle.tgt_words, cfg)
        elif lexicon is not None:
            table = build_direction_table(lexicon, direction, m, bundle.src_words,
                                          bundle.tgt_words, cfg)
        else:
            continue  # rescore_table scores every pair on demand
        setattr(bundle, attr, table)

    hist = StreamingHistogram(cfg.emitted) if v["plot_dir"] else None
    report = rescore_table(v["table"], v["output"], bundle, cfg, max_errors=v["max_errors"],
                           max_phrase_length=v["max_phrase_length"] or None,
                           on_scores=hist.add if hist else None)
    lines = report.summary().splitlines() + [f"wrote {v['output']}"]
    kv = report.key_values()
    if hist is not None:
        fig = plot_feature_histograms(hist, os.path.join(v["plot_dir"], "feature_histograms.png"),
                                      title=f"{cfg.mode} mode, {report.pairs_out} pairs")
        lines.append(f"figure: {fig}")
        kv["report.figure"] = fig
    return Outcome(lines, kv)


def _read_lines(path):
    with open(path, encoding="utf-8") as fh:
        return [ln.strip() for ln in fh if ln.strip()]


def cmd_induce_dict(v) -> Outcome:
    _require_files(v, "matrix", "src_vectors", "tgt_vectors", "queries", "eval")
    if v["k"] < 1:
        raise UsageError("--k must be positive")
    m = load_matrix(v["matrix"])
    src = load_vectors(v["src_vectors"])
    tgt = load_vectors(v["tgt_vectors"])
    gold: Dict[str, set] = {}
    if v["eval"]:
        for s, t in read_seed_pairs(v["eval"]):
            gold.setdefault(s, set()).add(t)
    if v["queries"]:
        queries = _read_lines(v["queries"])
    elif gold:
        queries = sorted(gold)
    else:
        raise UsageError("give --queries or --eval")

    out = open(v["output"], "w", encoding="utf-8", newline="\n") if v["output"] else sys.stdout
    failed = 0
    hits1 = hitsk = evaluated = 0
    correct, wrong = [], []
    try:
        for q in queries:
            try:
                ranked = induce_translations(m, src, tgt, q, v["k"])
            except (MonoScoreError, ValueError) as exc:
                failed += 1
                logger.warning("query %s: %s", q, exc)
                out.write(f"{q}\t-\t<OOV>\t-\n")
                continue
            for rank, (tok, score) in enumerate(ranked, start=1):
                out.write(f"{q}\t{rank}\t{tok}\t{score:.6f}\n")
            if q in gold:
                evaluated += 1
                top1 = ranked[0][0] in gold[q]
                hits1 += top1
                hitsk += any(t in gold[q] for t, _ in ranked)
                (correct if top1 else wrong).append(ranked[0][1])
    finally:
        if out is not sys.stdout:
            out.close()
    lines = [f"queries: {len(queries)}, failed (OOV): {failed}"]
    kv: Dict[str, Any] = {"report.queries": len(queries), "report.failed": failed}
    if gold:
        p1 = hits1 / evaluated if evaluated else 0.0
        pk = hitsk / evaluated if evaluated else 0.0
        lines.append(f"precision@1 = {p1:.4f}  precision@{v['k']} = {pk:.4f}  ({evaluated} evaluated)")
        kv.update({"report.evaluated": evaluated, "report.precision_at_1": f"{p1:.6f}",
                   f"report.precision_at_{v['k']}": f"{pk:.6f}"})
        if v["plot_dir"]:
            fig = plot_induction_scores(correct, wrong,
                                        os.path.join(v["plot_dir"], "induction_scores.png"), p1)
            lines.append(f"figure: {fig}")
            kv["report.figure"] = fig
    code = EXIT_DATA if queries and failed == len(queries) else EXIT_OK
    return Outcome(lines, kv, code)


def cmd_make_synthetic(v) -> Outcome:
    if v["noise"] < 0:
        raise UsageError("--noise must be non-negative")
    if v["dim"] < 1 or v["vocab_size"] < 2:
        raise UsageError("--dim must be >= 1 and --vocab-size >= 2")
    world = _usage(make_world, dim=v["dim"], vocab_size=v["vocab_size"], noise=v["noise"],
                   seed=v["seed"], n_phrases=v["n_phrases"], distractors=v["distractors"],
                   n_sentences=v["n_sentences"])
    paths = write_world(world, v["output_dir"])
    lines = [f"{name}: {path}" for name, path in paths.items()]
    return Outcome(lines, {f"file.{k}": p for k, p in paths.items()})


HANDLERS = {
    "train-embeddings": cmd_train_embeddings,
    "train-projection": cmd_train_projection,
    "build-wordsim": cmd_build_wordsim,
    "rescore": cmd_rescore,
    "induce-dict": cmd_induce_dict,
    "make-synthetic": cmd_make_synthetic,
}


def write_report(path, command: str, values: Dict[str, Any], outcome: Outcome, wall: float):
    head = [f"# monoscore {command}"] + [f"# {line}" for line in outcome.summary]
    body = {"command": command}
    body.update({k: v for k, v in values.items() if k != "report"})
    body.update(outcome.report)
    body.setdefault("report.wall_time", f"{wall:.3f}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(head) + "\n" + format_config(body))


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                            format="%(levelname)s %(name)s: %(message)s")
        values = resolve(args.command, args)
        start = time.perf_counter()
        outcome = HANDLERS[args.command](values)
        wall = time.perf_counter() - start
        for line in outcome.summary:
            print(line, file=sys.stderr)
        if values.get("report"):
            write_report(values["report"], args.command, values, outcome, wall)
        return outcome.code
    except UsageError as exc:
        print(f"monoscore: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MonoScoreError, OSError, UnicodeDecodeError) as exc:
        print(f"monoscore: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:  # noqa: BLE001
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
