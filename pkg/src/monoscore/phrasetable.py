"""Moses text phrase tables and lexical translation tables."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

from .errors import ErrorCapExceeded, FormatError

logger = logging.getLogger(__name__)

SEP = " ||| "
NULL = "NULL"
MAX_PHRASE_LENGTH = 6


@dataclass
class PhrasePair:
    src: List[str]
    tgt: List[str]
    scores: List[float]
    alignment: List[Tuple[int, int]] = field(default_factory=list)
    raw_extras: List[str] = field(default_factory=list)

    def validate(self, max_phrase_length: Optional[int] = MAX_PHRASE_LENGTH) -> "PhrasePair":
        if not self.src or not self.tgt:
            raise FormatError("empty source or target phrase")
        for side in (self.src, self.tgt):
            if max_phrase_length is not None and len(side) > max_phrase_length:
                raise FormatError(f"phrase of {len(side)} tokens exceeds maximum {max_phrase_length}")
            for tok in side:
                if not tok or "|||" in tok or any(c.isspace() for c in tok):
                    raise FormatError(f"bad token {tok!r}")
        for s in self.scores:
            if not (math.isfinite(s) and s >= 0):
                raise FormatError(f"score {s!r} is not a finite non-negative number")
        for i, j in self.alignment:
            if not (0 <= i < len(self.src) and 0 <= j < len(self.tgt)):
                raise FormatError(f"alignment link {i}-{j} outside a "
                                  f"{len(self.src)}x{len(self.tgt)} phrase pair")
        if any(SEP in extra for extra in self.raw_extras):
            raise FormatError("extra field contains the field separator")
        if not self.alignment and self.raw_extras and "-" in self.raw_extras[0]:
            raise FormatError("first extra field would be read back as an alignment")
        return self


def _parse_alignment(field_text: str) -> List[Tuple[int, int]]:
    links = []
    for tok in field_text.split():
        i, sep, j = tok.partition("-")
        if not sep or not i.isdigit() or not j.isdigit():
            raise FormatError(f"malformed alignment token {tok!r}")
        links.append((int(i), int(j)))
    return links


def parse_phrase_table_line(line: str, max_phrase_length: Optional[int] = MAX_PHRASE_LENGTH) -> PhrasePair:
    """Parse ``src ||| tgt ||| scores [||| i-j ...] [||| extras ...]``.

    The fourth field is read as the word alignment when any of its tokens
    contains ``-``; otherwise it and everything after it are kept verbatim
    in ``raw_extras``.
    """
    line = line.rstrip("\r\n")
    fields = line.split(SEP)
    if len(fields) < 3:
        raise FormatError(f"expected at least 3 ' ||| '-separated fields, got {len(fields)}")
    src = fields[0].split()
    tgt = fields[1].split()
    try:
        scores = [float(s) for s in fields[2].split()]
    except ValueError:
        raise FormatError(f"non-numeric score in {fields[2]!r}") from None
    alignment: List[Tuple[int, int]] = []
    extras = fields[3:]
    if extras and any("-" in tok for tok in extras[0].split()):
        alignment = _parse_alignment(extras[0])
        extras = extras[1:]
    return PhrasePair(src, tgt, scores, alignment, list(extras)).validate(max_phrase_length)


def format_score(v: float) -> str:
    return "%.6g" % v


def emit_phrase_table_line(p: PhrasePair) -> str:
    fields = [" ".join(p.src), " ".join(p.tgt), " ".join(format_score(s) for s in p.scores)]
    if p.alignment:
        fields.append(" ".join(f"{i}-{j}" for i, j in p.alignment))
    fields.extend(p.raw_extras)
    return SEP.join(fields)


@dataclass(frozen=True)
class LexiconEntry:
    f: str
    e: str
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"probability {self.p} outside [0, 1]")
        if self.f == NULL and self.e == NULL:
            raise ValueError("both sides of a lexicon entry are NULL")


def parse_lexicon(path) -> List[LexiconEntry]:
    """Read ``f e p`` lines; ``NULL`` marks the empty word."""
    entries = []
    seen = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            parts = line.split(" ")
            if len(parts) != 3:
                raise FormatError(f"expected 'f e p', got {len(parts)} fields", path=path, lineno=lineno)
            f, e, p = parts
            try:
                entry = LexiconEntry(f, e, float(p))
            except ValueError as exc:
                raise FormatError(str(exc), path=path, lineno=lineno) from None
            if (f, e) in seen:
                raise FormatError(f"duplicate pair ({f}, {e}), first on line {seen[(f, e)]}",
                                  path=path, lineno=lineno)
            seen[(f, e)] = lineno
            entries.append(entry)
    return entries


def write_lexicon(entries, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ent in entries:
            fh.write(f"{ent.f} {ent.e} {format_score(ent.p)}\n")


@dataclass
class StreamSummary:
    lines_read: int = 0
    valid: int = 0
    errors: List[Tuple[int, str]] = field(default_factory=list)


def stream_table(path, callback: Callable[..., None], max_errors: Optional[int] = 1000,
                 max_phrase_length: Optional[int] = MAX_PHRASE_LENGTH,
                 with_line: bool = False) -> StreamSummary:
    """Parse ``path`` line by line, calling ``callback`` for each valid pair.

    With ``with_line`` the callback also gets the decoded line (no newline).
    Malformed lines are recorded as ``(lineno, message)`` and skipped.  More
    than ``max_errors`` of them raises :class:`ErrorCapExceeded`.
    """
    summary = StreamSummary()
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, start=1):
            summary.lines_read += 1
            try:
                line = raw.decode("utf-8").rstrip("\r\n")
                pair = parse_phrase_table_line(line, max_phrase_length)
            except (FormatError, UnicodeDecodeError) as exc:
                message = exc.message if isinstance(exc, FormatError) else f"invalid UTF-8: {exc.reason}"
                summary.errors.append((lineno, message))
                logger.debug("%s:%d: %s", path, lineno, message)
                if max_errors is not None and len(summary.errors) > max_errors:
                    raise ErrorCapExceeded(
                        f"{path}: more than {max_errors} malformed lines (last at line {lineno})")
                continue
            summary.valid += 1
            if with_line:
                callback(pair, line)
            else:
                callback(pair)
    return summary
