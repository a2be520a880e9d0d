"""Text substrate shared by every other module.

Prefix cleaning, rule-based sentence segmentation, case-folded word
tokenization with stopword flags, and n-gram extraction.  Everything here
is a pure function of its inputs; the bundled resources are loaded once
and never mutated.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence, Union

STOPWORDS_VERSION = "en-1"

# Numbers with internal separators stay whole ("1,000", "3.5"); otherwise
# runs of letters/digits joined by intra-word apostrophes.
_TOKEN_RE = re.compile(r"\d+(?:[.,]\d+)+|[^\W_]+(?:'[^\W_]+)*")

# Candidate boundaries: terminator run plus trailing closers, followed by
# whitespace or end of text; or a blank line (paragraph break).
_BOUNDARY_RE = re.compile(
    r"(?P<term>[.!?…]+)[\"'”’)\]]*(?=\s|$)|(?P<para>\n[ \t\r\f\v]*\n)"
)
_PREV_WORD_RE = re.compile(r"(\S+)$")
_INITIALISM_RE = re.compile(r"(?:[A-Za-z]\.)+[A-Za-z]")
_OPENERS = "\"'“‘([{"

# Case-sensitive: "No." is an abbreviation, "no." ends a sentence.
ABBREVIATIONS = frozenset(
    """
    Mr Mrs Ms Mx Dr Prof Sr Jr St Mt Ft Rev Hon Pres Gov Sen Rep Gen Lt Col
    Maj Capt Cmdr Adm Sgt Cpl Pvt Supt Insp Det Fr Msgr Atty Amb Sec Supt
    Jan Feb Mar Apr Jun Jul Aug Sep Sept Oct Nov Dec
    Mon Tue Tues Wed Thu Thur Thurs Fri Sat Sun
    Inc Corp Ltd Co Bros Dept Univ Assn Ave Blvd Rd Hwy
    No Nos Vol Fig Eq Ed Eds approx est vs etc al cf
    e.g i.e a.m p.m
    """.split()
)


def _read_lines(text: str) -> list[str]:
    out = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(line)
    return out


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Load a stopword list (one entry per line). ``None`` loads the bundled list."""
    if path is None:
        return default_stopwords()
    return frozenset(w.casefold() for w in _read_lines(Path(path).read_text(encoding="utf-8")))


@lru_cache(maxsize=None)
def default_stopwords() -> frozenset[str]:
    data = resources.files("leadsum").joinpath("data/stopwords_en.txt").read_text(encoding="utf-8")
    return frozenset(w.casefold() for w in _read_lines(data))


def load_prefix_patterns(path: str | Path | None = None) -> tuple[re.Pattern, ...]:
    """Load prefix regexes (one per line). ``None`` loads the bundled set."""
    if path is None:
        return default_prefix_patterns()
    return tuple(re.compile(p) for p in _read_lines(Path(path).read_text(encoding="utf-8")))


@lru_cache(maxsize=None)
def default_prefix_patterns() -> tuple[re.Pattern, ...]:
    data = resources.files("leadsum").joinpath("data/prefix_patterns.txt").read_text(encoding="utf-8")
    return tuple(re.compile(p) for p in _read_lines(data))


@dataclass(frozen=True)
class Sentence:
    text: str
    char_span: tuple[int, int]


class Token(NamedTuple):
    surface: str
    is_stopword: bool


NGram = tuple  # tuple of token surfaces; len(ngram) == n


def collapse_whitespace(text: str) -> str:
    return " ".join(text.split())


def clean_prefix(text: str, rules: Sequence[re.Pattern | str] | None = None) -> str:
    """Strip a leading reporter/agency/date prefix from ``text``.

    Only the start of the document is examined.  Stacked prefixes
    ("LONDON (Reuters) -- May 2, 2018: ...") are removed together so the
    result is a fixed point: cleaning it again changes nothing.
    """
    patterns = default_prefix_patterns() if rules is None else [
        re.compile(r) if isinstance(r, str) else r for r in rules
    ]
    out = text
    changed = True
    while changed:
        changed = False
        body = out.lstrip()
        offset = len(out) - len(body)
        for pat in patterns:
            m = pat.match(out, offset)
            if m and m.end() > offset:
                out = out[m.end():].lstrip()
                changed = True
                break
    return out


def _is_abbreviation(source: str, term_start: int) -> bool:
    m = _PREV_WORD_RE.search(source, max(0, term_start - 64), term_start)
    if not m:
        return False
    word = m.group(1).lstrip(_OPENERS)
    if not word:
        return False
    if word in ABBREVIATIONS:
        return True
    # Initials and initialisms: "W.", "J.K.", "U.S."
    if len(word) == 1 and word.isupper():
        return True
    return _INITIALISM_RE.fullmatch(word) is not None


def _next_nonspace(source: str, pos: int) -> str:
    n = len(source)
    while pos < n and source[pos].isspace():
        pos += 1
    return source[pos] if pos < n else ""


def _boundaries(text: str) -> Iterable[int]:
    for m in _BOUNDARY_RE.finditer(text):
        if m.group("para") is not None:
            yield m.start()
            continue
        end = m.end()
        nxt = _next_nonspace(text, end)
        if nxt and nxt.islower():
            continue
        if m.group("term") == "." and _is_abbreviation(text, m.start()):
            continue
        yield end


def segment_sentences(text: str) -> list[Sentence]:
    """Split ``text`` into sentences with character spans into the input.

    A boundary is a run of ``.``/``!``/``?`` (plus closing quotes or
    brackets) followed by whitespace, unless the next word starts in lower
    case or the period closes a known abbreviation or initial.  Blank lines
    always break.
    """
    sentences = []
    start = 0
    for cut in _boundaries(text):
        _emit(text, start, cut, sentences)
        start = cut
    _emit(text, start, len(text), sentences)
    return sentences


def _emit(text: str, start: int, end: int, out: list[Sentence]) -> None:
    chunk = text[start:end]
    stripped = chunk.strip()
    if not stripped:
        return
    lead = len(chunk) - len(chunk.lstrip())
    s = start + lead
    out.append(Sentence(stripped, (s, s + len(stripped))))


def word_surfaces(text: str) -> list[str]:
    """Case-folded word surfaces of ``text``, without stopword flags."""
    return _TOKEN_RE.findall(text.casefold().replace("’", "'"))


def tokenize(sentence: Sentence | str, stopwords: frozenset[str] | None = None) -> list[Token]:
    text = sentence.text if isinstance(sentence, Sentence) else sentence
    stop = default_stopwords() if stopwords is None else stopwords
    return [Token(s, s in stop) for s in word_surfaces(text)]


def ngrams(tokens: Sequence[Union[Token, str]], n: int) -> set[NGram]:
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    surfaces = [t.surface if isinstance(t, Token) else t for t in tokens]
    return {tuple(surfaces[i:i + n]) for i in range(len(surfaces) - n + 1)}


def content_types(tokens: Iterable[Token]) -> set[str]:
    """Distinct non-stopword surfaces."""
    return {t.surface for t in tokens if not t.is_stopword}


def fingerprint(text: str) -> str:
    """Stable hash of case-folded, whitespace-collapsed text."""
    return hashlib.sha1(collapse_whitespace(text.casefold()).encode("utf-8")).hexdigest()
