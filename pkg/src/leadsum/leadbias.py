"""Lead/Rest splitting, the article filter, eval-set dedup and pair emission."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from . import textproc
from .textproc import Sentence, Token


class Reason(str, Enum):
    """Rejection codes; declaration order is the order they are reported in."""

    TOO_FEW_SENTENCES = "TooFewSentences"
    LEAD_TOO_SHORT = "LeadTooShort"
    LEAD_TOO_LONG = "LeadTooLong"
    REST_TOO_SHORT = "RestTooShort"
    REST_TOO_LONG = "RestTooLong"
    LEAD_REPEATED_IN_REST = "LeadRepeatedInRest"
    EMPTY_LEAD_CONTENT = "EmptyLeadContent"
    OVERLAP_BELOW_THRESHOLD = "OverlapBelowThreshold"
    DUPLICATE = "Duplicate"


class EmptyLeadContent(ValueError):
    """The lead has no non-stopword types, so the overlap ratio is undefined."""


@dataclass
class SegmentedArticle:
    id: str
    sentences: list[tuple[Sentence, list[Token]]]
    text: str = ""

    @property
    def word_count(self) -> int:
        return sum(len(toks) for _, toks in self.sentences)

    def __len__(self) -> int:
        return len(self.sentences)


def segment_article(
    id: str,
    text: str,
    *,
    stopwords: frozenset[str] | None = None,
    prefix_rules=None,
    clean: bool = True,
) -> SegmentedArticle:
    """Clean, segment and tokenize one document."""
    stop = textproc.default_stopwords() if stopwords is None else stopwords
    if clean:
        text = textproc.clean_prefix(text, prefix_rules)
    sentences = [
        (s, [Token(w, w in stop) for w in textproc.word_surfaces(s.text)])
        for s in textproc.segment_sentences(text)
    ]
    return SegmentedArticle(id=id, sentences=sentences, text=text)


@dataclass(frozen=True)
class FilterConfig:
    lead_min_words: float = 10
    lead_max_words: float = 150
    rest_min_words: float = 150
    rest_max_words: float = 1200
    min_sentences: int = 6
    overlap_threshold: float = 0.65
    lead_k: int = 3
    reject_lead_repeats: bool = True

    def __post_init__(self):
        if not 0 <= self.overlap_threshold <= 1:
            raise ValueError(f"overlap_threshold must lie in [0, 1], got {self.overlap_threshold}")
        if self.lead_min_words > self.lead_max_words:
            raise ValueError("lead_min_words exceeds lead_max_words")
        if self.rest_min_words > self.rest_max_words:
            raise ValueError("rest_min_words exceeds rest_max_words")
        if self.lead_k < 1:
            raise ValueError(f"lead_k must be >= 1, got {self.lead_k}")
        if self.min_sentences < 0:
            raise ValueError("min_sentences must be non-negative")

    @classmethod
    def permissive(cls, lead_k: int = 3) -> "FilterConfig":
        return cls(0, math.inf, 0, math.inf, 1, 0.0, lead_k, reject_lead_repeats=False)


@dataclass
class LeadSplit:
    lead: list[tuple[Sentence, list[Token]]]
    rest: list[tuple[Sentence, list[Token]]]

    @property
    def lead_words(self) -> int:
        return sum(len(t) for _, t in self.lead)

    @property
    def rest_words(self) -> int:
        return sum(len(t) for _, t in self.rest)

    @property
    def lead_tokens(self) -> list[Token]:
        return [tok for _, toks in self.lead for tok in toks]

    @property
    def rest_tokens(self) -> list[Token]:
        return [tok for _, toks in self.rest for tok in toks]

    @property
    def lead_text(self) -> str:
        return " ".join(s.text for s, _ in self.lead)

    @property
    def rest_text(self) -> str:
        return " ".join(s.text for s, _ in self.rest)


def split_lead(article: SegmentedArticle, k: int = 3) -> LeadSplit:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not article.sentences:
        raise ValueError(f"article {article.id!r} has no sentences")
    return LeadSplit(lead=article.sentences[:k], rest=article.sentences[k:])


def overlap_ratio(lead: Iterable[Token], rest: Iterable[Token]) -> float:
    """Fraction of distinct non-stopword lead types that also occur in rest."""
    lead_types = textproc.content_types(lead)
    if not lead_types:
        raise EmptyLeadContent("lead has no non-stopword tokens")
    rest_types = textproc.content_types(rest)
    return len(lead_types & rest_types) / len(lead_types)


def _repeat_key(text: str) -> str:
    return textproc.collapse_whitespace(text)


def exact_repeat_check(lead_sentence: Sentence | str, rest: Sequence[Sentence | str]) -> bool:
    """True if some rest sentence equals the lead sentence modulo whitespace runs."""
    key = _repeat_key(lead_sentence.text if isinstance(lead_sentence, Sentence) else lead_sentence)
    return any(
        _repeat_key(s.text if isinstance(s, Sentence) else s) == key for s in rest
    )


@dataclass
class FilterDecision:
    id: str
    passed: bool
    reasons: list[Reason] = field(default_factory=list)
    overlap_ratio: float | None = None
    lead_words: int = 0
    rest_words: int = 0
    sentences: int = 0

    def to_dict(self) -> dict:
        d = {"id": self.id, "passed": self.passed, "reasons": [r.value for r in self.reasons]}
        if self.overlap_ratio is not None:
            d["overlap_ratio"] = self.overlap_ratio
        d["lead_words"] = self.lead_words
        d["rest_words"] = self.rest_words
        d["sentences"] = self.sentences
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FilterDecision":
        return cls(
            id=d["id"],
            passed=bool(d["passed"]),
            reasons=[Reason(r) for r in d.get("reasons", [])],
            overlap_ratio=d.get("overlap_ratio"),
            lead_words=int(d.get("lead_words", 0)),
            rest_words=int(d.get("rest_words", 0)),
            sentences=int(d.get("sentences", 0)),
        )


def filter_article(
    article: SegmentedArticle,
    config: FilterConfig = FilterConfig(),
    blocklist: frozenset[str] | set[str] | None = None,
) -> FilterDecision:
    """Evaluate every rule and report all violations, not just the first."""
    n = len(article.sentences)
    lead = article.sentences[:config.lead_k]
    rest = article.sentences[config.lead_k:]
    lead_words = sum(len(t) for _, t in lead)
    rest_words = sum(len(t) for _, t in rest)

    reasons = []
    if n < config.min_sentences:
        reasons.append(Reason.TOO_FEW_SENTENCES)
    if lead_words < config.lead_min_words:
        reasons.append(Reason.LEAD_TOO_SHORT)
    if lead_words > config.lead_max_words:
        reasons.append(Reason.LEAD_TOO_LONG)
    if rest_words < config.rest_min_words:
        reasons.append(Reason.REST_TOO_SHORT)
    if rest_words > config.rest_max_words:
        reasons.append(Reason.REST_TOO_LONG)

    if config.reject_lead_repeats:
        rest_keys = {_repeat_key(s.text) for s, _ in rest}
        if any(_repeat_key(s.text) in rest_keys for s, _ in lead):
            reasons.append(Reason.LEAD_REPEATED_IN_REST)

    ratio = None
    try:
        ratio = overlap_ratio(
            (t for _, toks in lead for t in toks), (t for _, toks in rest for t in toks)
        )
    except EmptyLeadContent:
        reasons.append(Reason.EMPTY_LEAD_CONTENT)
    else:
        if ratio < config.overlap_threshold:
            reasons.append(Reason.OVERLAP_BELOW_THRESHOLD)

    if blocklist is not None and not dedup_filter(article, blocklist):
        reasons.append(Reason.DUPLICATE)

    return FilterDecision(
        id=article.id,
        passed=not reasons,
        reasons=reasons,
        overlap_ratio=ratio,
        lead_words=lead_words,
        rest_words=rest_words,
        sentences=n,
    )


def article_fingerprint(article: SegmentedArticle) -> str:
    return textproc.fingerprint(article.text)


def build_blocklist(texts: Iterable[str], prefix_rules=None) -> frozenset[str]:
    """Fingerprint evaluation-set articles, cleaned the same way as the corpus."""
    return frozenset(
        textproc.fingerprint(textproc.clean_prefix(t, prefix_rules)) for t in texts
    )


def dedup_filter(article: SegmentedArticle, blocklist: frozenset[str] | set[str]) -> bool:
    """True means keep: the article's fingerprint is not blocklisted."""
    return article_fingerprint(article) not in blocklist


@dataclass(frozen=True)
class TrainingPair:
    id: str
    source: str
    target: str
    overlap_ratio: float

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "source": self.source,
            "target": self.target,
            "overlap_ratio": self.overlap_ratio,
        }


def emit_training_pair(
    article: SegmentedArticle, decision: FilterDecision, lead_k: int = 3
) -> TrainingPair:
    """Build the (Rest -> Lead) example for an article that passed the filter."""
    if not decision.passed:
        raise ValueError(f"article {article.id!r} did not pass the filter: {decision.reasons}")
    if decision.id != article.id:
        raise ValueError(f"decision id {decision.id!r} does not match article {article.id!r}")
    split = split_lead(article, lead_k)
    source, target = split.rest_text, split.lead_text
    if not source or not target:
        raise ValueError(f"article {article.id!r} has an empty lead or rest")
    return TrainingPair(article.id, source, target, decision.overlap_ratio)
