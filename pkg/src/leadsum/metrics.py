"""ROUGE-1/2/L scoring, truncation policies and Lead baselines.

Tokens come from :func:`leadsum.textproc.word_surfaces` (case-folded,
punctuation dropped).  No stemming and no stopword removal.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from . import textproc
from .leadbias import SegmentedArticle

VARIANTS = ("R1", "R2", "RL")
REPORTS = ("F1", "Recall")
MULTI_REF = ("max", "mean")


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, precision: float, recall: float) -> "RougeScore":
        if precision + recall == 0:
            return cls(precision, recall, 0.0)
        return cls(precision, recall, 2 * precision * recall / (precision + recall))

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


ZERO = RougeScore(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ScoringPolicy:
    """How a candidate is scored against references.

    ``truncation`` is ``"none"``, ``"chars"`` (hard cut at ``chars``
    characters) or ``"match-reference"`` (keep as many candidate tokens as
    the reference has).
    """

    variant: str = "R1"
    report: str = "F1"
    truncation: str = "none"
    chars: int = 75
    multi_ref: str = "max"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.report not in REPORTS:
            raise ValueError(f"unknown report {self.report!r}; expected one of {REPORTS}")
        if self.truncation not in ("none", "chars", "match-reference"):
            raise ValueError(f"unknown truncation {self.truncation!r}")
        if self.truncation == "chars" and self.chars < 1:
            raise ValueError("character truncation needs chars >= 1")
        if self.multi_ref not in MULTI_REF:
            raise ValueError(f"unknown multi-reference mode {self.multi_ref!r}")

    @classmethod
    def parse(
        cls, variant: str = "R1", report: str = "F1", truncate: str = "none", multi_ref: str = "max"
    ) -> "ScoringPolicy":
        """Build a policy from descriptor strings such as ``truncate="chars:75"``."""
        variant = {"rouge-1": "R1", "rouge-2": "R2", "rouge-l": "RL"}.get(variant.lower(), variant.upper())
        report = {"f1": "F1", "f": "F1", "recall": "Recall", "r": "Recall"}.get(report.lower(), report)
        truncate = truncate.lower()
        chars = 75
        if truncate.startswith("chars"):
            _, _, n = truncate.partition(":")
            chars = int(n) if n else 75
            truncate = "chars"
        elif truncate in ("match-reference", "match_reference", "reference", "tokens"):
            truncate = "match-reference"
        return cls(variant, report, truncate, chars, multi_ref.lower())

    def descriptor(self) -> dict:
        trunc = f"chars:{self.chars}" if self.truncation == "chars" else self.truncation
        return {"variant": self.variant, "report": self.report, "truncate": trunc, "multi_ref": self.multi_ref}

    def headline(self, score: RougeScore) -> float:
        return score.f1 if self.report == "F1" else score.recall


@dataclass(frozen=True)
class LeadPolicy:
    kind: str = "sentences"
    k: int = 3

    def __post_init__(self):
        if self.kind not in ("sentences", "chars"):
            raise ValueError(f"unknown lead policy kind {self.kind!r}")
        if self.k < 1:
            raise ValueError(f"lead policy size must be >= 1, got {self.k}")

    @classmethod
    def parse(cls, descriptor: str) -> "LeadPolicy":
        """``"sentences:3"``, ``"chars:75"`` or ``"lead-3"``."""
        d = descriptor.strip().lower()
        if d.startswith("lead-"):
            return cls("sentences", int(d[5:]))
        kind, sep, n = d.partition(":")
        if not sep:
            raise ValueError(f"malformed lead policy {descriptor!r}")
        return cls(kind, int(n))

    def descriptor(self) -> str:
        return f"{self.kind}:{self.k}"


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int = 1) -> RougeScore:
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    cand = _ngram_counts(candidate, n)
    ref = _ngram_counts(reference, n)
    cand_total = sum(cand.values())
    ref_total = sum(ref.values())
    if not cand_total or not ref_total:
        return ZERO
    hits = sum((cand & ref).values())
    return RougeScore.from_pr(hits / cand_total, hits / ref_total)


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> RougeScore:
    if not candidate or not reference:
        return ZERO
    lcs = lcs_length(candidate, reference)
    return RougeScore.from_pr(lcs / len(candidate), lcs / len(reference))


def score_tokens(candidate: Sequence[str], reference: Sequence[str], variant: str) -> RougeScore:
    if variant == "R1":
        return rouge_n(candidate, reference, 1)
    if variant == "R2":
        return rouge_n(candidate, reference, 2)
    if variant == "RL":
        return rouge_l(candidate, reference)
    raise ValueError(f"unknown variant {variant!r}")


def apply_truncation(candidate: str, reference: Sequence[str], policy: ScoringPolicy) -> list[str]:
    if policy.truncation == "chars":
        return textproc.word_surfaces(candidate[:policy.chars])
    tokens = textproc.word_surfaces(candidate)
    if policy.truncation == "match-reference":
        return tokens[:len(reference)]
    return tokens


def score_multi_reference(candidate: str, references: Sequence[str], policy: ScoringPolicy) -> RougeScore:
    if isinstance(references, str):
        references = [references]
    if not references:
        raise ValueError("at least one reference is required")
    scores = []
    for ref in references:
        ref_tokens = textproc.word_surfaces(ref)
        cand_tokens = apply_truncation(candidate, ref_tokens, policy)
        scores.append(score_tokens(cand_tokens, ref_tokens, policy.variant))
    if len(scores) == 1:
        return scores[0]
    if policy.multi_ref == "max":
        # First reference wins ties.
        return max(scores, key=policy.headline)
    return mean_score(scores)


def mean_score(scores: Iterable[RougeScore]) -> RougeScore:
    """Component-wise arithmetic mean with compensated summation."""
    p, r, f = [], [], []
    for s in scores:
        p.append(s.precision)
        r.append(s.recall)
        f.append(s.f1)
    if not p:
        raise ValueError("cannot average zero scores")
    n = len(p)
    return RougeScore(math.fsum(p) / n, math.fsum(r) / n, math.fsum(f) / n)


class ScoreAccumulator:
    """Streaming mean of per-document scores.

    Partial sums are kept as ``math.fsum`` inputs so the result does not
    depend on how a corpus was split across workers.
    """

    def __init__(self):
        self.count = 0
        self._p: list[float] = []
        self._r: list[float] = []
        self._f: list[float] = []

    def add(self, score: RougeScore) -> None:
        self.count += 1
        self._p.append(score.precision)
        self._r.append(score.recall)
        self._f.append(score.f1)
        if len(self._p) >= 4096:
            self._compact()

    def _compact(self) -> None:
        # fsum of partials is exact-rounded, so compacting keeps the total
        # as an error-free expansion rather than a lossy running float.
        self._p = _partials(self._p)
        self._r = _partials(self._r)
        self._f = _partials(self._f)

    def merge(self, other: "ScoreAccumulator") -> "ScoreAccumulator":
        self.count += other.count
        self._p += other._p
        self._r += other._r
        self._f += other._f
        return self

    def result(self) -> RougeScore:
        if not self.count:
            raise ValueError("no scores accumulated")
        n = self.count
        return RougeScore(math.fsum(self._p) / n, math.fsum(self._r) / n, math.fsum(self._f) / n)


def _partials(values: list[float]) -> list[float]:
    """Shewchuk expansion of ``values``: non-overlapping floats with an exact sum."""
    partials: list[float] = []
    for x in values:
        i = 0
        for y in partials:
            if abs(x) < abs(y):
                x, y = y, x
            hi = x + y
            lo = y - (hi - x)
            if lo:
                partials[i] = lo
                i += 1
            x = hi
        partials[i:] = [x]
    return partials


def corpus_score(pairs: Iterable[tuple[str, Sequence[str]]], policy: ScoringPolicy) -> RougeScore:
    """Mean of per-document scores over ``(candidate, references)`` pairs.

    The headline number for the policy is ``policy.headline(result)``.
    """
    acc = ScoreAccumulator()
    for candidate, references in pairs:
        acc.add(score_multi_reference(candidate, references, policy))
    if not acc.count:
        raise ValueError("corpus_score needs at least one pair")
    return acc.result()


def lead_baseline(article: SegmentedArticle, policy: LeadPolicy) -> str:
    if not article.sentences:
        raise ValueError(f"article {article.id!r} has no sentences")
    if policy.kind == "sentences":
        return " ".join(s.text for s, _ in article.sentences[:policy.k])
    text = article.text or " ".join(s.text for s, _ in article.sentences)
    return textproc.collapse_whitespace(text)[:policy.k]


# Decoding hyper-parameters used downstream on each evaluation set:
# (min summary tokens, max summary tokens, beam width).
DECODE_DEFAULTS = {
    "cnn_dailymail": (56, 142, 4),
    "nyt": (56, 142, 4),
    "xsum": (11, 62, 6),
    "duc2003": (6, 26, 1),
    "duc2004": (6, 26, 1),
    "gigaword": (4, 24, 4),
}

# Per-dataset evaluation conventions: which metric is reported, how the
# candidate is truncated, and which Lead baseline is used.
DATASET_PROTOCOLS = {
    "cnn_dailymail": {"report": "F1", "truncate": "none", "lead": "sentences:3"},
    "nyt": {"report": "Recall", "truncate": "match-reference", "lead": "sentences:3"},
    "xsum": {"report": "F1", "truncate": "none", "lead": "sentences:1"},
    "duc2003": {"report": "F1", "truncate": "chars:75", "lead": "chars:75"},
    "duc2004": {"report": "F1", "truncate": "chars:75", "lead": "chars:75"},
    "gigaword": {"report": "F1", "truncate": "none", "lead": "sentences:8"},
}


def dataset_policy(dataset: str, variant: str = "R1", multi_ref: str = "max") -> ScoringPolicy:
    proto = DATASET_PROTOCOLS[dataset.lower()]
    return ScoringPolicy.parse(variant, proto["report"], proto["truncate"], multi_ref)
