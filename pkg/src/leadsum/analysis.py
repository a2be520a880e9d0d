"""Corpus statistics: positional lead-bias profiles, overlap-ratio
distributions, novel n-gram ratios, length-bucket deltas and filter stats.

Every report exposes ``to_dict()`` (JSON) and ``rows()`` (CSV).
"""

from __future__ import annotations

import csv
import json
import math
import statistics
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from . import textproc
from .leadbias import FilterDecision, Reason, SegmentedArticle
from .textproc import Token

PAIRINGS = ("SummaryVsArticle", "SummaryVsRest", "Lead3VsRest")


def _surfaces(tokens: Iterable[Token | str]) -> list[str]:
    return [t.surface if isinstance(t, Token) else t for t in tokens]


def _bin_count(width: float) -> int:
    if not 0 < width <= 1:
        raise ValueError(f"bin width must lie in (0, 1], got {width}")
    n = round(1 / width)
    if abs(n * width - 1) > 1e-9:
        raise ValueError(f"bin width {width} does not divide 1 evenly")
    return n


def exact_median(values: Sequence[float]) -> float | None:
    """Lower median: always one of the observed values."""
    if not values:
        return None
    return statistics.median_low(values)


# -- positional profile ------------------------------------------------------


@dataclass
class BinnedProfile:
    bin_width: float
    bins: list[tuple[float, float, int]]  # (bin_start, mean_value, sample_count)
    skipped: int = 0

    def rows(self) -> list[dict]:
        return [{"bin_start": s, "mean_value": m, "sample_count": c} for s, m, c in self.bins]

    def to_dict(self) -> dict:
        return {"bin_width": self.bin_width, "skipped": self.skipped, "bins": self.rows()}

    def weighted_mean(self) -> float:
        total = sum(c for _, _, c in self.bins)
        return math.fsum(m * c for _, m, c in self.bins) / total if total else 0.0


class ProfileAccumulator:
    def __init__(self, bin_width: float = 0.05):
        self.bin_width = bin_width
        self.nbins = _bin_count(bin_width)
        self.sums = [0.0] * self.nbins
        self.counts = [0] * self.nbins
        self.skipped = 0

    def add(self, article: SegmentedArticle, summary: Iterable[Token | str] | None) -> None:
        if summary is None:
            self.skipped += 1
            return
        for b, r in sentence_position_ratios(article, summary, self.nbins):
            self.sums[b] += r
            self.counts[b] += 1

    def add_ratios(self, ratios: Iterable[tuple[int, float]]) -> None:
        for b, r in ratios:
            self.sums[b] += r
            self.counts[b] += 1

    def result(self) -> BinnedProfile:
        bins = [
            (i * self.bin_width, self.sums[i] / self.counts[i] if self.counts[i] else 0.0, self.counts[i])
            for i in range(self.nbins)
        ]
        return BinnedProfile(self.bin_width, bins, self.skipped)


def sentence_position_ratios(
    article: SegmentedArticle, summary: Iterable[Token | str], nbins: int
) -> list[tuple[int, float]]:
    """(bin index, word-type overlap with the summary) for each sentence.

    Position is sentence index over sentence count.  Sentences without any
    word tokens carry no ratio and are left out.
    """
    summary_types = set(_surfaces(summary))
    n = len(article.sentences)
    out = []
    for i, (_, toks) in enumerate(article.sentences):
        types = {t.surface for t in toks}
        if not types:
            continue
        out.append((i * nbins // n, len(types & summary_types) / len(types)))
    return out


def position_overlap_profile(
    corpus: Iterable[tuple[SegmentedArticle, Iterable[Token | str] | None]], bin_width: float = 0.05
) -> BinnedProfile:
    acc = ProfileAccumulator(bin_width)
    for article, summary in corpus:
        acc.add(article, summary)
    return acc.result()


# -- overlap-ratio distributions ----------------------------------------------


@dataclass
class RatioDistribution:
    label: str
    histogram: list[tuple[float, float]]  # (bin_start, density)
    median: float | None
    count: int
    skipped: int = 0

    def rows(self) -> list[dict]:
        return [{"label": self.label, "bin_start": s, "density": d} for s, d in self.histogram]

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "median": self.median,
            "count": self.count,
            "skipped": self.skipped,
            "histogram": [{"bin_start": s, "density": d} for s, d in self.histogram],
        }


def pairing_ratio(
    article: SegmentedArticle,
    summary: Iterable[Token | str] | None,
    pairing: str,
    lead_k: int = 3,
    stopwords: frozenset[str] | None = None,
) -> float | None:
    """Type-level non-stopword overlap for one article under ``pairing``.

    ``None`` when the ratio is undefined (missing summary, or nothing to
    measure in the numerator's text).
    """
    stop = textproc.default_stopwords() if stopwords is None else stopwords
    if pairing == "Lead3VsRest":
        focus = {t.surface for _, toks in article.sentences[:lead_k] for t in toks if not t.is_stopword}
        base = {t.surface for _, toks in article.sentences[lead_k:] for t in toks if not t.is_stopword}
    elif pairing in ("SummaryVsArticle", "SummaryVsRest"):
        if summary is None:
            return None
        focus = {s for s in _surfaces(summary) if s not in stop}
        start = 0 if pairing == "SummaryVsArticle" else lead_k
        base = {t.surface for _, toks in article.sentences[start:] for t in toks if not t.is_stopword}
    else:
        raise ValueError(f"unknown pairing {pairing!r}; expected one of {PAIRINGS}")
    if not focus:
        return None
    return len(focus & base) / len(focus)


def ratio_distribution(ratios: Sequence[float], label: str, hist_bin: float = 0.05, skipped: int = 0) -> RatioDistribution:
    if not ratios:
        raise ValueError("cannot build a distribution from an empty corpus")
    nbins = _bin_count(hist_bin)
    counts = [0] * nbins
    for r in ratios:
        counts[min(int(r * nbins + 1e-12), nbins - 1)] += 1
    n = len(ratios)
    hist = [(i * hist_bin, c / (n * hist_bin)) for i, c in enumerate(counts)]
    return RatioDistribution(label, hist, exact_median(ratios), n, skipped)


def overlap_distribution(
    corpus: Iterable[tuple[SegmentedArticle, Iterable[Token | str] | None]],
    pairing: str,
    hist_bin: float = 0.05,
    lead_k: int = 3,
) -> RatioDistribution:
    if pairing not in PAIRINGS:
        raise ValueError(f"unknown pairing {pairing!r}; expected one of {PAIRINGS}")
    ratios, skipped = [], 0
    for article, summary in corpus:
        r = pairing_ratio(article, summary, pairing, lead_k)
        if r is None:
            skipped += 1
        else:
            ratios.append(r)
    return ratio_distribution(ratios, pairing, hist_bin, skipped)


# -- novelty -----------------------------------------------------------------


def novel_ngram_ratio(summary: Sequence[Token | str], base: Sequence[Token | str], n: int) -> float | None:
    """Share of distinct summary n-grams that never occur in ``base``."""
    grams = textproc.ngrams(_surfaces(summary), n)
    if not grams:
        return None
    return len(grams - textproc.ngrams(_surfaces(base), n)) / len(grams)


@dataclass
class NoveltyReport:
    per_n: dict[int, float | None]
    counts: dict[int, int] = field(default_factory=dict)

    def rows(self) -> list[dict]:
        return [{"n": n, "novel_ratio": r, "documents": self.counts.get(n, 0)} for n, r in self.per_n.items()]

    def to_dict(self) -> dict:
        return {"per_n": {str(n): r for n, r in self.per_n.items()}, "counts": {str(n): c for n, c in self.counts.items()}}


def novelty_report(
    pairs: Iterable[tuple[Sequence[Token | str], Sequence[Token | str]]], ns: Sequence[int] = (1, 2, 3, 4)
) -> NoveltyReport:
    """Mean per-document novel n-gram ratio over (summary, base) pairs."""
    values: dict[int, list[float]] = {n: [] for n in ns}
    for summary, base in pairs:
        for n in ns:
            r = novel_ngram_ratio(summary, base, n)
            if r is not None:
                values[n].append(r)
    return NoveltyReport(
        {n: (math.fsum(v) / len(v) if v else None) for n, v in values.items()},
        {n: len(v) for n, v in values.items()},
    )


# -- length buckets ----------------------------------------------------------

BUCKET_LABELS = ("0-20%", "20-40%", "40-60%", "60-80%", "80-100%")


@dataclass
class BucketDeltaReport:
    buckets: list[tuple[str, int, float]]  # (label, size, mean delta)

    def rows(self) -> list[dict]:
        return [{"bucket": b, "size": n, "mean_delta": d} for b, n, d in self.buckets]

    def to_dict(self) -> dict:
        return {"buckets": self.rows()}


def length_bucket_delta(records: Iterable[tuple[float, float, float]]) -> BucketDeltaReport:
    """Mean ``score_b - score_a`` per reference-length quintile.

    Records are sorted by reference length and split into five contiguous
    groups; leftover records go to the earliest groups.  Length ties are
    ordered by the scores themselves so the result does not depend on
    input order.
    """
    recs = sorted(records)
    if len(recs) < 5:
        raise ValueError(f"need at least 5 records, got {len(recs)}")
    q, rem = divmod(len(recs), 5)
    buckets, start = [], 0
    for i, label in enumerate(BUCKET_LABELS):
        size = q + (1 if i < rem else 0)
        chunk = recs[start:start + size]
        start += size
        buckets.append((label, size, math.fsum(b - a for _, a, b in chunk) / size))
    return BucketDeltaReport(buckets)


# -- filter statistics -------------------------------------------------------


@dataclass
class CorpusStats:
    article_count: int = 0
    passed_count: int = 0
    mean_lead_words: float | None = None
    mean_rest_words: float | None = None
    total_words: int = 0
    rejection_counts: dict[str, int] = field(default_factory=dict)
    retention_ratio: float = 0.0
    median_overlap_retained: float | None = None
    malformed_lines: int = 0
    missing_decisions: list[str] = field(default_factory=list)
    unknown_decisions: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def rows(self) -> list[dict]:
        d = self.to_dict()
        out = [{"metric": k, "value": v} for k, v in d.items() if not isinstance(v, (dict, list))]
        out += [{"metric": f"rejected.{k}", "value": v} for k, v in self.rejection_counts.items()]
        return out


class StatsAccumulator:
    """Streaming aggregate of filter decisions.

    Word means and totals cover retained articles only, which is what the
    emitted training data contains.
    """

    def __init__(self):
        self.total = 0
        self.passed = 0
        self.lead_words = 0
        self.rest_words = 0
        self.rejections = {r.value: 0 for r in Reason}
        self.retained_ratios: list[float] = []
        self.malformed = 0

    def add(self, d: FilterDecision) -> None:
        self.total += 1
        for r in d.reasons:
            self.rejections[Reason(r).value] += 1
        if d.passed:
            self.passed += 1
            self.lead_words += d.lead_words
            self.rest_words += d.rest_words
            self.retained_ratios.append(d.overlap_ratio)

    def merge(self, other: "StatsAccumulator") -> "StatsAccumulator":
        self.total += other.total
        self.passed += other.passed
        self.lead_words += other.lead_words
        self.rest_words += other.rest_words
        for k, v in other.rejections.items():
            self.rejections[k] += v
        self.retained_ratios.extend(other.retained_ratios)
        self.malformed += other.malformed
        return self

    def result(self) -> CorpusStats:
        p = self.passed
        return CorpusStats(
            article_count=self.total,
            passed_count=p,
            mean_lead_words=self.lead_words / p if p else None,
            mean_rest_words=self.rest_words / p if p else None,
            total_words=self.lead_words + self.rest_words,
            rejection_counts=dict(self.rejections),
            retention_ratio=p / self.total if self.total else 0.0,
            median_overlap_retained=exact_median(self.retained_ratios),
            malformed_lines=self.malformed,
        )


def corpus_stats(decisions: Iterable[FilterDecision], articles: Iterable[SegmentedArticle | str] | None = None) -> CorpusStats:
    """Aggregate decisions; when ``articles`` is given, cross-check the id sets."""
    acc = StatsAccumulator()
    seen = []
    for d in decisions:
        acc.add(d)
        seen.append(d.id)
    stats = acc.result()
    if articles is not None:
        article_ids = {a.id if isinstance(a, SegmentedArticle) else a for a in articles}
        decided = set(seen)
        stats.missing_decisions = sorted(article_ids - decided)
        stats.unknown_decisions = sorted(decided - article_ids)
    return stats


# -- output ------------------------------------------------------------------


def write_report(report, path: str | Path | None, fmt: str = "json", stream=None) -> None:
    """Write ``report`` as JSON or CSV to ``path`` (or ``stream`` when path is None)."""
    out = open(path, "w", encoding="utf-8", newline="") if path else (stream or sys.stdout)
    try:
        if fmt == "csv":
            rows = report.rows()
            if rows:
                writer = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
                writer.writeheader()
                writer.writerows(rows)
        else:
            json.dump(report.to_dict(), out, indent=2, sort_keys=False)
            out.write("\n")
    finally:
        if path:
            out.close()
