"""Streaming corpus pipeline: read JSONL, clean, segment, filter, emit.

Per-document work runs in a process pool; results are re-sequenced into
input order before a single writer per output file, so outputs are
byte-identical for any worker count.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from functools import partial
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator

import yaml

from . import textproc
from ._parallel import batched, ordered_map
from .analysis import CorpusStats, StatsAccumulator
from .leadbias import (
    FilterConfig,
    FilterDecision,
    build_blocklist,
    emit_training_pair,
    filter_article,
    segment_article,
)
from .metrics import DECODE_DEFAULTS

log = logging.getLogger(__name__)

ENV_OVERRIDES = {
    "LEADSUM_INPUT": "input_path",
    "LEADSUM_PAIRS": "pairs_path",
    "LEADSUM_AUDIT": "audit_path",
    "LEADSUM_STATS": "stats_path",
}


class DataError(Exception):
    """Unreadable or inconsistent input data (CLI exit code 2)."""


class ConfigError(ValueError):
    """Invalid configuration (CLI exit code 1)."""


class MalformedRecord(ValueError):
    pass


@dataclass(frozen=True)
class DecodeParams:
    min_length: int
    max_length: int
    beam_width: int


def _default_decode() -> dict[str, DecodeParams]:
    return {name: DecodeParams(*v) for name, v in DECODE_DEFAULTS.items()}


@dataclass
class PipelineConfig:
    filter: FilterConfig = field(default_factory=FilterConfig)
    stopwords_path: str | None = None
    prefix_patterns_path: str | None = None
    blocklist_path: str | None = None
    workers: int = 1
    batch_size: int = 256
    input_path: str | None = None
    pairs_path: str | None = None
    audit_path: str | None = None
    stats_path: str | None = None
    report_format: str = "json"
    hist_bin: float = 0.05
    profile_bin: float = 0.05
    decode: dict[str, DecodeParams] = field(default_factory=_default_decode)

    def __post_init__(self):
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.report_format not in ("json", "csv"):
            raise ConfigError(f"report_format must be json or csv, got {self.report_format!r}")

    @property
    def lead_k(self) -> int:
        return self.filter.lead_k

    def echo(self) -> dict:
        """Configuration fields that affect results (worker count excluded)."""
        f = asdict(self.filter)
        for k, v in f.items():
            if v == float("inf"):
                f[k] = None
        return {
            "filter": f,
            "stopwords": self.stopwords_path or f"bundled:{textproc.STOPWORDS_VERSION}",
            "decode": {k: asdict(v) for k, v in self.decode.items()},
        }


_TOP_LEVEL = {
    "stopwords": "stopwords_path",
    "prefix_patterns": "prefix_patterns_path",
    "blocklist": "blocklist_path",
    "workers": "workers",
    "batch_size": "batch_size",
}
_IO_KEYS = {"input": "input_path", "pairs": "pairs_path", "audit": "audit_path", "stats": "stats_path"}
_REPORT_KEYS = {"format": "report_format", "hist_bin": "hist_bin", "profile_bin": "profile_bin"}


def config_from_dict(data: dict[str, Any] | None) -> PipelineConfig:
    """Build a config from the structure of a YAML/JSON config file.

    ::

        filter: {lead_min_words: 10, overlap_threshold: 0.65, lead_k: 3}
        stopwords: path/to/list.txt
        workers: 4
        io: {input: corpus.jsonl, pairs: pairs.jsonl, audit: decisions.jsonl}
        report: {format: csv, hist_bin: 0.05}
        decode: {xsum: {min_length: 11, max_length: 62, beam_width: 6}}
    """
    data = dict(data or {})
    kwargs: dict[str, Any] = {}
    known_filter = {f.name for f in fields(FilterConfig)}
    try:
        filt = data.pop("filter", {}) or {}
        unknown = set(filt) - known_filter
        if unknown:
            raise ConfigError(f"unknown filter keys: {sorted(unknown)}")
        filt = {k: (float("inf") if v is None and k.endswith("max_words") else v) for k, v in filt.items()}
        if "lead_k" in data:
            filt.setdefault("lead_k", data.pop("lead_k"))
        kwargs["filter"] = FilterConfig(**filt)
        for key, attr in _TOP_LEVEL.items():
            if key in data:
                kwargs[attr] = data.pop(key)
        for section, mapping in (("io", _IO_KEYS), ("report", _REPORT_KEYS)):
            sect = data.pop(section, {}) or {}
            unknown = set(sect) - set(mapping)
            if unknown:
                raise ConfigError(f"unknown {section} keys: {sorted(unknown)}")
            for key, attr in mapping.items():
                if key in sect:
                    kwargs[attr] = sect[key]
        if "decode" in data:
            decode = _default_decode()
            for name, params in (data.pop("decode") or {}).items():
                decode[name] = DecodeParams(**params)
            kwargs["decode"] = decode
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if data:
        raise ConfigError(f"unknown config keys: {sorted(data)}")
    return PipelineConfig(**kwargs)


def load_config(path: str | Path | None = None, environ: dict[str, str] | None = None) -> PipelineConfig:
    """Load a config file (YAML or JSON) and apply environment overrides for I/O paths."""
    data = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise DataError(f"config file not found: {p}")
        try:
            data = yaml.safe_load(p.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config {p}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config {p} must be a mapping")
    cfg = config_from_dict(data)
    env = os.environ if environ is None else environ
    for var, attr in ENV_OVERRIDES.items():
        if env.get(var):
            setattr(cfg, attr, env[var])
    return cfg


# -- records -----------------------------------------------------------------


@dataclass
class CorpusRecord:
    id: str
    text: str
    summary: str | list[str] | None = None
    title: str | None = None

    @property
    def references(self) -> list[str] | None:
        if self.summary is None:
            return None
        return [self.summary] if isinstance(self.summary, str) else list(self.summary)


def parse_record(line: str) -> CorpusRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"invalid JSON: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise MalformedRecord("record is not a JSON object")
    rid, text = obj.get("id"), obj.get("text")
    if not isinstance(rid, str) or not rid:
        raise MalformedRecord("missing or non-string 'id'")
    if not isinstance(text, str):
        raise MalformedRecord("missing or non-string 'text'")
    summary = obj.get("summary")
    if summary is not None and not (
        isinstance(summary, str) or (isinstance(summary, list) and all(isinstance(s, str) for s in summary))
    ):
        raise MalformedRecord("'summary' must be a string or a list of strings")
    title = obj.get("title")
    if title is not None and not isinstance(title, str):
        raise MalformedRecord("'title' must be a string")
    return CorpusRecord(rid, text, summary, title)


def read_lines(path: str | Path) -> Iterator[tuple[int, str]]:
    """Yield (1-based line number, line) for non-blank lines of a JSONL file."""
    p = Path(path)
    if not p.is_file():
        raise DataError(f"input file not found: {p}")
    with open(p, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                yield lineno, line


def iter_records(path: str | Path, on_error: Callable[[int, str], None] | None = None) -> Iterator[CorpusRecord]:
    """Parse a corpus JSONL file, skipping malformed lines."""
    for lineno, line in read_lines(path):
        try:
            yield parse_record(line)
        except MalformedRecord as exc:
            if on_error is not None:
                on_error(lineno, str(exc))
            else:
                log.warning("line %d skipped: %s", lineno, exc)


def dumps(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False) + "\n"


# -- worker side ---------------------------------------------------------------

_STATE: dict[str, Any] = {}


def _init_worker(filter_config: FilterConfig, stopwords, prefix_rules, blocklist) -> None:
    _STATE["config"] = filter_config
    _STATE["stopwords"] = stopwords
    _STATE["prefix_rules"] = prefix_rules
    _STATE["blocklist"] = blocklist


def _filter_one(line: str):
    rec = parse_record(line)
    cfg = _STATE["config"]
    article = segment_article(
        rec.id, rec.text, stopwords=_STATE["stopwords"], prefix_rules=_STATE["prefix_rules"]
    )
    decision = filter_article(article, cfg, _STATE["blocklist"])
    pair_line = None
    if decision.passed:
        pair_line = dumps(emit_training_pair(article, decision, cfg.lead_k).to_dict())
    return rec.id, dumps(decision.to_dict()), pair_line, decision


def _filter_batch(batch: list[tuple[int, str]]) -> list:
    out = []
    for lineno, line in batch:
        try:
            out.append(_filter_one(line))
        except MalformedRecord as exc:
            out.append((None, lineno, str(exc), None))
    return out


def _clean_batch(prefix_rules, batch: list[tuple[int, str]]) -> list:
    out = []
    for lineno, line in batch:
        try:
            rec = parse_record(line)
        except MalformedRecord as exc:
            out.append((None, lineno, str(exc)))
            continue
        obj = json.loads(line)
        obj["text"] = textproc.clean_prefix(rec.text, prefix_rules)
        out.append((rec.id, dumps(obj), None))
    return out


# -- driver --------------------------------------------------------------------


@dataclass
class PipelineResult:
    stats: CorpusStats
    decisions_written: int = 0
    pairs_written: int = 0
    malformed: list[tuple[int, str]] = field(default_factory=list)

    def report(self, config: PipelineConfig) -> dict:
        d = self.stats.to_dict()
        d["pairs_written"] = self.pairs_written
        d["decisions_written"] = self.decisions_written
        d["config"] = config.echo()
        return d


def load_resources(config: PipelineConfig):
    """Stopwords, prefix rules and blocklist named by ``config``."""
    try:
        stopwords = textproc.load_stopwords(config.stopwords_path)
        prefix_rules = textproc.load_prefix_patterns(config.prefix_patterns_path)
    except FileNotFoundError as exc:
        raise DataError(f"resource file not found: {exc.filename}") from exc
    blocklist = None
    if config.blocklist_path:
        blocklist = build_blocklist(
            (r.text for r in iter_records(config.blocklist_path)), prefix_rules
        )
    return stopwords, prefix_rules, blocklist


def _write_manifest(path: Path, result: PipelineResult, error: str) -> None:
    manifest = {
        "complete": False,
        "error": error,
        "records_decided": result.decisions_written,
        "pairs_written": result.pairs_written,
    }
    try:
        path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    except OSError:
        log.error("could not write manifest %s", path)


def run_filter_pipeline(
    input_path: str | Path,
    config: PipelineConfig,
    pairs_out,
    decisions_out,
) -> PipelineResult:
    """Filter a corpus, writing training pairs and per-record decisions.

    ``pairs_out`` and ``decisions_out`` are paths or writable text streams.
    Malformed lines and duplicate ids are skipped and reported in the
    result; every other record gets exactly one decision.
    """
    if not Path(input_path).is_file():
        raise DataError(f"input file not found: {input_path}")
    stopwords, prefix_rules, blocklist = load_resources(config)
    lines = read_lines(input_path)
    acc = StatsAccumulator()
    result = PipelineResult(stats=CorpusStats())
    seen: set[str] = set()

    own_pairs = isinstance(pairs_out, (str, Path))
    own_dec = isinstance(decisions_out, (str, Path))
    pf = df = None
    try:
        pf = open(pairs_out, "w", encoding="utf-8", newline="\n") if own_pairs else pairs_out
        df = open(decisions_out, "w", encoding="utf-8", newline="\n") if own_dec else decisions_out
        batches = ordered_map(
            _filter_batch,
            batched(lines, config.batch_size),
            config.workers,
            initializer=_init_worker,
            initargs=(config.filter, stopwords, prefix_rules, blocklist),
        )
        for batch in batches:
            for rid, dec_line, pair_line, decision in batch:
                if rid is None:
                    result.malformed.append((dec_line, pair_line))
                    continue
                if rid in seen:
                    result.malformed.append((-1, f"duplicate id {rid!r}"))
                    continue
                seen.add(rid)
                df.write(dec_line)
                result.decisions_written += 1
                acc.add(decision)
                if pair_line is not None:
                    pf.write(pair_line)
                    result.pairs_written += 1
    except OSError as exc:
        if own_pairs:
            _write_manifest(Path(str(pairs_out) + ".manifest.json"), result, str(exc))
        raise
    finally:
        if own_pairs and pf is not None:
            pf.close()
        if own_dec and df is not None:
            df.close()
    acc.malformed = len(result.malformed)
    result.stats = acc.result()
    for lineno, msg in result.malformed:
        log.warning("line %s skipped: %s", lineno, msg)
    return result


def clean_corpus(input_path: str | Path, output, config: PipelineConfig) -> tuple[int, int]:
    """Rewrite a corpus with article prefixes removed. Returns (written, skipped)."""
    _, prefix_rules, _ = load_resources(PipelineConfig(prefix_patterns_path=config.prefix_patterns_path))
    written = skipped = 0
    own = isinstance(output, (str, Path))
    out = open(output, "w", encoding="utf-8", newline="\n") if own else output
    try:
        fn = partial(_clean_batch, prefix_rules)
        for batch in ordered_map(fn, batched(read_lines(input_path), config.batch_size), config.workers):
            for rid, line, err in batch:
                if rid is None:
                    skipped += 1
                    log.warning("line %s skipped: %s", line, err)
                    continue
                out.write(line)
                written += 1
    finally:
        if own:
            out.close()
    return written, skipped


def map_records(
    fn: Callable[[CorpusRecord], Any],
    input_path: str | Path,
    workers: int = 1,
    batch_size: int = 256,
) -> Iterator[Any]:
    """Apply a picklable ``fn`` to every well-formed record, in input order."""
    work = partial(_map_batch, fn)
    for batch in ordered_map(work, batched(read_lines(input_path), batch_size), workers):
        for ok, value in batch:
            if ok:
                yield value
            else:
                log.warning("line %s skipped: %s", *value)


def _map_batch(fn, batch: list[tuple[int, str]]) -> list:
    out = []
    for lineno, line in batch:
        try:
            out.append((True, fn(parse_record(line))))
        except MalformedRecord as exc:
            out.append((False, (lineno, str(exc))))
    return out


def read_decisions(path: str | Path) -> Iterator[FilterDecision]:
    for lineno, line in read_lines(path):
        try:
            yield FilterDecision.from_dict(json.loads(line))
        except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
            raise DataError(f"{path}:{lineno}: malformed decision record ({exc})") from None


def pairs_from_audit(
    input_path: str | Path, audit_path: str | Path, config: PipelineConfig, output
) -> int:
    """Re-emit training pairs for records the audit log marks as passed."""
    stopwords, prefix_rules, _ = load_resources(PipelineConfig(
        stopwords_path=config.stopwords_path, prefix_patterns_path=config.prefix_patterns_path
    ))
    passed = {d.id: d for d in read_decisions(audit_path) if d.passed}
    own = isinstance(output, (str, Path))
    out = open(output, "w", encoding="utf-8", newline="\n") if own else output
    written = 0
    try:
        for rec in iter_records(input_path):
            d = passed.pop(rec.id, None)
            if d is None:
                continue
            article = segment_article(rec.id, rec.text, stopwords=stopwords, prefix_rules=prefix_rules)
            out.write(dumps(emit_training_pair(article, d, config.lead_k).to_dict()))
            written += 1
    finally:
        if own:
            out.close()
    if passed:
        raise DataError(f"{len(passed)} passing decisions have no matching record, e.g. {next(iter(passed))!r}")
    return written


def iter_jsonl(path: str | Path) -> Iterator[dict]:
    for lineno, line in read_lines(path):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(obj, dict):
            raise DataError(f"{path}:{lineno}: expected a JSON object")
        yield obj
