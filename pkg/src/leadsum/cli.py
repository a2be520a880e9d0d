"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from functools import partial
from pathlib import Path

from . import __version__, analysis, metrics, pipeline
from .leadbias import FilterConfig, segment_article
from .pipeline import ConfigError, DataError, PipelineConfig
from .textproc import word_surfaces

log = logging.getLogger("leadsum")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML/JSON pipeline config file")
    p.add_argument("--workers", type=int, help="worker processes (overrides config)")
    p.add_argument("--stopwords", help="stopword list file (one entry per line)")
    p.add_argument("--prefix-patterns", help="prefix regex file (one pattern per line)")
    p.add_argument("--lead-k", type=int, help="number of leading sentences (default 3)")


def _add_report_out(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="report path (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), help="report format")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="leadsum", description="Lead-bias corpus construction and summarization evaluation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("clean", help="strip reporter/agency/date prefixes from article text")
    _add_common(p)
    p.add_argument("--in", dest="input", help="input corpus JSONL")
    p.add_argument("--out", help="output corpus JSONL (default: stdout)")

    p = sub.add_parser("filter", help="filter a corpus and emit Rest->Lead training pairs")
    _add_common(p)
    p.add_argument("--in", dest="input", help="input corpus JSONL")
    p.add_argument("--out", help="training pairs JSONL")
    p.add_argument("--audit", help="per-record decisions JSONL")
    p.add_argument("--stats", help="corpus statistics JSON (default: <out>.stats.json)")
    p.add_argument("--blocklist", help="evaluation-set JSONL whose articles must be excluded")
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lead-min-words", type=int)
    p.add_argument("--lead-max-words", type=int)
    p.add_argument("--rest-min-words", type=int)
    p.add_argument("--rest-max-words", type=int)
    p.add_argument("--min-sentences", type=int)
    p.add_argument("--threshold", type=float, help="minimum Lead/Rest overlap ratio")

    p = sub.add_parser("pairs", help="re-emit training pairs for records an audit log marks as passed")
    _add_common(p)
    p.add_argument("--in", dest="input", required=True, help="input corpus JSONL")
    p.add_argument("--audit", required=True, help="decisions JSONL from a previous filter run")
    p.add_argument("--out", help="training pairs JSONL (default: stdout)")

    p = sub.add_parser("stats", help="summarize a decisions audit log")
    p.add_argument("--config")
    p.add_argument("--audit", required=True, help="decisions JSONL")
    p.add_argument("--in", dest="input", help="corpus JSONL to cross-check ids against")
    _add_report_out(p)

    p = sub.add_parser("rouge", help="score candidate summaries against references")
    p.add_argument("--candidates", required=True, help='JSONL with {"id", "summary"}')
    p.add_argument("--references", required=True, help='JSONL with {"id", "summary": str|[str]}')
    p.add_argument("--variant", default="R1", help="R1, R2, RL or all")
    p.add_argument("--report", help="F1 or Recall")
    p.add_argument("--truncate", help="none, chars:N or match-reference")
    p.add_argument("--multi-ref", default="max", choices=("max", "mean"))
    p.add_argument("--dataset", choices=sorted(metrics.DATASET_PROTOCOLS),
                   help="use the dataset's reporting and truncation convention")
    p.add_argument("--per-doc", help="also write per-document scores to this JSONL")

    p = sub.add_parser("baseline", help="produce Lead baseline summaries")
    _add_common(p)
    p.add_argument("--in", dest="input", required=True, help="corpus JSONL")
    p.add_argument("--policy", help="sentences:K or chars:N (default sentences:3)")
    p.add_argument("--dataset", choices=sorted(metrics.DATASET_PROTOCOLS), help="use the dataset's Lead policy")
    p.add_argument("--out", help="summaries JSONL (default: stdout)")

    p = sub.add_parser("novelty", help="ratio of summary n-grams absent from the leading sentences")
    _add_common(p)
    p.add_argument("--summaries", required=True, help='JSONL with {"id", "summary"}')
    p.add_argument("--in", dest="input", required=True, help="corpus JSONL the summaries belong to")
    p.add_argument("--base", choices=("lead", "article"), default="lead")
    p.add_argument("--max-n", type=int, default=4)
    _add_report_out(p)

    p = sub.add_parser("profile", help="sentence/summary overlap by normalized sentence position")
    _add_common(p)
    p.add_argument("--in", dest="input", required=True, help="corpus JSONL with summaries")
    p.add_argument("--bin-width", type=float)
    _add_report_out(p)

    p = sub.add_parser("distribution", help="distribution and median of non-stopword overlap ratios")
    _add_common(p)
    p.add_argument("--in", dest="input", required=True, help="corpus JSONL (summaries needed for two pairings)")
    p.add_argument("--pairing", default="all", choices=analysis.PAIRINGS + ("all",))
    p.add_argument("--hist-bin", type=float)
    _add_report_out(p)

    p = sub.add_parser("buckets", help="mean score delta per reference-length quintile")
    p.add_argument("--in", dest="input", required=True, help='JSONL with {"ref_length", "score_a", "score_b"}')
    _add_report_out(p)

    p = sub.add_parser("serve", help="run the HTTP summarize/score service")
    p.add_argument("--config")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


def _config(args) -> PipelineConfig:
    cfg = pipeline.load_config(getattr(args, "config", None))
    if getattr(args, "workers", None) is not None:
        cfg.workers = args.workers
    if getattr(args, "stopwords", None):
        cfg.stopwords_path = args.stopwords
    if getattr(args, "prefix_patterns", None):
        cfg.prefix_patterns_path = args.prefix_patterns
    if getattr(args, "batch_size", None):
        cfg.batch_size = args.batch_size
    overrides = {}
    for flag, field_name in (
        ("lead_k", "lead_k"),
        ("lead_min_words", "lead_min_words"),
        ("lead_max_words", "lead_max_words"),
        ("rest_min_words", "rest_min_words"),
        ("rest_max_words", "rest_max_words"),
        ("min_sentences", "min_sentences"),
        ("threshold", "overlap_threshold"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[field_name] = value
    if overrides:
        try:
            cfg.filter = FilterConfig(**{**cfg.filter.__dict__, **overrides})
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if cfg.workers < 1:
        raise ConfigError("--workers must be >= 1")
    return cfg


def _out_stream(path):
    return open(path, "w", encoding="utf-8", newline="\n") if path else sys.stdout


def _require(value, what: str):
    if not value:
        raise UsageError(f"missing {what}")
    return value


def cmd_clean(args) -> int:
    cfg = _config(args)
    src = _require(args.input or cfg.input_path, "--in")
    out = _out_stream(args.out)
    try:
        written, skipped = pipeline.clean_corpus(src, out, cfg)
    finally:
        if args.out:
            out.close()
    log.info("cleaned %d records, skipped %d malformed", written, skipped)
    return EXIT_OK


def cmd_filter(args) -> int:
    cfg = _config(args)
    if args.blocklist:
        cfg.blocklist_path = args.blocklist
    src = _require(args.input or cfg.input_path, "--in")
    pairs_path = _require(args.out or cfg.pairs_path, "--out")
    audit_path = _require(args.audit or cfg.audit_path, "--audit")
    stats_path = args.stats or cfg.stats_path or str(Path(pairs_path).with_suffix("")) + ".stats.json"
    result = pipeline.run_filter_pipeline(src, cfg, pairs_path, audit_path)
    with open(stats_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(result.report(cfg), fh, indent=2)
        fh.write("\n")
    s = result.stats
    print(
        f"{s.article_count} decisions, {result.pairs_written} pairs, "
        f"retention {s.retention_ratio:.4f}, {s.malformed_lines} malformed lines skipped",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_pairs(args) -> int:
    cfg = _config(args)
    out = _out_stream(args.out)
    try:
        n = pipeline.pairs_from_audit(args.input, args.audit, cfg, out)
    finally:
        if args.out:
            out.close()
    log.info("wrote %d pairs", n)
    return EXIT_OK


def cmd_stats(args) -> int:
    cfg = pipeline.load_config(args.config)
    decisions = pipeline.read_decisions(args.audit)
    articles = None
    if args.input:
        articles = (r.id for r in pipeline.iter_records(args.input))
    stats = analysis.corpus_stats(decisions, articles)
    analysis.write_report(stats, args.out, args.format or cfg.report_format)
    if stats.missing_decisions or stats.unknown_decisions:
        print(
            f"id mismatch: {len(stats.missing_decisions)} records without decisions, "
            f"{len(stats.unknown_decisions)} decisions without records",
            file=sys.stderr,
        )
        return EXIT_DATA
    return EXIT_OK


def _summary_field(obj: dict, path, lineno_hint: str):
    for key in ("summary", "candidate", "references", "reference", "text"):
        if key in obj:
            value = obj[key]
            if isinstance(value, str) or (isinstance(value, list) and all(isinstance(v, str) for v in value)):
                return value
            break
    raise DataError(f"{path}: record {lineno_hint} has no usable summary field")


def _paired(left_path, right_path):
    """Zip two JSONL files line by line, checking ids when both carry one."""
    left = pipeline.iter_jsonl(left_path)
    right = pipeline.iter_jsonl(right_path)
    for i, (a, b) in enumerate(zip(left, right), 1):
        if "id" in a and "id" in b and a["id"] != b["id"]:
            raise DataError(f"record {i}: id {a['id']!r} in {left_path} does not match {b['id']!r} in {right_path}")
        yield i, a, b
    if next(left, None) is not None or next(right, None) is not None:
        raise DataError(f"{left_path} and {right_path} have different record counts")


def cmd_rouge(args) -> int:
    if args.dataset:
        proto = metrics.DATASET_PROTOCOLS[args.dataset]
        report = args.report or proto["report"]
        truncate = args.truncate or proto["truncate"]
    else:
        report = args.report or "F1"
        truncate = args.truncate or "none"
    variants = list(metrics.VARIANTS) if args.variant.lower() == "all" else [args.variant]
    try:
        policies = [metrics.ScoringPolicy.parse(v, report, truncate, args.multi_ref) for v in variants]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    accs = [metrics.ScoreAccumulator() for _ in policies]
    per_doc = _out_stream(args.per_doc) if args.per_doc else None
    try:
        for i, cand, ref in _paired(args.candidates, args.references):
            c = _summary_field(cand, args.candidates, str(i))
            refs = _summary_field(ref, args.references, str(i))
            if isinstance(c, list):
                c = " ".join(c)
            refs = [refs] if isinstance(refs, str) else refs
            if not refs:
                raise DataError(f"{args.references}: record {i} has an empty reference list")
            row = {"id": cand.get("id", ref.get("id", i))}
            for pol, acc in zip(policies, accs):
                s = metrics.score_multi_reference(c, refs, pol)
                acc.add(s)
                row[pol.variant] = s.to_dict()
            if per_doc:
                per_doc.write(pipeline.dumps(row))
    finally:
        if per_doc:
            per_doc.close()
    if not accs[0].count:
        raise DataError("no candidate/reference pairs to score")
    out = {"count": accs[0].count, "scores": {}}
    for pol, acc in zip(policies, accs):
        score = acc.result()
        out["scores"][pol.variant] = {**pol.descriptor(), **score.to_dict(), "headline": pol.headline(score)}
    if len(policies) == 1:
        out = {"count": out["count"], **out["scores"][policies[0].variant]}
    json.dump(out, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def _baseline_one(policy, stopwords, prefix_rules, rec):
    article = segment_article(rec.id, rec.text, stopwords=stopwords, prefix_rules=prefix_rules)
    if not article.sentences:
        return {"id": rec.id, "summary": ""}
    return {"id": rec.id, "summary": metrics.lead_baseline(article, policy)}


def cmd_baseline(args) -> int:
    cfg = _config(args)
    desc = args.policy or (metrics.DATASET_PROTOCOLS[args.dataset]["lead"] if args.dataset else f"sentences:{cfg.lead_k}")
    try:
        policy = metrics.LeadPolicy.parse(desc)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    stopwords, prefix_rules, _ = pipeline.load_resources(cfg)
    fn = partial(_baseline_one, policy, stopwords, prefix_rules)
    out = _out_stream(args.out)
    try:
        for row in pipeline.map_records(fn, args.input, cfg.workers, cfg.batch_size):
            out.write(pipeline.dumps(row))
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def _summary_tokens(rec: pipeline.CorpusRecord):
    refs = rec.references
    if refs is None:
        return None
    return [t for r in refs for t in word_surfaces(r)]


def _profile_one(nbins, stopwords, prefix_rules, rec):
    article = segment_article(rec.id, rec.text, stopwords=stopwords, prefix_rules=prefix_rules)
    summary = _summary_tokens(rec)
    if summary is None or not article.sentences:
        return None
    return analysis.sentence_position_ratios(article, summary, nbins)


def cmd_profile(args) -> int:
    cfg = _config(args)
    width = args.bin_width or cfg.profile_bin
    acc = analysis.ProfileAccumulator(width)
    stopwords, prefix_rules, _ = pipeline.load_resources(cfg)
    fn = partial(_profile_one, acc.nbins, stopwords, prefix_rules)
    for ratios in pipeline.map_records(fn, args.input, cfg.workers, cfg.batch_size):
        if ratios is None:
            acc.skipped += 1
        else:
            acc.add_ratios(ratios)
    analysis.write_report(acc.result(), args.out, args.format or cfg.report_format)
    return EXIT_OK


def _distribution_one(pairings, lead_k, stopwords, prefix_rules, rec):
    article = segment_article(rec.id, rec.text, stopwords=stopwords, prefix_rules=prefix_rules)
    summary = _summary_tokens(rec)
    return [analysis.pairing_ratio(article, summary, p, lead_k, stopwords) for p in pairings]


class _Distributions:
    def __init__(self, reports):
        self.reports = reports

    def to_dict(self):
        return {"distributions": [r.to_dict() for r in self.reports]}

    def rows(self):
        return [row for r in self.reports for row in r.rows()]


def cmd_distribution(args) -> int:
    cfg = _config(args)
    pairings = list(analysis.PAIRINGS) if args.pairing == "all" else [args.pairing]
    stopwords, prefix_rules, _ = pipeline.load_resources(cfg)
    fn = partial(_distribution_one, pairings, cfg.lead_k, stopwords, prefix_rules)
    ratios = {p: [] for p in pairings}
    skipped = {p: 0 for p in pairings}
    for values in pipeline.map_records(fn, args.input, cfg.workers, cfg.batch_size):
        for p, r in zip(pairings, values):
            if r is None:
                skipped[p] += 1
            else:
                ratios[p].append(r)
    reports = []
    for p in pairings:
        if not ratios[p]:
            raise DataError(f"no articles with a defined {p} ratio in {args.input}")
        reports.append(analysis.ratio_distribution(ratios[p], p, args.hist_bin or cfg.hist_bin, skipped[p]))
    report = reports[0] if len(reports) == 1 else _Distributions(reports)
    analysis.write_report(report, args.out, args.format or cfg.report_format)
    return EXIT_OK


def cmd_novelty(args) -> int:
    cfg = _config(args)
    stopwords, prefix_rules, _ = pipeline.load_resources(cfg)

    def pairs():
        records = pipeline.iter_records(args.input)
        summaries = pipeline.iter_jsonl(args.summaries)
        for i, (rec, summ) in enumerate(zip(records, summaries), 1):
            if "id" in summ and summ["id"] != rec.id:
                raise DataError(f"record {i}: summary id {summ['id']!r} does not match article {rec.id!r}")
            text = _summary_field(summ, args.summaries, str(i))
            text = text if isinstance(text, str) else " ".join(text)
            article = segment_article(rec.id, rec.text, stopwords=stopwords, prefix_rules=prefix_rules)
            sents = article.sentences[:cfg.lead_k] if args.base == "lead" else article.sentences
            yield word_surfaces(text), [t.surface for _, toks in sents for t in toks]

    report = analysis.novelty_report(pairs(), tuple(range(1, args.max_n + 1)))
    analysis.write_report(report, args.out, args.format or cfg.report_format)
    return EXIT_OK


def cmd_buckets(args) -> int:
    records = []
    for i, obj in enumerate(pipeline.iter_jsonl(args.input), 1):
        try:
            records.append((float(obj["ref_length"]), float(obj["score_a"]), float(obj["score_b"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{args.input}: record {i} is missing ref_length/score_a/score_b ({exc})") from None
    try:
        report = analysis.length_bucket_delta(records)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    analysis.write_report(report, args.out, args.format or "json")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    cfg = pipeline.load_config(args.config)
    uvicorn.run(create_app(cfg), host=args.host, port=args.port)
    return EXIT_OK


COMMANDS = {
    "clean": cmd_clean,
    "filter": cmd_filter,
    "pairs": cmd_pairs,
    "stats": cmd_stats,
    "rouge": cmd_rouge,
    "baseline": cmd_baseline,
    "novelty": cmd_novelty,
    "profile": cmd_profile,
    "distribution": cmd_distribution,
    "buckets": cmd_buckets,
    "serve": cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"leadsum {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"leadsum {args.command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"leadsum {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except BrokenPipeError:
        # Downstream reader (e.g. `head`) went away; not an error.
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    except OSError as exc:
        print(f"leadsum {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
