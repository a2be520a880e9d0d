"""HTTP facade: Lead baseline summaries and ROUGE scoring.

Endpoints::

    POST /summarize  {"text": str, "policy": "sentences:3" | "chars:75"}
        -> {"summary": str, "policy": str}
    POST /score      {"candidate": str, "references": [str],
                      "policy": {"variant": "R1", "report": "F1",
                                 "truncate": "none", "multi_ref": "max"}}
        -> {"precision": float, "recall": float, "f1": float}
    GET  /healthz    -> {"status": "ok", "version": str}

Malformed bodies or policies get 400; empty text or references get 422.
Handlers hold no state beyond the immutable resources loaded at startup.
"""

from __future__ import annotations

import json

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import __version__, metrics
from .leadbias import segment_article
from .pipeline import PipelineConfig, load_resources

_POLICY_KEYS = {"variant", "report", "truncate", "multi_ref"}


class _BadRequest(Exception):
    def __init__(self, status: int, detail: str):
        self.status = status
        self.detail = detail


async def _json_object(request: Request) -> dict:
    body = await request.body()
    try:
        obj = json.loads(body)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise _BadRequest(400, f"body is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise _BadRequest(400, "body must be a JSON object")
    return obj


def _str_field(obj: dict, key: str, default=None) -> str:
    value = obj.get(key, default)
    if not isinstance(value, str):
        raise _BadRequest(400, f"'{key}' must be a string")
    return value


def parse_scoring_policy(raw) -> metrics.ScoringPolicy:
    if raw is None:
        raw = {}
    if isinstance(raw, str):
        raw = {"variant": raw}
    if not isinstance(raw, dict):
        raise _BadRequest(400, "'policy' must be an object")
    unknown = set(raw) - _POLICY_KEYS
    if unknown:
        raise _BadRequest(400, f"unknown policy keys: {sorted(unknown)}")
    if not all(isinstance(v, str) for v in raw.values()):
        raise _BadRequest(400, "policy values must be strings")
    try:
        return metrics.ScoringPolicy.parse(**raw)
    except ValueError as exc:
        raise _BadRequest(400, str(exc)) from None


def create_app(config: PipelineConfig | None = None) -> FastAPI:
    config = config or PipelineConfig()
    stopwords, prefix_rules, _ = load_resources(
        PipelineConfig(stopwords_path=config.stopwords_path, prefix_patterns_path=config.prefix_patterns_path)
    )
    default_lead = f"sentences:{config.lead_k}"

    app = FastAPI(title="leadsum", version=__version__)

    @app.exception_handler(_BadRequest)
    async def _bad_request(_request: Request, exc: _BadRequest):
        return JSONResponse({"detail": exc.detail}, status_code=exc.status)

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "version": __version__}

    @app.post("/summarize")
    async def summarize(request: Request):
        body = await _json_object(request)
        text = _str_field(body, "text")
        descriptor = _str_field(body, "policy", default_lead)
        try:
            policy = metrics.LeadPolicy.parse(descriptor)
        except ValueError as exc:
            raise _BadRequest(400, f"invalid policy {descriptor!r}: {exc}") from None
        if not text.strip():
            raise _BadRequest(422, "'text' is empty")
        article = segment_article("request", text, stopwords=stopwords, prefix_rules=prefix_rules)
        if not article.sentences:
            raise _BadRequest(422, "'text' contains no sentences after cleaning")
        summary = metrics.lead_baseline(article, policy)
        return {"summary": summary, "policy": policy.descriptor()}

    @app.post("/score")
    async def score(request: Request):
        body = await _json_object(request)
        candidate = _str_field(body, "candidate")
        refs = body.get("references")
        if isinstance(refs, str):
            refs = [refs]
        if not isinstance(refs, list) or not all(isinstance(r, str) for r in refs):
            raise _BadRequest(400, "'references' must be a list of strings")
        policy = parse_scoring_policy(body.get("policy"))
        if not refs:
            raise _BadRequest(422, "'references' is empty")
        result = metrics.score_multi_reference(candidate, refs, policy)
        return result.to_dict()

    return app

