import json
from concurrent.futures import ThreadPoolExecutor

import pytest
from fastapi.testclient import TestClient
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from leadsum import __version__
from leadsum.metrics import ScoringPolicy, score_multi_reference
from leadsum.service import create_app


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app()) as c:
        yield c


ARTICLE = "The storm hit. Power failed. Roads flooded. Schools closed. Crews arrived."


def test_healthz(client):
    first = client.get("/healthz")
    assert first.status_code == 200
    assert first.json() == {"status": "ok", "version": __version__}
    assert client.get("/healthz").content == first.content


def test_healthz_under_load(client):
    with ThreadPoolExecutor(8) as pool:
        responses = list(pool.map(lambda _: client.get("/healthz"), range(64)))
    assert all(r.status_code == 200 for r in responses)


def test_summarize_sentences(client):
    r = client.post("/summarize", json={"text": ARTICLE, "policy": "sentences:3"})
    assert r.status_code == 200
    assert r.json() == {"summary": "The storm hit. Power failed. Roads flooded.", "policy": "sentences:3"}


def test_summarize_default_policy_and_chars(client):
    assert client.post("/summarize", json={"text": ARTICLE}).json()["policy"] == "sentences:3"
    r = client.post("/summarize", json={"text": ARTICLE * 3, "policy": "chars:75"})
    assert len(r.json()["summary"]) == 75


@pytest.mark.parametrize(
    "body, status",
    [
        ({"text": ""}, 422),
        ({"text": "   \n"}, 422),
        ({"text": "x", "policy": "words:3"}, 400),
        ({"text": "x", "policy": "sentences:0"}, 400),
        ({"text": 3}, 400),
        ({"policy": "sentences:3"}, 400),
        ([1, 2], 400),
    ],
)
def test_summarize_errors(client, body, status):
    assert client.post("/summarize", json=body).status_code == status


def test_summarize_invalid_json(client):
    r = client.post("/summarize", content=b"{nope", headers={"content-type": "application/json"})
    assert r.status_code == 400


def test_score_examples(client):
    r = client.post("/score", json={"candidate": "the cat sat", "references": ["the cat sat"]})
    assert r.json() == {"precision": 1.0, "recall": 1.0, "f1": 1.0}
    r = client.post("/score", json={"candidate": "a b", "references": ["c d"], "policy": {"variant": "RL"}})
    assert r.json()["f1"] == 0.0


def test_score_fixture_equals_library(client):
    body = {
        "candidate": "Officials said the storm damaged homes across the coast on Tuesday.",
        "references": ["The storm damaged homes on Tuesday.", "Homes across the coast were damaged."],
        "policy": {"variant": "R2", "report": "Recall", "truncate": "match-reference", "multi_ref": "mean"},
    }
    expected = score_multi_reference(
        body["candidate"], body["references"], ScoringPolicy.parse(**body["policy"])
    )
    assert client.post("/score", json=body).json() == expected.to_dict()


@pytest.mark.parametrize(
    "body, status",
    [
        ({"candidate": "a", "references": []}, 422),
        ({"candidate": "a"}, 400),
        ({"candidate": "a", "references": [1]}, 400),
        ({"candidate": "a", "references": ["a"], "policy": {"variant": "R7"}}, 400),
        ({"candidate": "a", "references": ["a"], "policy": {"color": "red"}}, 400),
        ({"candidate": "a", "references": ["a"], "policy": 5}, 400),
        ({"references": ["a"]}, 400),
    ],
)
def test_score_errors(client, body, status):
    assert client.post("/score", json=body).status_code == status


words = st.lists(st.sampled_from("the cat sat on a mat dog ran".split()), max_size=15).map(" ".join)
policies = st.fixed_dictionaries({
    "variant": st.sampled_from(["R1", "R2", "RL"]),
    "report": st.sampled_from(["F1", "Recall"]),
    "truncate": st.sampled_from(["none", "chars:75", "chars:10", "match-reference"]),
    "multi_ref": st.sampled_from(["max", "mean"]),
})


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(words, st.lists(words, min_size=1, max_size=4), policies)
def test_score_loopback(client, candidate, references, policy):
    r = client.post("/score", json={"candidate": candidate, "references": references, "policy": policy})
    expected = score_multi_reference(candidate, references, ScoringPolicy.parse(**policy))
    # Compare the raw body so float formatting is checked too.
    assert json.loads(r.content) == expected.to_dict()


def test_concurrent_identical_requests(client):
    body = {"candidate": "the cat sat on the mat", "references": ["a cat sat", "the mat"]}
    with ThreadPoolExecutor(8) as pool:
        bodies = list(pool.map(lambda _: client.post("/score", json=body).content, range(40)))
    assert len(set(bodies)) == 1
