from __future__ import annotations

import json
from pathlib import Path

import jsonschema
import pytest
from fastapi.testclient import TestClient

from kgcl.engine import Engine
from kgcl.scheduler import Condition, ConditionKind
from kgcl.service import make_app
from kgcl.training import TrainConfig

SCHEMA = json.loads((Path(__file__).resolve().parents[1] / "docs" / "api-schema.json").read_text())


def validate(endpoint: str, payload: dict) -> None:
    schema = dict(SCHEMA["endpoints"][endpoint])
    schema["$defs"] = SCHEMA["$defs"]
    jsonschema.validate(payload, schema)


@pytest.fixture()
def client():
    engine = Engine(
        train_config=TrainConfig(dim=16, num_block_pairs=4, max_epochs=20, patience=10, seed=0),
        condition=Condition(kind=ConditionKind.QUOTA, quota=50),
        questions_per_detection=1,
        seed=0,
    )
    engine.register_relations(["objInLoc", "hasColor"])
    with TestClient(make_app(engine)) as c:
        c.engine = engine
        yield c


def ask(client) -> dict:
    client.post("/api/detections", json={"label": "mug"})
    body = client.post("/api/detections", json={"label": "plate"}).json()
    if body["questions"]:
        return body["questions"][0]
    return client.get("/api/questions/next").json()["question"]


class TestQuestionFlow:
    def test_empty_queue_returns_null(self, client):
        body = client.get("/api/questions/next").json()
        validate("GET /api/questions/next", body)
        assert body["question"] is None

    def test_yes_roundtrip_increments_triple_count(self, client):
        question = ask(client)
        before = client.get("/api/kb/stats").json()
        resp = client.post(f"/api/questions/{question['id']}/answer", json={"answer": "yes"})
        assert resp.status_code == 200
        validate("POST /api/questions/{id}/answer", resp.json())
        after = client.get("/api/kb/stats").json()
        validate("GET /api/kb/stats", after)
        assert after["triples"] == before["triples"] + 1
        assert after["revision"] > before["revision"]

    def test_no_without_correction_is_422(self, client):
        question = ask(client)
        resp = client.post(f"/api/questions/{question['id']}/answer", json={"answer": "no"})
        assert resp.status_code == 422

    def test_double_answer_is_409(self, client):
        question = ask(client)
        url = f"/api/questions/{question['id']}/answer"
        assert client.post(url, json={"answer": "no", "correction": "shelf"}).status_code == 200
        assert client.post(url, json={"answer": "yes"}).status_code == 409

    def test_unknown_question_is_404(self, client):
        resp = client.post("/api/questions/999/answer", json={"answer": "yes"})
        assert resp.status_code == 404

    def test_malformed_body_is_422(self, client):
        question = ask(client)
        resp = client.post(f"/api/questions/{question['id']}/answer", json={"answer": 5})
        assert resp.status_code == 422


class TestReadEndpoints:
    def test_detection_lists_pending_questions(self, client):
        client.post("/api/detections", json={"label": "mug"})
        body = client.post("/api/detections", json={"label": "plate"}).json()
        validate("POST /api/detections", body)
        nxt = client.get("/api/questions/next").json()
        assert nxt["question"]["state"] == "pending"

    def test_kb_triples_by_entity(self, client):
        question = ask(client)
        client.post(f"/api/questions/{question['id']}/answer", json={"answer": "no", "correction": "shelf"})
        body = client.get("/api/kb/triples", params={"entity": "shelf"}).json()
        validate("GET /api/kb/triples", body)
        assert len(body["triples"]) == 1
        assert body["triples"][0]["source"] == "human-corrected"

    def test_kb_triples_unknown_entity_is_empty(self, client):
        body = client.get("/api/kb/triples", params={"entity": "unicorn"}).json()
        assert body["triples"] == []

    def test_training_status_shape(self, client):
        body = client.get("/api/training/status").json()
        validate("GET /api/training/status", body)
        assert body["mode"] == "exploring"

    def test_metrics_sessions_shape(self, client):
        body = client.get("/api/metrics/sessions").json()
        validate("GET /api/metrics/sessions", body)
        assert body["sessions"] == []

    def test_revision_monotone_across_requests(self, client):
        revisions = []
        for label in ("a", "b", "c"):
            revisions.append(client.post("/api/detections", json={"label": label}).json()["revision"])
        assert revisions == sorted(revisions)
        assert len(set(revisions)) == len(revisions)


def test_quota_training_runs_through_api():
    engine = Engine(
        train_config=TrainConfig(dim=16, num_block_pairs=4, max_epochs=15, patience=10, seed=2),
        condition=Condition(kind=ConditionKind.QUOTA, quota=2),
        questions_per_detection=1,
        seed=2,
    )
    engine.register_relations(["objInLoc"])
    with TestClient(make_app(engine)) as client:
        client.post("/api/detections", json={"label": "mug"})
        for label, corr in (("plate", "shelf"), ("fork", "drawer")):
            qs = client.post("/api/detections", json={"label": label}).json()["questions"]
            client.post(f"/api/questions/{qs[0]['id']}/answer", json={"answer": "no", "correction": corr})
        status = client.get("/api/training/status").json()
        assert status["sessions_completed"] == 1
        sessions = client.get("/api/metrics/sessions").json()["sessions"]
        assert len(sessions) == 1
        validate("GET /api/metrics/sessions", client.get("/api/metrics/sessions").json())
