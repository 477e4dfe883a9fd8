"""HTTP/JSON surface over one engine, built for a polling console.

Every handler delegates to exactly one engine operation; no knowledge-base
logic lives here. All responses carry the engine revision so clients can
drop stale poll results. Mutations funnel through the engine's internal
lock in arrival order.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .acquisition import Question
from .engine import Engine
from .errors import ProtocolError, ValidationError


class AnswerBody(BaseModel):
    answer: str
    correction: str | None = None


class DetectionBody(BaseModel):
    label: str


def _question_payload(engine: Engine, q: Question) -> dict:
    v = engine.kb.vocabulary
    return {
        "id": q.question_id,
        "text": q.text,
        "state": q.state.value,
        "created_at": q.created_at,
        "triple": {
            "head": v.entity_name(q.triple.head),
            "relation": v.relation_name(q.triple.relation),
            "tail": v.entity_name(q.triple.tail),
        },
    }


def make_app(engine: Engine, console_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="kgcl teaching service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.get("/api/questions/next")
    def next_question() -> dict:
        q = engine.next_question()
        return {
            "revision": engine.revision,
            "question": _question_payload(engine, q) if q else None,
        }

    @app.post("/api/questions/{question_id}/answer")
    def answer(question_id: int, body: AnswerBody) -> dict:
        try:
            committed, added = engine.answer_question(question_id, body.answer, body.correction)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown question id {question_id}")
        except ProtocolError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except ValidationError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        engine.maybe_train()
        v = engine.kb.vocabulary
        return {
            "revision": engine.revision,
            "committed": {
                "head": v.entity_name(committed.head),
                "relation": v.relation_name(committed.relation),
                "tail": v.entity_name(committed.tail),
            },
            "added": added,
            "ack": engine.acks[-1],
        }

    @app.post("/api/detections")
    def detect(body: DetectionBody) -> dict:
        try:
            questions = engine.inject_detection(body.label)
        except ValidationError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {
            "revision": engine.revision,
            "questions": [_question_payload(engine, q) for q in questions],
        }

    @app.get("/api/kb/stats")
    def kb_stats() -> dict:
        return {"revision": engine.revision, **engine.stats()}

    @app.get("/api/kb/triples")
    def kb_triples(entity: str | None = None) -> dict:
        v = engine.kb.vocabulary
        if entity is not None and not v.has_entity(entity):
            return {"revision": engine.revision, "entity": entity, "triples": []}
        if entity is None:
            rows = engine.kb.journal
        else:
            rows = engine.kb.triples_touching(v.entity_id(entity))
        return {
            "revision": engine.revision,
            "entity": entity,
            "triples": [
                {
                    "head": v.entity_name(t.head),
                    "relation": v.relation_name(t.relation),
                    "tail": v.entity_name(t.tail),
                    "source": p.source.value,
                    "session": p.session,
                }
                for t, p in rows
            ],
        }

    @app.get("/api/training/status")
    def training_status() -> dict:
        return {"revision": engine.revision, **engine.training_status()}

    @app.get("/api/metrics/sessions")
    def metrics_sessions() -> dict:
        return {
            "revision": engine.revision,
            "sessions": [
                {
                    "session": r.session_index,
                    "triples_trained": r.triples_trained,
                    "kb_triples": r.kb_triples,
                    "best_epoch": r.best_epoch,
                    "stopped_epoch": r.stopped_epoch,
                    "best_dev_mrr": r.best_dev_mrr,
                    **r.metrics,
                }
                for r in engine.session_records
            ],
        }

    if console_dir is not None and Path(console_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(console_dir), html=True), name="console")

    return app


def serve(engine: Engine, host: str = "127.0.0.1", port: int = 8000, console_dir=None) -> None:
    """Run the service until interrupted."""
    import uvicorn

    uvicorn.run(make_app(engine, console_dir), host=host, port=port, log_level="warning")
