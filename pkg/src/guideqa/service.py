"""REST service: ask / feedback / admin retrain / health / metrics.

The service owns one atomic snapshot (knowledge base, model, templates,
threshold). Requests read the snapshot reference once, so a concurrent
retrain never exposes a mixed (old KB, new model) pair; in-flight requests
finish on the snapshot they started with. Feedback and missed-question
writes go through the store's single-writer lock.

Configuration comes from flags or environment:
    GUIDEQA_ADDR, GUIDEQA_DATA_DIR, GUIDEQA_KB, GUIDEQA_TEMPLATES,
    GUIDEQA_THRESHOLD, GUIDEQA_ADMIN_TOKEN, GUIDEQA_CORS_ORIGINS
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Header, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response as HttpResponse
from pydantic import BaseModel

from . import classify, dialogue, gen
from . import kb as kb_module
from .classify import IntentModel
from .dialogue import FeedbackStore, ResponseKind
from .errors import AlreadyVoted, GuideQAError, UnknownFeedbackId
from .kb import KnowledgeBase

logger = logging.getLogger("guideqa.service")

MAX_QUESTION_CHARS = 2000
EXTRAS_FILENAME = "labeled_extras.jsonl"


@dataclass(frozen=True)
class Snapshot:
    knowledge: KnowledgeBase
    model: IntentModel
    templates: tuple
    threshold: float
    version: int


class ServiceState:
    """Mutable service state: the current snapshot, counters, and the store."""

    def __init__(self, store: FeedbackStore, admin_token: str | None = None,
                 kb_path=None, templates_path=None, alpha: float = classify.PIPELINE_ALPHA):
        self.store = store
        self.admin_token = admin_token
        self.kb_path = kb_path
        self.templates_path = templates_path
        self.alpha = alpha
        self.snapshot: Snapshot | None = None
        self.started_at = time.time()
        self._counter_lock = threading.Lock()
        self._retrain_lock = threading.Lock()
        self.counters = {"asks": 0, "answered": 0, "idk": 0,
                         "feedback_yes": 0, "feedback_no": 0}

    def swap(self, snapshot: Snapshot):
        self.snapshot = snapshot  # single reference assignment: atomic

    def count_ask(self, kind: ResponseKind):
        with self._counter_lock:
            self.counters["asks"] += 1
            self.counters["answered" if kind is ResponseKind.ANSWERED else "idk"] += 1

    def count_vote(self, helpful: str):
        with self._counter_lock:
            self.counters[f"feedback_{helpful}"] += 1

    def extras_path(self) -> Path:
        return self.store.data_dir / EXTRAS_FILENAME

    def retrain(self) -> tuple[Snapshot, Snapshot]:
        """Serialize retrains; leave the old snapshot in place on failure."""
        with self._retrain_lock:
            previous = self.snapshot
            if previous is None:
                raise GuideQAError("no snapshot loaded")
            if self.kb_path is not None:
                knowledge = kb_module.load_guide(self.kb_path)
            else:
                knowledge = previous.knowledge
            if self.templates_path is not None:
                templates = tuple(gen.parse_templates(self.templates_path))
            else:
                templates = previous.templates
            extras = []
            extras_file = self.extras_path()
            if extras_file.exists():
                extras = gen.read_corpus(extras_file)
            model = dialogue.retrain(knowledge, templates, extras, alpha=self.alpha)
            fresh = Snapshot(knowledge=knowledge, model=model, templates=templates,
                             threshold=previous.threshold, version=previous.version + 1)
            self.swap(fresh)
            return previous, fresh


def bootstrap_state(kb_path, templates_path, data_dir, model_path=None,
                    threshold: float = dialogue.DEFAULT_THRESHOLD,
                    admin_token: str | None = None,
                    alpha: float = classify.PIPELINE_ALPHA) -> ServiceState:
    """Load everything and train at boot when no model file is given."""
    knowledge = kb_module.load_guide(kb_path)
    templates = tuple(gen.parse_templates(templates_path))
    corpus = gen.generate_dataset(templates, knowledge)
    if model_path is not None:
        model = classify.load_model(model_path,
                                    expected_fingerprint=classify.corpus_fingerprint(corpus.examples))
    else:
        model = classify.train(corpus, alpha=alpha)
    state = ServiceState(store=FeedbackStore(data_dir), admin_token=admin_token,
                         kb_path=kb_path, templates_path=templates_path, alpha=alpha)
    state.swap(Snapshot(knowledge=knowledge, model=model, templates=templates,
                        threshold=threshold, version=1))
    return state


class AskRequest(BaseModel):
    question: str
    session: str | None = None


class FeedbackRequest(BaseModel):
    feedback_id: str
    helpful: str


def create_app(state: ServiceState, cors_origins=("*",)) -> FastAPI:
    app = FastAPI(title="guideqa", docs_url=None, redoc_url=None)
    app.state.service = state
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["GET", "POST"],
        allow_headers=["*"],
    )

    @app.exception_handler(RequestValidationError)
    def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": "malformed request body"})

    @app.post("/v1/ask")
    def ask(body: AskRequest):
        snapshot = state.snapshot
        if snapshot is None:
            return JSONResponse(status_code=503, content={"error": "no model loaded"})
        question = body.question.strip()
        if not question:
            return JSONResponse(status_code=400, content={"error": "question is empty"})
        if len(body.question) > MAX_QUESTION_CHARS:
            return JSONResponse(
                status_code=400,
                content={"error": f"question exceeds {MAX_QUESTION_CHARS} characters"})
        response = dialogue.respond(snapshot.model, snapshot.knowledge, snapshot.templates,
                                    question, threshold=snapshot.threshold, store=state.store)
        state.count_ask(response.kind)
        payload = {
            "answer": response.answer_text,
            "kind": response.kind.value,
            "intent": response.intent.value if response.intent else None,
            "confidence": response.confidence,
            "suggestions": list(response.suggestions),
            "feedback_id": response.feedback_id,
            "latency_ms": response.latency_ms,
        }
        if body.session is not None:
            payload["session"] = body.session
        return payload

    @app.post("/v1/feedback")
    def feedback(body: FeedbackRequest):
        if body.helpful not in ("yes", "no"):
            return JSONResponse(status_code=400, content={"error": "helpful must be 'yes' or 'no'"})
        try:
            dialogue.record_feedback(state.store, body.feedback_id, body.helpful)
        except UnknownFeedbackId:
            return JSONResponse(status_code=404, content={"error": "unknown feedback_id"})
        except AlreadyVoted:
            return JSONResponse(status_code=409, content={"error": "feedback already recorded"})
        state.count_vote(body.helpful)
        return HttpResponse(status_code=204)

    @app.post("/v1/admin/retrain")
    def admin_retrain(x_admin_token: str | None = Header(default=None)):
        if state.admin_token is None or x_admin_token != state.admin_token:
            return JSONResponse(status_code=401, content={"error": "bad admin token"})
        try:
            previous, fresh = state.retrain()
        except GuideQAError as exc:
            logger.error("retrain failed: %s", exc)
            return JSONResponse(status_code=500, content={"error": str(exc)})
        return {
            "examples": fresh.model.example_count,
            "intents": len(fresh.model.intents),
            "previous_version": previous.version,
            "new_version": fresh.version,
        }

    @app.get("/v1/health")
    def health():
        snapshot = state.snapshot
        if snapshot is None:
            return {"status": "empty", "kb_version": None, "model_fingerprint": None}
        return {
            "status": "ready",
            "kb_version": snapshot.knowledge.version,
            "model_fingerprint": snapshot.model.fingerprint,
        }

    @app.get("/v1/metrics")
    def metrics():
        with state._counter_lock:
            return dict(state.counters)

    return app
