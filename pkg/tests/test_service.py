import json
import threading

import pytest
from fastapi.testclient import TestClient

from guideqa.dialogue import FeedbackStore
from guideqa.service import EXTRAS_FILENAME, ServiceState, Snapshot, create_app
from guideqa.data import default_kb_path, default_templates_path


@pytest.fixture()
def state(knowledge, model, templates, tmp_path):
    s = ServiceState(store=FeedbackStore(tmp_path), admin_token="sesame",
                     kb_path=default_kb_path(), templates_path=default_templates_path())
    s.swap(Snapshot(knowledge=knowledge, model=model, templates=tuple(templates),
                    threshold=0.97, version=1))
    return s


@pytest.fixture()
def client(state):
    return TestClient(create_app(state))


def ask(client, question, **extra):
    return client.post("/v1/ask", json={"question": question, **extra})


def test_figure_units_question_over_the_wire(client):
    response = ask(client, "What are the units for move velocity?")
    assert response.status_code == 200
    body = response.json()
    assert "move velocity: m/s" in body["answer"]
    assert body["kind"] == "answered"
    assert body["intent"] == "units"
    assert body["confidence"] >= 0.97
    assert body["suggestions"] == []
    assert body["feedback_id"]
    assert body["latency_ms"] >= 0


def test_empty_question_is_bad_request(client):
    assert ask(client, "").status_code == 400
    assert ask(client, "   ").status_code == 400


def test_oversized_question_is_bad_request(client):
    assert ask(client, "w" * 2001).status_code == 400


def test_malformed_body_is_bad_request(client):
    response = client.post("/v1/ask", content=b"{nope",
                           headers={"content-type": "application/json"})
    assert response.status_code == 400
    assert client.post("/v1/ask", json={"q": "hi"}).status_code == 400


def test_ask_before_model_loaded_is_unavailable(tmp_path):
    empty = ServiceState(store=FeedbackStore(tmp_path))
    client = TestClient(create_app(empty))
    assert ask(client, "What is the goal of VERA?").status_code == 503
    health = client.get("/v1/health").json()
    assert health["status"] == "empty"


def test_idk_carries_suggestions(client):
    body = ask(client, "What is the meaning of life?").json()
    assert body["kind"] == "idk"
    assert body["intent"] is None
    assert 1 <= len(body["suggestions"]) <= 3


def test_session_token_echoed_when_present(client):
    assert "session" not in ask(client, "What is the goal of VERA?").json()
    body = ask(client, "What is the goal of VERA?", session="abc123").json()
    assert body["session"] == "abc123"


def test_feedback_flow(client):
    fid = ask(client, "What is the goal of VERA?").json()["feedback_id"]
    assert client.post("/v1/feedback", json={"feedback_id": fid, "helpful": "yes"}).status_code == 204
    assert client.post("/v1/feedback", json={"feedback_id": fid, "helpful": "no"}).status_code == 409
    assert client.post("/v1/feedback",
                       json={"feedback_id": "fb-unknown", "helpful": "yes"}).status_code == 404
    assert client.post("/v1/feedback", json={"feedback_id": fid, "helpful": "maybe"}).status_code == 400


def test_health_and_metrics_counters(client, knowledge, model):
    health = client.get("/v1/health").json()
    assert health == {"status": "ready", "kb_version": knowledge.version,
                      "model_fingerprint": model.fingerprint}
    questions = ["What is the goal of VERA?", "What is the meaning of life?",
                 "What are the units for move velocity?"]
    for question in questions:
        assert ask(client, question).status_code == 200
    ask(client, "")  # rejected asks do not count
    metrics = client.get("/v1/metrics").json()
    assert metrics["asks"] == len(questions)
    assert metrics["answered"] + metrics["idk"] == metrics["asks"]
    assert metrics["idk"] == 1
    fid = ask(client, "What is the goal of VERA?").json()["feedback_id"]
    client.post("/v1/feedback", json={"feedback_id": fid, "helpful": "yes"})
    assert client.get("/v1/metrics").json()["feedback_yes"] == 1


def test_retrain_requires_admin_token(client):
    assert client.post("/v1/admin/retrain").status_code == 401
    assert client.post("/v1/admin/retrain",
                       headers={"X-Admin-Token": "wrong"}).status_code == 401


def test_retrain_disabled_without_configured_token(state):
    state.admin_token = None
    client = TestClient(create_app(state))
    assert client.post("/v1/admin/retrain",
                       headers={"X-Admin-Token": ""}).status_code == 401


def test_retrain_bumps_version_and_keeps_serving(client, state):
    response = client.post("/v1/admin/retrain", headers={"X-Admin-Token": "sesame"})
    assert response.status_code == 200
    body = response.json()
    assert body["previous_version"] == 1
    assert body["new_version"] == 2
    assert body["intents"] == 7
    assert body["examples"] >= 500
    # identical inputs -> identical model
    assert state.snapshot.model.fingerprint == client.get("/v1/health").json()["model_fingerprint"]
    assert ask(client, "What are the units for move velocity?").status_code == 200


def test_retrain_folds_in_labeled_extras(client, state):
    question = "Whats the typical lifespan setting?"
    assert ask(client, question).json()["kind"] == "idk"
    extras = {"question": question, "intent": "default_value", "bindings": {},
              "expected_answer_id": "lifespan", "template_id": "user"}
    (state.store.data_dir / EXTRAS_FILENAME).write_text(json.dumps(extras) + "\n",
                                                        encoding="utf-8")
    assert client.post("/v1/admin/retrain",
                       headers={"X-Admin-Token": "sesame"}).status_code == 200
    body = ask(client, question).json()
    assert body["kind"] == "answered"
    assert "lifespan: 2 years" in body["answer"]


def test_failed_retrain_keeps_old_snapshot(client, state):
    (state.store.data_dir / EXTRAS_FILENAME).write_text("not json\n", encoding="utf-8")
    before = state.snapshot
    response = client.post("/v1/admin/retrain", headers={"X-Admin-Token": "sesame"})
    assert response.status_code == 500
    assert "error" in response.json()
    assert state.snapshot is before
    assert ask(client, "What is the goal of VERA?").status_code == 200


def test_snapshot_swap_is_atomic_under_load(client, state):
    stop = threading.Event()
    failures = []

    def hammer():
        while not stop.is_set():
            r = ask(client, "What are the units for move velocity?")
            if r.status_code != 200 or "move velocity: m/s" not in r.json()["answer"]:
                failures.append(r.status_code)

    threads = [threading.Thread(target=hammer) for _ in range(4)]
    for t in threads:
        t.start()
    try:
        for _ in range(3):
            assert client.post("/v1/admin/retrain",
                               headers={"X-Admin-Token": "sesame"}).status_code == 200
    finally:
        stop.set()
        for t in threads:
            t.join()
    assert failures == []


def test_cors_allows_configured_origin(state):
    client = TestClient(create_app(state, cors_origins=["http://chat.example"]))
    response = client.options("/v1/ask", headers={
        "Origin": "http://chat.example",
        "Access-Control-Request-Method": "POST",
    })
    assert response.headers.get("access-control-allow-origin") == "http://chat.example"
