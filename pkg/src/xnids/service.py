"""HTTP JSON API bridging pipeline artifacts to the analyst UI.

Serves scenarios, per-instance attributions, and evaluation metrics from
read-only artifact files; collects survey sessions into an append-only
line-delimited JSON store (fsync before acknowledging a write); computes
survey analytics on demand from the store.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from . import survey as sv

STAGES = ("demographics", "personality", "scenario", "survey", "done")


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())


class SessionStore:
    """Append-only JSONL of session records.

    Every mutation appends the full updated record; on load the last record
    per session id wins. A partial trailing line (crash during append) is
    tolerated and ignored. Appends are serialized and fsynced before the
    caller gets control back.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records: dict[str, dict] = {}
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        raw = self.path.read_bytes().decode("utf-8", errors="replace")
        for line in raw.split("\n"):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                continue  # partial trailing line from an interrupted append
            if isinstance(record, dict) and "session_id" in record:
                self._records[record["session_id"]] = record

    def append(self, record: dict) -> None:
        line = json.dumps(record, sort_keys=True)
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._records[record["session_id"]] = record

    def get(self, session_id: str) -> dict | None:
        with self._lock:
            record = self._records.get(session_id)
            return dict(record) if record else None

    def all_records(self) -> list[dict]:
        with self._lock:
            return [dict(r) for r in self._records.values()]


@dataclass
class Artifacts:
    explanations: dict | None = None
    metrics: dict | None = None
    scenarios: list | None = None
    instrument: sv.SurveyInstrument | None = None

    @classmethod
    def load(cls, artifact_dir: str | Path) -> "Artifacts":
        d = Path(artifact_dir)
        art = cls()
        if (d / "explanations.json").exists():
            art.explanations = json.loads((d / "explanations.json").read_text())
        if (d / "metrics.json").exists():
            art.metrics = json.loads((d / "metrics.json").read_text())
        if (d / "scenarios.json").exists():
            art.scenarios = json.loads((d / "scenarios.json").read_text())
        if (d / "instrument.json").exists():
            art.instrument = sv.load_instrument(d / "instrument.json")
        else:
            art.instrument = sv.default_instrument()
        return art


def _responses_from_store(store: SessionStore) -> list[sv.SurveyResponse]:
    out = []
    for record in store.all_records():
        out.append(
            sv.SurveyResponse(
                session_id=record["session_id"],
                demographics=record.get("demographics", {}),
                answers={k: int(v) for k, v in record.get("answers", {}).items()},
                created_at=record.get("created_at", ""),
                completed_at=record.get("completed_at", ""),
            )
        )
    return out


def compute_analytics(store: SessionStore, instrument: sv.SurveyInstrument) -> dict:
    responses = _responses_from_store(store)
    complete = [r for r in responses if r.complete]
    payload: dict = {
        "sessions": {"total": len(responses), "completed": len(complete)},
        "alpha": {},
        "likert_summary": sv.likert_summary(complete, instrument),
        "trait_distributions": {},
        "flags": [],
    }
    if len(responses) != len(complete):
        payload["flags"].append(f"{len(responses) - len(complete)} incomplete sessions excluded")
    for construct in sv.VALIDATION_CONSTRUCTS + sv.PERSONALITY_TRAITS:
        if not instrument.construct_items(construct):
            continue
        matrix = sv.response_matrix(complete, instrument, construct)
        if matrix.shape[0] < 2:
            payload["alpha"][construct] = {"alpha": None, "reason": "insufficient n"}
            continue
        try:
            report = sv.cronbach_alpha(matrix, construct)
            payload["alpha"][construct] = report.to_jsonable()
        except sv.ZeroTotalVariance:
            payload["alpha"][construct] = {"alpha": None, "reason": "zero total variance"}
    for trait in sv.PERSONALITY_TRAITS:
        if not instrument.construct_items(trait):
            continue
        scores = []
        for r in complete:
            try:
                scores.append(sv.score_construct(r, instrument, trait))
            except sv.IncompleteResponse:
                continue
        payload["trait_distributions"][trait] = scores
    return payload


def create_app(
    artifact_dir: str | Path,
    store_path: str | Path,
    admin_token: str | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    artifacts = Artifacts.load(artifact_dir)
    store = SessionStore(store_path)
    instrument = artifacts.instrument
    app = FastAPI(title="xnids service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.store = store
    app.state.artifacts = artifacts

    explanation_index: dict[str, dict] = {}
    if artifacts.explanations:
        for inst in artifacts.explanations.get("instances", []):
            explanation_index[str(inst["instance_id"])] = inst

    def _require(artifact, name: str):
        if artifact is None:
            raise HTTPException(status_code=503, detail=f"{name} artifact not loaded")
        return artifact

    @app.get("/api/scenarios")
    def get_scenarios():
        return _require(artifacts.scenarios, "scenarios")

    @app.get("/api/explanations/{instance_id}")
    def get_explanation(instance_id: str):
        _require(artifacts.explanations, "explanations")
        inst = explanation_index.get(instance_id)
        if inst is None:
            raise HTTPException(status_code=404, detail=f"unknown instance {instance_id!r}")
        return {
            "feature_names": artifacts.explanations.get("feature_names", []),
            "instance": inst,
            "summaries": artifacts.explanations.get("summaries", []),
        }

    @app.get("/api/metrics")
    def get_metrics():
        return _require(artifacts.metrics, "metrics")

    @app.get("/api/instruments")
    def get_instruments():
        return instrument.to_jsonable()

    @app.post("/api/sessions", status_code=201)
    def create_session(body: dict | None = None):
        record = {
            "session_id": uuid.uuid4().hex,
            "demographics": (body or {}).get("demographics", {}),
            "answers": {},
            "scenario_id": (body or {}).get("scenario_id"),
            "stage": STAGES[0],
            "created_at": _now(),
            "completed_at": "",
        }
        store.append(record)
        return {"session_id": record["session_id"], "stage": record["stage"]}

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        record = store.get(session_id)
        if record is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return record

    def _mutable_session(session_id: str) -> dict:
        record = store.get(session_id)
        if record is None:
            raise HTTPException(status_code=404, detail="unknown session")
        if record.get("completed_at"):
            raise HTTPException(status_code=409, detail="session already completed")
        return record

    @app.post("/api/sessions/{session_id}/responses", status_code=204)
    def post_responses(session_id: str, body: dict):
        record = _mutable_session(session_id)
        items = body.get("items", {})
        for item_id, value in items.items():
            try:
                item = instrument.item(item_id)
            except sv.UnknownItem:
                raise HTTPException(status_code=400, detail=f"unknown item {item_id!r}")
            if not isinstance(value, int) or not 1 <= value <= item.scale_max:
                raise HTTPException(
                    status_code=400,
                    detail=f"item {item_id!r}: response {value!r} outside 1..{item.scale_max}",
                )
        record["answers"].update({k: int(v) for k, v in items.items()})
        if "demographics" in body:
            record["demographics"].update(body["demographics"])
        if "scenario_id" in body:
            record["scenario_id"] = body["scenario_id"]
        if "stage" in body:
            if body["stage"] not in STAGES:
                raise HTTPException(status_code=400, detail=f"unknown stage {body['stage']!r}")
            record["stage"] = body["stage"]
        store.append(record)
        return None

    @app.post("/api/sessions/{session_id}/complete", status_code=204)
    def complete_session(session_id: str):
        record = _mutable_session(session_id)
        record["completed_at"] = _now()
        record["stage"] = "done"
        store.append(record)
        return None

    def _check_admin(request: Request):
        if admin_token and request.headers.get("x-admin-token") != admin_token:
            raise HTTPException(status_code=403, detail="admin token required")

    @app.get("/api/analytics")
    def get_analytics(request: Request):
        _check_admin(request)
        return JSONResponse(compute_analytics(store, instrument))

    @app.get("/api/export.csv")
    def export_csv(request: Request):
        _check_admin(request)
        responses = _responses_from_store(store)
        return PlainTextResponse(sv.render_responses_csv(responses, instrument), media_type="text/csv")

    if ui_dir and Path(ui_dir).exists():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def run_server(
    artifact_dir: str | Path,
    store_path: str | Path,
    port: int = 8000,
    host: str = "127.0.0.1",
    admin_token: str | None = None,
    ui_dir: str | Path | None = None,
) -> None:
    import uvicorn

    app = create_app(artifact_dir, store_path, admin_token, ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
