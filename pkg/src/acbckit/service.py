"""HTTP survey service: one build-your-own question, then the 15-task
elimination tournament, persisted as an append-only event log per study.

Session state lives in memory and is rebuilt from the log on startup, so a
restart loses nothing. Submissions carry an Idempotency-Key header; a
replayed key returns the original response without advancing the bracket.
"""
from __future__ import annotations

import datetime
import json
import random
import secrets
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from fastapi import FastAPI, Header, HTTPException
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from acbckit.engine import (
    Bracket,
    generate_candidate_profiles,
    init_bracket,
    record_choice,
    select_tournament_field,
)
from acbckit.model import DesignError, Profile, RespondentRecord, SurveyDesign
from acbckit.records import record_to_dict
from acbckit.simulation import derive_seed

PAYLOAD_SCHEMA = 1

AWAITING_BYO = "AwaitingBYO"
IN_TOURNAMENT = "InTournament"
COMPLETE = "Complete"


@dataclass
class Session:
    id: str
    population_tag: str
    created_at: str
    phase: str = AWAITING_BYO
    byo: Optional[Profile] = None
    bracket: Optional[Bracket] = None
    responses: dict[str, dict] = field(default_factory=dict)


class CreateSessionBody(BaseModel):
    population_tag: str = "default"


class ResponseBody(BaseModel):
    type: str
    levels: Optional[list[int]] = None
    winner: Optional[str] = None
    task_index: Optional[int] = None


class SurveyService:
    """One study: a design, its sessions, and the event log that owns them."""

    def __init__(
        self,
        design: SurveyDesign,
        study_id: str,
        storage_dir: Union[str, Path],
        seed: Optional[int] = None,
    ):
        self.design = design
        self.study_id = study_id
        self.log_path = Path(storage_dir) / f"{study_id}.jsonl"
        self.seed = secrets.randbits(63) if seed is None else seed
        self.sessions: dict[str, Session] = {}
        self.completed: list[dict] = []
        self._registry_lock = threading.Lock()
        self._session_locks: dict[str, threading.Lock] = {}
        self._log_lock = threading.Lock()
        self._replay_log()

    # -- persistence ------------------------------------------------------

    def _append(self, *events: dict) -> None:
        with self._log_lock:
            with open(self.log_path, "a", encoding="utf-8") as handle:
                for event in events:
                    handle.write(json.dumps(event) + "\n")
                handle.flush()

    def _replay_log(self) -> None:
        if not self.log_path.exists():
            return
        with open(self.log_path, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    self._apply(json.loads(line))
                except (ValueError, KeyError) as exc:
                    raise DesignError(
                        f"{self.log_path}: corrupt event on line {lineno}: {exc}"
                    ) from exc

    def _apply(self, event: dict) -> None:
        """Advance in-memory state by one logged event; used both for live
        submissions and for startup replay."""
        kind = event["event"]
        if kind == "session_created":
            sid = event["session"]
            self.sessions[sid] = Session(
                id=sid,
                population_tag=event["population_tag"],
                created_at=event["created_at"],
            )
            self._session_locks[sid] = threading.Lock()
        elif kind == "byo_submitted":
            session = self.sessions[event["session"]]
            session.byo = Profile.from_list(event["byo"])
            session.bracket = init_bracket(
                [Profile.from_list(p) for p in event["field"]]
            )
            session.phase = IN_TOURNAMENT
            session.responses[event["key"]] = self._current_payload(session)
        elif kind == "choice_submitted":
            session = self.sessions[event["session"]]
            session.bracket = record_choice(session.bracket, event["winner"])
            if session.bracket.complete:
                session.phase = COMPLETE
            session.responses[event["key"]] = self._current_payload(session)
        elif kind == "record_completed":
            self.completed.append(event["record"])
        else:
            raise DesignError(f"unknown event type {kind!r}")

    # -- payloads ---------------------------------------------------------

    def _profile_payload(self, profile: Profile) -> dict:
        return {
            "levels": profile.to_list(),
            "description": self.design.describe(profile),
        }

    def _byo_payload(self) -> dict:
        return {
            "schema": PAYLOAD_SCHEMA,
            "phase": AWAITING_BYO,
            "prompt": (
                "For each attribute, select the level you most typically "
                "encounter in your work."
            ),
            "attributes": [
                {"index": a, "label": attr.label, "levels": list(attr.levels)}
                for a, attr in enumerate(self.design.attributes)
            ],
        }

    def _task_payload(self, session: Session) -> dict:
        task = session.bracket.pending
        return {
            "schema": PAYLOAD_SCHEMA,
            "phase": IN_TOURNAMENT,
            "prompt": "Which of these two profiles do you prefer?",
            "task_index": len(session.bracket.winners) + 1,
            "total_tasks": session.bracket.total_tasks,
            "left": self._profile_payload(task.left),
            "right": self._profile_payload(task.right),
        }

    def _completion_payload(self, session: Session) -> dict:
        return {
            "schema": PAYLOAD_SCHEMA,
            "phase": COMPLETE,
            "session_id": session.id,
            "total_tasks": session.bracket.total_tasks,
            "champion": self._profile_payload(session.bracket.champion),
        }

    def _current_payload(self, session: Session) -> dict:
        if session.phase == AWAITING_BYO:
            return self._byo_payload()
        if session.phase == IN_TOURNAMENT:
            return self._task_payload(session)
        return self._completion_payload(session)

    # -- operations -------------------------------------------------------

    def create_session(self, population_tag: str) -> tuple[str, dict]:
        sid = secrets.token_urlsafe(12)
        event = {
            "event": "session_created",
            "session": sid,
            "population_tag": population_tag,
            "created_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        }
        with self._registry_lock:
            self._apply(event)
            self._append(event)
            payload = self._current_payload(self.sessions[sid])
        return sid, payload

    def session_lock(self, sid: str) -> threading.Lock:
        with self._registry_lock:
            lock = self._session_locks.get(sid)
        if lock is None:
            raise KeyError(sid)
        return lock

    def submit_byo(self, session: Session, key: str, levels: list[int]) -> dict:
        profile = Profile.from_list(levels)
        self.design.check_profile(profile)
        rng = random.Random(derive_seed(self.seed, session.id))
        candidates = generate_candidate_profiles(profile, self.design, rng)
        field_ = select_tournament_field(
            candidates, rng, size=self.design.field_size
        )
        event = {
            "event": "byo_submitted",
            "session": session.id,
            "key": key,
            "byo": profile.to_list(),
            "field": [p.to_list() for p in field_],
        }
        self._apply(event)
        self._append(event)
        return session.responses[key]

    def submit_choice(self, session: Session, key: str, winner: str) -> dict:
        events = [
            {
                "event": "choice_submitted",
                "session": session.id,
                "key": key,
                "winner": winner,
            }
        ]
        self._apply(events[0])
        if session.phase == COMPLETE:
            record = RespondentRecord(
                id=session.id,
                population_tag=session.population_tag,
                byo=session.byo,
                field=session.bracket.field,
                winners=session.bracket.winners,
            )
            completed = {
                "event": "record_completed",
                "session": session.id,
                "record": record_to_dict(record),
            }
            self._apply(completed)
            events.append(completed)
        self._append(*events)
        return session.responses[key]

    def records_jsonl(self) -> str:
        return "".join(json.dumps(rec) + "\n" for rec in self.completed)


def create_app(
    design: SurveyDesign,
    study_id: str = "default",
    storage_dir: Union[str, Path] = ".",
    seed: Optional[int] = None,
    static_dir: Optional[Union[str, Path]] = None,
) -> FastAPI:
    service = SurveyService(design, study_id, storage_dir, seed=seed)
    app = FastAPI(title="acbckit survey service")
    app.state.service = service

    def get_session(sid: str) -> Session:
        session = service.sessions.get(sid)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "study": service.study_id}

    @app.post("/studies/{study_id}/sessions", status_code=201)
    def create_session(study_id: str, body: CreateSessionBody) -> JSONResponse:
        if study_id != service.study_id:
            raise HTTPException(status_code=404, detail="unknown study")
        sid, payload = service.create_session(body.population_tag)
        return JSONResponse(
            status_code=201, content={"session_id": sid, **payload}
        )

    @app.get("/sessions/{sid}/next")
    def next_question(sid: str) -> dict:
        session = get_session(sid)
        with service.session_lock(sid):
            return service._current_payload(session)

    @app.post("/sessions/{sid}/responses")
    def submit(
        sid: str,
        body: ResponseBody,
        idempotency_key: Optional[str] = Header(None, alias="Idempotency-Key"),
    ) -> dict:
        session = get_session(sid)
        if not idempotency_key:
            raise HTTPException(
                status_code=422, detail="Idempotency-Key header required"
            )
        with service.session_lock(sid):
            cached = session.responses.get(idempotency_key)
            if cached is not None:
                return cached
            if body.type == "byo":
                if session.phase != AWAITING_BYO:
                    raise HTTPException(
                        status_code=409,
                        detail=f"session is in phase {session.phase}",
                    )
                if body.levels is None:
                    raise HTTPException(
                        status_code=422, detail="byo submission needs levels"
                    )
                try:
                    return service.submit_byo(
                        session, idempotency_key, body.levels
                    )
                except (DesignError, ValueError) as exc:
                    raise HTTPException(status_code=422, detail=str(exc))
            if body.type == "choice":
                if session.phase != IN_TOURNAMENT:
                    raise HTTPException(
                        status_code=409,
                        detail=f"session is in phase {session.phase}",
                    )
                if body.winner not in ("left", "right"):
                    raise HTTPException(
                        status_code=422, detail="winner must be left or right"
                    )
                if body.task_index is None:
                    raise HTTPException(
                        status_code=422,
                        detail="choice submission needs task_index",
                    )
                # racing submissions for one task: first in wins, the
                # loser's stale index surfaces here as a conflict
                current = len(session.bracket.winners) + 1
                if body.task_index != current:
                    raise HTTPException(
                        status_code=409,
                        detail=f"task_index {body.task_index} is stale; "
                        f"current task is {current}",
                    )
                return service.submit_choice(
                    session, idempotency_key, body.winner
                )
            raise HTTPException(
                status_code=422, detail=f"unknown submission type {body.type!r}"
            )

    @app.get("/studies/{study_id}/records.jsonl")
    def export_records(study_id: str) -> PlainTextResponse:
        if study_id != service.study_id:
            raise HTTPException(status_code=404, detail="unknown study")
        return PlainTextResponse(
            service.records_jsonl(), media_type="application/x-ndjson"
        )

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount(
            "/", StaticFiles(directory=str(static_dir), html=True), name="ui"
        )

    return app
