"""A/B forced-choice listening-test service.

Sessions are deterministic functions of a seed: a per-participant shuffle of
the stimulus set plus a fair coin per trial deciding whether the original
plays as option A or B.  Every state change is appended to a JSONL event log
and fsynced before it is acknowledged, so a restart replays the log and
resumes exactly where the service stopped.

Clients only ever see opaque media tokens; which option holds the original
is recoverable solely from the server-side store.
"""

# note: no `from __future__ import annotations` here; the HTTP layer needs
# live annotations on its locally-defined request models

import hashlib
import json
import os
import random
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import (
    ConfigurationError,
    ConflictError,
    InvalidArgumentError,
    SequencingError,
    UnknownSessionError,
)
from .stimuli import read_manifest

ORIGINAL_IS_A = "ORIGINAL_IS_A"
ORIGINAL_IS_B = "ORIGINAL_IS_B"

_TOKEN_BYTES = 16


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _digest(secret: bytes, *parts) -> str:
    h = hashlib.blake2b(key=secret, digest_size=_TOKEN_BYTES)
    h.update("|".join(str(p) for p in parts).encode())
    return h.hexdigest()


def session_layout(seed: int, stimulus_ids: list[str]) -> tuple[list[str], list[str]]:
    """Deterministic per-session trial order and A/B assignments."""
    rnd = random.Random(seed)
    order = list(stimulus_ids)
    rnd.shuffle(order)
    assignments = [ORIGINAL_IS_A if rnd.random() < 0.5 else ORIGINAL_IS_B for _ in order]
    return order, assignments


@dataclass
class StimulusRef:
    stimulus_id: str
    category: str
    theta: float
    original_path: Path
    distorted_path: Path

    @classmethod
    def from_manifest_entry(cls, entry: dict, base_dir: Path) -> "StimulusRef":
        try:
            return cls(
                stimulus_id=entry["stimulus_id"],
                category=entry.get("category", "other"),
                theta=float(entry["theta"]),
                original_path=base_dir / entry["original_path"],
                distorted_path=base_dir / entry["distorted_path"],
            )
        except KeyError as exc:
            raise ConfigurationError(f"manifest entry missing field {exc}") from exc


@dataclass
class Session:
    session_id: str
    participant_id: str
    seed: int
    trial_order: list[str]
    assignments: list[str]
    created_utc: str
    cursor: int = 0  # number of answered trials


@dataclass(frozen=True)
class TrialRecord:
    session_id: str
    question_index: int
    stimulus_id: str
    category: str
    assignment: str
    response: str
    correct: bool
    theta: float
    timestamp_utc: str


@dataclass
class ServiceConfig:
    manifest_path: Path
    log_path: Path
    port: int = 8765
    host: str = "127.0.0.1"
    seed: int | None = None  # None -> fresh entropy, persisted on first start
    static_dir: Path | None = None
    post_questionnaire_url: str | None = None

    @classmethod
    def load(cls, path: str | Path) -> "ServiceConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigurationError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc})")
        if "manifest" not in raw or "log_path" not in raw:
            raise ConfigurationError(f"{path}: config needs 'manifest' and 'log_path'")
        base = path.parent
        seed = raw.get("seed", "random")
        static = raw.get("static_dir")
        return cls(
            manifest_path=base / raw["manifest"],
            log_path=base / raw["log_path"],
            port=int(raw.get("port", 8765)),
            host=raw.get("host", "127.0.0.1"),
            seed=None if seed == "random" else int(seed),
            static_dir=(base / static) if static else None,
            post_questionnaire_url=raw.get("post_questionnaire_url"),
        )


class ExperimentStore:
    """Sessions, responses and the append-only event log behind the API."""

    def __init__(self, stimuli: list[StimulusRef], log_path: str | Path, seed: int | None = None):
        if not stimuli:
            raise ConfigurationError("stimulus manifest is empty")
        self.stimuli = {s.stimulus_id: s for s in stimuli}
        if len(self.stimuli) != len(stimuli):
            raise ConfigurationError("duplicate stimulus ids in manifest")
        self.log_path = Path(log_path)
        self.sessions: dict[str, Session] = {}
        self.records: list[TrialRecord] = []
        self.replay_warnings: list[str] = []
        self._media: dict[str, Path] = {}
        self._session_counter = 0
        self._lock = threading.RLock()

        replayed = self._replay() if self.log_path.exists() else []
        if replayed:
            if self.master_seed is None:
                raise ConfigurationError(f"{self.log_path}: log has no init event")
        else:
            self.master_seed = seed if seed is not None else random.SystemRandom().getrandbits(63)
            self._append({"type": "store_init", "seed": self.master_seed,
                          "token_scheme": "blake2b", "created_utc": _utcnow()})
        self._secret = hashlib.blake2b(
            f"store-secret|{self.master_seed}".encode(), digest_size=32
        ).digest()
        for event in replayed:
            self._apply(event, replaying=True)

    # -- event log ----------------------------------------------------------

    def _replay(self) -> list[dict]:
        self.master_seed = None
        events = []
        offset = 0
        with self.log_path.open("rb") as fh:
            for line in fh:
                stripped = line.strip()
                if stripped:
                    try:
                        event = json.loads(stripped)
                    except json.JSONDecodeError:
                        self.replay_warnings.append(
                            f"undecodable event at byte offset {offset}; skipped"
                        )
                    else:
                        if event.get("type") == "store_init":
                            self.master_seed = event["seed"]
                        else:
                            events.append(event)
                offset += len(line)
        return events

    def _append(self, event: dict) -> None:
        with self.log_path.open("a") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _apply(self, event: dict, replaying: bool) -> None:
        kind = event.get("type")
        if kind == "session_created":
            session = Session(
                session_id=event["session_id"],
                participant_id=event["participant_id"],
                seed=event["seed"],
                trial_order=list(event["trial_order"]),
                assignments=list(event["assignments"]),
                created_utc=event["created_utc"],
            )
            self.sessions[session.session_id] = session
            self._session_counter += 1
            self._register_media(session)
        elif kind == "response":
            record = TrialRecord(
                session_id=event["session_id"],
                question_index=event["question_index"],
                stimulus_id=event["stimulus_id"],
                category=event["category"],
                assignment=event["assignment"],
                response=event["response"],
                correct=event["correct"],
                theta=event["theta"],
                timestamp_utc=event["timestamp_utc"],
            )
            self.records.append(record)
            session = self.sessions.get(record.session_id)
            if session is not None:
                session.cursor = max(session.cursor, record.question_index)
        elif replaying:
            self.replay_warnings.append(f"unknown event type {kind!r}; skipped")
        else:
            raise InvalidArgumentError(f"unknown event type {kind!r}")

    # -- sessions -----------------------------------------------------------

    def _register_media(self, session: Session) -> None:
        for position, stimulus_id in enumerate(session.trial_order):
            ref = self.stimuli.get(stimulus_id)
            if ref is None:
                raise ConfigurationError(
                    f"session {session.session_id} references unknown stimulus {stimulus_id!r}"
                )
            assignment = session.assignments[position]
            a_path, b_path = (
                (ref.original_path, ref.distorted_path)
                if assignment == ORIGINAL_IS_A
                else (ref.distorted_path, ref.original_path)
            )
            for role, target in (("ref", ref.original_path), ("a", a_path), ("b", b_path)):
                token = _digest(self._secret, "media", session.session_id, stimulus_id, role)
                self._media[token] = target

    def derive_session_seed(self, index: int) -> int:
        payload = hashlib.blake2b(
            f"session-seed|{self.master_seed}|{index}".encode(), digest_size=8
        ).digest()
        return int.from_bytes(payload, "big")

    def create_session(self, participant_id: str, seed: int | None = None) -> Session:
        if not participant_id:
            raise InvalidArgumentError("participant_id must be non-empty")
        with self._lock:
            index = self._session_counter
            if seed is None:
                seed = self.derive_session_seed(index)
            order, assignments = session_layout(seed, sorted(self.stimuli))
            session_id = _digest(self._secret, "session", index, participant_id, seed)
            event = {
                "type": "session_created",
                "session_id": session_id,
                "participant_id": participant_id,
                "seed": seed,
                "trial_order": order,
                "assignments": assignments,
                "created_utc": _utcnow(),
            }
            self._append(event)
            self._apply(event, replaying=False)
            return self.sessions[session_id]

    def get_session(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise UnknownSessionError(f"no session {session_id!r}")
        return session

    def media_token(self, session: Session, stimulus_id: str, role: str) -> str:
        return _digest(self._secret, "media", session.session_id, stimulus_id, role)

    def resolve_media(self, token: str) -> Path:
        path = self._media.get(token)
        if path is None:
            raise UnknownSessionError(f"no media for token {token!r}")
        return path

    def next_trial(self, session_id: str) -> dict:
        """Descriptor of the next unanswered trial, or a DONE marker."""
        with self._lock:
            session = self.get_session(session_id)
            total = len(session.trial_order)
            if session.cursor >= total:
                return {"done": True, "answered": session.cursor, "total_questions": total}
            stimulus_id = session.trial_order[session.cursor]
            return {
                "done": False,
                "question_index": session.cursor + 1,
                "total_questions": total,
                "reference_url": f"/media/{self.media_token(session, stimulus_id, 'ref')}",
                "a_url": f"/media/{self.media_token(session, stimulus_id, 'a')}",
                "b_url": f"/media/{self.media_token(session, stimulus_id, 'b')}",
            }

    def record_response(
        self,
        session_id: str,
        question_index: int,
        response: str,
        playback_counts: dict | None = None,
    ) -> TrialRecord:
        """Append the response to the log, then advance the session cursor."""
        if response not in ("A", "B"):
            raise InvalidArgumentError(f"response must be 'A' or 'B', got {response!r}")
        with self._lock:
            session = self.get_session(session_id)
            expected = session.cursor + 1
            if question_index <= session.cursor:
                raise ConflictError(
                    f"question {question_index} of session {session_id} already answered"
                )
            if question_index != expected:
                raise SequencingError(
                    f"expected question {expected}, got {question_index}"
                )
            if question_index > len(session.trial_order):
                raise SequencingError("session is already complete")
            stimulus_id = session.trial_order[question_index - 1]
            ref = self.stimuli[stimulus_id]
            assignment = session.assignments[question_index - 1]
            correct = (assignment == ORIGINAL_IS_A) == (response == "A")
            event = {
                "type": "response",
                "session_id": session_id,
                "question_index": question_index,
                "stimulus_id": stimulus_id,
                "category": ref.category,
                "assignment": assignment,
                "response": response,
                "correct": correct,
                "theta": ref.theta,
                "timestamp_utc": _utcnow(),
                "playback_counts": playback_counts,
            }
            self._append(event)
            self._apply(event, replaying=False)
            return self.records[-1]

    def session_summary(self, session_id: str) -> dict:
        session = self.get_session(session_id)
        total = len(session.trial_order)
        return {
            "session_id": session.session_id,
            "participant_id": session.participant_id,
            "answered": session.cursor,
            "total_questions": total,
            "done": session.cursor >= total,
            "created_utc": session.created_utc,
        }

    # -- export -------------------------------------------------------------

    def export_csv(self, fh) -> int:
        """One row per response in (session, question) order; returns row count."""
        from .analysis import CSV_HEADER

        by_key = sorted(self.records, key=lambda r: (r.session_id, r.question_index))
        fh.write(",".join(CSV_HEADER) + "\n")
        for r in by_key:
            participant = self.sessions[r.session_id].participant_id
            fh.write(",".join([
                r.session_id, participant, str(r.question_index), r.stimulus_id,
                r.category, r.assignment, r.response, str(r.correct).lower(),
                f"{r.theta:.12g}", r.timestamp_utc,
            ]) + "\n")
        return len(by_key)


def export_log_csv(log_path: str | Path, fh) -> tuple[int, list[str]]:
    """Export an event log straight to the responses CSV schema.

    Needs no manifest; tolerates undecodable lines (e.g. a torn trailing
    write) by skipping them with a warning naming the byte offset.
    """
    from .analysis import CSV_HEADER

    participants: dict[str, str] = {}
    rows = []
    warnings = []
    offset = 0
    with Path(log_path).open("rb") as src:
        for line in src:
            stripped = line.strip()
            if stripped:
                try:
                    event = json.loads(stripped)
                except json.JSONDecodeError:
                    warnings.append(f"undecodable event at byte offset {offset}; skipped")
                else:
                    if event.get("type") == "session_created":
                        participants[event["session_id"]] = event["participant_id"]
                    elif event.get("type") == "response":
                        rows.append(event)
            offset += len(line)

    rows.sort(key=lambda e: (e["session_id"], e["question_index"]))
    fh.write(",".join(CSV_HEADER) + "\n")
    for e in rows:
        fh.write(",".join([
            e["session_id"],
            participants.get(e["session_id"], ""),
            str(e["question_index"]),
            e["stimulus_id"],
            e["category"],
            e["assignment"],
            e["response"],
            str(e["correct"]).lower(),
            f"{e['theta']:.12g}",
            e["timestamp_utc"],
        ]) + "\n")
    return len(rows), warnings


def store_from_config(config: ServiceConfig) -> ExperimentStore:
    if not config.manifest_path.exists():
        raise ConfigurationError(f"manifest not found: {config.manifest_path}")
    base = config.manifest_path.parent
    stimuli = [
        StimulusRef.from_manifest_entry(entry, base)
        for entry in read_manifest(config.manifest_path)
    ]
    return ExperimentStore(stimuli, config.log_path, seed=config.seed)


# ---------------------------------------------------------------------------
# HTTP layer
# ---------------------------------------------------------------------------

def build_app(store: ExperimentStore, static_dir: Path | None = None,
              post_questionnaire_url: str | None = None):
    from fastapi import FastAPI, Request
    from fastapi.responses import JSONResponse, Response
    from fastapi.staticfiles import StaticFiles
    from pydantic import BaseModel

    class CreateSessionBody(BaseModel):
        participant_id: str

    class ResponseBody(BaseModel):
        question_index: int
        response: str
        playback_counts: dict[str, int] | None = None

    app = FastAPI(title="phasekit listening test")

    @app.exception_handler(UnknownSessionError)
    async def _not_found(request: Request, exc: UnknownSessionError):
        return JSONResponse({"error": str(exc)}, status_code=404)

    @app.exception_handler(ConflictError)
    async def _conflict(request: Request, exc: ConflictError):
        return JSONResponse({"error": str(exc)}, status_code=409)

    @app.exception_handler(SequencingError)
    async def _sequencing(request: Request, exc: SequencingError):
        return JSONResponse({"error": str(exc)}, status_code=422)

    @app.exception_handler(InvalidArgumentError)
    async def _invalid(request: Request, exc: InvalidArgumentError):
        return JSONResponse({"error": str(exc)}, status_code=422)

    @app.post("/api/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        session = store.create_session(body.participant_id)
        return {
            "session_id": session.session_id,
            "participant_id": session.participant_id,
            "total_questions": len(session.trial_order),
            "created_utc": session.created_utc,
        }

    @app.get("/api/sessions/{session_id}/trial")
    def next_trial(session_id: str):
        trial = store.next_trial(session_id)
        if trial["done"] and post_questionnaire_url:
            trial["post_questionnaire_url"] = post_questionnaire_url
        return trial

    @app.post("/api/sessions/{session_id}/responses", status_code=201)
    def record_response(session_id: str, body: ResponseBody):
        record = store.record_response(
            session_id, body.question_index, body.response, body.playback_counts
        )
        session = store.get_session(session_id)
        return {
            "recorded": True,
            "question_index": record.question_index,
            "done": session.cursor >= len(session.trial_order),
        }

    @app.get("/api/sessions/{session_id}/summary")
    def session_summary(session_id: str):
        return store.session_summary(session_id)

    @app.get("/media/{token}")
    def media(token: str, request: Request):
        path = store.resolve_media(token)
        data = path.read_bytes()
        size = len(data)
        headers = {"Accept-Ranges": "bytes"}
        range_header = request.headers.get("range")
        if range_header:
            try:
                unit, _, spec = range_header.partition("=")
                if unit.strip().lower() != "bytes" or "," in spec:
                    raise ValueError
                start_s, _, end_s = spec.strip().partition("-")
                if start_s:
                    start = int(start_s)
                    end = int(end_s) if end_s else size - 1
                else:
                    # suffix form: last N bytes
                    start = max(size - int(end_s), 0)
                    end = size - 1
                if start > end or start >= size:
                    raise ValueError
                end = min(end, size - 1)
            except ValueError:
                return Response(
                    status_code=416, headers={"Content-Range": f"bytes */{size}"}
                )
            headers["Content-Range"] = f"bytes {start}-{end}/{size}"
            return Response(
                content=data[start:end + 1], status_code=206,
                media_type="audio/wav", headers=headers,
            )
        return Response(content=data, media_type="audio/wav", headers=headers)

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


def serve(config: ServiceConfig) -> None:
    import uvicorn

    store = store_from_config(config)
    app = build_app(store, config.static_dir, config.post_questionnaire_url)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
