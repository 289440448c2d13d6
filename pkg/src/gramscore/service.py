"""Assessment lifecycle over HTTP with a durable JSON-lines session store.

A session is created from a supplied, offline-generated, or LLM-generated
paragraph; the variant language model for that paragraph is trained eagerly
at creation.  Submissions arrive as a literal transcript, an N-best list to
rescore, or a simulation directive; scoring fills the session's grammar
report.  Responses before scoring never reveal the correct options.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Optional

import yaml
from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel, Field, ValidationError

from gramscore import genai
from gramscore.decode import (
    ChannelConfig,
    NBestList,
    Transcript,
    decode_paragraph,
    rescore_nbest,
    simulate_asr,
    synthesize_reading,
)
from gramscore.lm import FusionConfig, NGramLM, train
from gramscore.paragraph import (
    TaggedParagraph,
    TagSyntaxError,
    parse_tagged,
    render_display,
    render_gold,
    tokenize,
    validate,
)
from gramscore.scoring import CohortReport, GrammarReport, cohort_report, g_score, grammar_error
from gramscore.variants import corpus_lines, split_sentences

STATUSES = ("created", "displayed", "submitted", "scored")


@dataclass(frozen=True)
class ServiceConfig:
    store_path: str = "sessions.jsonl"
    host: str = "127.0.0.1"
    port: int = 8077
    default_gamma: float = 0.5
    lm_order: int = 3
    simulator_noise: dict = field(default_factory=lambda: {"p_sub": 0.02, "p_del": 0.01, "p_ins": 0.01})
    simulator_bias: str = "grammar-correcting"
    llm_endpoint: str | None = None
    llm_api_key: str = ""
    llm_model: str = ""
    llm_timeout: float = 30.0

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        data = yaml.safe_load(Path(path).read_text()) or {}
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class AssessmentSession:
    id: str
    paragraph_text: str
    status: str
    created_at: float
    updated_at: float
    provenance: dict = field(default_factory=dict)
    submission: dict | None = None
    report: dict | None = None
    cohort: dict | None = None

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "paragraph_text": self.paragraph_text,
            "status": self.status,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "provenance": self.provenance,
            "submission": self.submission,
            "report": self.report,
            "cohort": self.cohort,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "AssessmentSession":
        return cls(
            id=data["id"],
            paragraph_text=data["paragraph_text"],
            status=data["status"],
            created_at=data["created_at"],
            updated_at=data["updated_at"],
            provenance=data.get("provenance") or {},
            submission=data.get("submission"),
            report=data.get("report"),
            cohort=data.get("cohort"),
        )


class SessionStore:
    """Append-only JSON-lines log, latest line per id wins on replay.

    A truncated trailing line (crash mid-write) is ignored on load.  Appends
    hold a lock and fsync, so concurrent writers interleave whole lines.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._sessions: dict[str, AssessmentSession] = {}
        self._load()

    def _load(self) -> None:
        if not self.path.exists():
            return
        for line in self.path.read_text("utf-8").splitlines():
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError:
                continue
            session = AssessmentSession.from_json_dict(data)
            self._sessions[session.id] = session

    def append(self, session: AssessmentSession) -> None:
        line = json.dumps(session.to_json_dict(), ensure_ascii=False)
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._sessions[session.id] = session

    def get(self, session_id: str) -> AssessmentSession | None:
        return self._sessions.get(session_id)

    def all_sessions(self) -> list[AssessmentSession]:
        return sorted(self._sessions.values(), key=lambda s: s.created_at)


class CreateRequest(BaseModel):
    mode: Literal["supplied", "offline", "llm"]
    paragraph_text: Optional[str] = None
    subject: Optional[str] = None
    seed: Optional[int] = None


class TranscriptSubmission(BaseModel):
    kind: Literal["transcript"] = "transcript"
    text: str
    gold_text: Optional[str] = None
    audio_ref: Optional[str] = None  # opaque pointer; no audio is decoded server-side


class NBestSubmission(BaseModel):
    kind: Literal["nbest"] = "nbest"
    entries: list[dict]
    gamma: Optional[float] = None
    gold_text: Optional[str] = None
    audio_ref: Optional[str] = None


class SimulateSubmission(BaseModel):
    kind: Literal["simulate"] = "simulate"
    skill: float = Field(ge=0.0, le=1.0)
    seed: Optional[int] = None
    noise: Optional[dict] = None
    bias: Optional[str] = None
    gamma: Optional[float] = None
    student: Optional[str] = None


class AssessmentService:
    """State and pipeline shared by the HTTP handlers."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.store = SessionStore(config.store_path)
        self._lms: dict[str, NGramLM] = {}
        self._session_locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock_for(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._session_locks.setdefault(session_id, threading.Lock())

    # -- paragraph sources -------------------------------------------------

    def _obtain_paragraph(self, request: CreateRequest) -> tuple[TaggedParagraph, dict]:
        if request.mode == "supplied":
            if not request.paragraph_text:
                raise HTTPException(400, "mode 'supplied' requires paragraph_text")
            try:
                paragraph = parse_tagged(request.paragraph_text)
            except TagSyntaxError as e:
                raise HTTPException(422, detail={
                    "message": "paragraph failed validation",
                    "issues": [i.to_json_dict() for i in e.issues],
                })
            except ValueError as e:
                raise HTTPException(422, detail={"message": str(e), "issues": []})
            errors = [i for i in validate(paragraph) if i.is_error]
            if errors:
                raise HTTPException(422, detail={
                    "message": "paragraph failed validation",
                    "issues": [i.to_json_dict() for i in errors],
                })
            return paragraph, {"mode": "supplied"}

        if request.mode == "offline":
            seed = request.seed if request.seed is not None else int(time.time_ns() % 2**31)
            paragraph = genai.offline_generate(
                seed, genai.GenerationRequest(subject=request.subject))
            return paragraph, {"mode": "offline", "seed": seed, "subject": request.subject}

        client = self._chat_client()
        if client is None:
            raise HTTPException(503, "no LLM endpoint configured")
        record = genai.generate_paragraph(
            client, genai.PromptTemplate(), genai.GenerationRequest(subject=request.subject))
        if not record.accepted:
            raise HTTPException(502, detail={
                "message": record.failure_reason,
                "attempts": len(record.attempts),
            })
        return record.paragraph, {
            "mode": "llm",
            "model": record.model_name,
            "attempts": len(record.attempts),
            "subject": request.subject,
        }

    def _chat_client(self):
        if self.config.llm_endpoint:
            return genai.HttpChatClient(
                self.config.llm_endpoint, self.config.llm_api_key,
                self.config.llm_model, self.config.llm_timeout)
        return genai.HttpChatClient.from_env()

    # -- session operations --------------------------------------------------

    def create(self, request: CreateRequest) -> dict:
        paragraph, provenance = self._obtain_paragraph(request)
        session_id = uuid.uuid4().hex[:12]
        now = time.time()
        lm = train([line.split() for line in corpus_lines(paragraph)],
                   order=self.config.lm_order)
        self._lms[session_id] = lm
        session = AssessmentSession(
            id=session_id,
            paragraph_text=paragraph.source_text,
            status="displayed",
            created_at=now,
            updated_at=now,
            provenance=provenance,
        )
        self.store.append(session)
        return self._display_payload(session, paragraph)

    def _display_payload(self, session: AssessmentSession, paragraph: TaggedParagraph) -> dict:
        return {
            "id": session.id,
            "status": session.status,
            "display_text": render_display(paragraph),
            "slot_count": paragraph.slot_count,
        }

    def _paragraph_of(self, session: AssessmentSession) -> TaggedParagraph:
        return parse_tagged(session.paragraph_text)

    def _lm_of(self, session: AssessmentSession) -> NGramLM:
        lm = self._lms.get(session.id)
        if lm is None:
            paragraph = self._paragraph_of(session)
            lm = train([line.split() for line in corpus_lines(paragraph)],
                       order=self.config.lm_order)
            self._lms[session.id] = lm
        return lm

    def display(self, session_id: str) -> dict:
        session = self._require(session_id)
        return self._display_payload(session, self._paragraph_of(session))

    def _require(self, session_id: str) -> AssessmentSession:
        session = self.store.get(session_id)
        if session is None:
            raise HTTPException(404, f"unknown session {session_id!r}")
        return session

    def submit(self, session_id: str, payload: dict) -> dict:
        with self._lock_for(session_id):
            session = self._require(session_id)
            if session.status != "displayed":
                raise HTTPException(409, f"session is {session.status}, not awaiting submission")
            kind = payload.get("kind")
            try:
                if kind == "transcript":
                    model = TranscriptSubmission(**payload)
                elif kind == "nbest":
                    model = NBestSubmission(**payload)
                elif kind == "simulate":
                    model = SimulateSubmission(**payload)
                else:
                    raise HTTPException(400, f"unknown submission kind {kind!r}")
            except ValidationError as e:
                raise HTTPException(400, f"malformed {kind} submission: {e.error_count()} field error(s)")

            session.status = "submitted"
            session.submission = payload
            session.updated_at = time.time()
            self.store.append(session)

            paragraph = self._paragraph_of(session)
            forms = render_gold(paragraph)
            try:
                if kind == "transcript":
                    report = self._score_transcript(model, forms)
                elif kind == "nbest":
                    report = self._score_nbest(model, session, forms)
                else:
                    report, cohort = self._score_simulation(model, session, paragraph, forms)
                    session.cohort = cohort
            except ValueError as e:
                session.status = "displayed"
                session.submission = None
                self.store.append(session)
                raise HTTPException(400, str(e))

            session.report = report.to_json_dict()
            session.status = "scored"
            session.updated_at = time.time()
            self.store.append(session)
            return {"id": session.id, "status": session.status, "report": session.report}

    def _score_transcript(self, model: TranscriptSubmission, forms) -> GrammarReport:
        tokens = tokenize(model.text)
        if not tokens:
            raise ValueError("transcript is empty")
        report = g_score(Transcript(tuple(tokens)), forms)
        if model.gold_text:
            gold = g_score(Transcript(tuple(tokenize(model.gold_text))), forms)
            grammar_error(report, gold)
        return report

    def _score_nbest(self, model: NBestSubmission, session: AssessmentSession, forms) -> GrammarReport:
        nbest = NBestList.from_json_dict({"entries": model.entries})
        gamma = model.gamma if model.gamma is not None else self.config.default_gamma
        picked = rescore_nbest(nbest, self._lm_of(session), FusionConfig(gamma))
        report = g_score(picked, forms)
        if model.gold_text:
            gold = g_score(Transcript(tuple(tokenize(model.gold_text))), forms)
            grammar_error(report, gold)
        return report

    def _score_simulation(self, model: SimulateSubmission, session: AssessmentSession,
                          paragraph: TaggedParagraph, forms) -> tuple[GrammarReport, dict]:
        seed = model.seed if model.seed is not None else 0
        noise = dict(self.config.simulator_noise)
        if model.noise:
            bad = set(model.noise) - {"p_sub", "p_del", "p_ins"}
            if bad:
                raise ValueError(f"unknown noise keys: {sorted(bad)}")
            noise.update(model.noise)
        bias = model.bias if model.bias is not None else self.config.simulator_bias
        gamma = model.gamma if model.gamma is not None else self.config.default_gamma

        reading = synthesize_reading(paragraph, model.skill, seed)
        truth_tokens = tuple(tok for sent in reading for tok in sent)
        gold_report = g_score(Transcript(truth_tokens), forms)

        biased_channel = ChannelConfig(bias_mode=bias, **noise)
        clean_channel = ChannelConfig(bias_mode="none", **noise)

        # Path (a): a general-purpose recognizer's literal transcript.
        baseline = simulate_asr(Transcript(truth_tokens), paragraph, biased_channel, seed + 1)
        baseline_report = g_score(baseline, forms)

        # Path (b): the same noisy evidence decoded through the variant model.
        observed = [
            simulate_asr(Transcript(tuple(sent)), paragraph, clean_channel, seed + 2 + i).tokens
            for i, sent in enumerate(reading)
        ]
        decoded, slot_options = decode_paragraph(
            paragraph, [list(t) for t in observed], self._lm_of(session),
            FusionConfig(gamma), clean_channel)
        report = g_score(decoded, forms)
        grammar_error(report, gold_report)
        baseline_eps = abs(baseline_report.score - gold_report.score)

        cohort = {
            "student": model.student or session.id,
            "baseline_score": baseline_report.score,
            "clm_score": report.score,
            "gold_score": gold_report.score,
            "baseline_eps": baseline_eps,
            "clm_eps": report.epsilon_g,
            "slot_options": {str(k): v for k, v in slot_options.items()},
            "seed": seed,
            "skill": model.skill,
            "noise": noise,
            "bias": bias,
        }
        return report, cohort

    def report(self, session_id: str) -> dict:
        session = self._require(session_id)
        if session.status != "scored":
            raise HTTPException(409, f"session is {session.status}, not scored")
        return {"id": session.id, "status": session.status, "report": session.report}

    def cohort(self) -> CohortReport:
        rows = []
        for session in self.store.all_sessions():
            if session.cohort:
                c = session.cohort
                rows.append((c["student"], c["baseline_score"], c["clm_score"], c["gold_score"]))
        if not rows:
            raise HTTPException(409, "no scored simulation sessions in the store")
        return cohort_report(rows)


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    service = AssessmentService(config or ServiceConfig())
    app = FastAPI(title="gramscore", version="0.1.0")
    app.state.service = service

    @app.post("/assessments")
    def create_assessment(request: CreateRequest):
        return service.create(request)

    @app.get("/assessments/{session_id}/display")
    def get_display(session_id: str):
        return service.display(session_id)

    @app.post("/assessments/{session_id}/submission")
    def submit(session_id: str, payload: dict):
        return service.submit(session_id, payload)

    @app.get("/assessments/{session_id}/report")
    def get_report(session_id: str):
        return service.report(session_id)

    @app.get("/cohort/report")
    def get_cohort(format: str = Query("json", pattern="^(csv|json|text)$")):
        report = service.cohort()
        if format == "csv":
            return PlainTextResponse(report.to_csv(), media_type="text/csv")
        if format == "text":
            return PlainTextResponse(report.to_text())
        return report.to_json_dict()

    return app


def serve(config: ServiceConfig) -> None:
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port)
