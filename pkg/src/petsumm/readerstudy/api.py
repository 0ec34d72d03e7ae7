"""HTTP+JSON facade over the review-session service.

Configuration comes from an optional JSON file with environment
overrides (PETSUMM_STUDY_*). When a shared token is configured every
endpoint except the health probe requires it in the x-study-token
header.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass
from pathlib import Path

from fastapi import Depends, FastAPI, Header, HTTPException
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel, Field

from ..errors import PoolShortageError, SessionStateError
from .service import ReaderStudy, ReviewCase, StudyConfig, ValidationFailure
from .store import StudyStore

ENV_PREFIX = "PETSUMM_STUDY_"


@dataclass
class ServiceConfig:
    data_dir: str = "study-data"
    host: str = "127.0.0.1"
    port: int = 8765
    token: str | None = None
    n_own: int = 12
    n_other: int = 12
    dimensions: tuple[str, ...] | None = None

    @classmethod
    def load(cls, path=None, env=None) -> "ServiceConfig":
        """File values first, then environment overrides."""
        env = os.environ if env is None else env
        values: dict = {}
        if path is not None:
            values.update(json.loads(Path(path).read_text()))
        for key in ("data_dir", "host", "token"):
            override = env.get(ENV_PREFIX + key.upper())
            if override is not None:
                values[key] = override
        for key in ("port", "n_own", "n_other"):
            override = env.get(ENV_PREFIX + key.upper())
            if override is not None:
                values[key] = int(override)
        if "dimensions" in values and values["dimensions"] is not None:
            values["dimensions"] = tuple(values["dimensions"])
        return cls(**values)


class CaseIn(BaseModel):
    case_id: str
    findings: str
    indications: str = ""
    impression: str
    origin: str
    style_owner: str
    source_report_id: str | None = None


class CasesIn(BaseModel):
    cases: list[CaseIn]


class SessionIn(BaseModel):
    reader_id: str
    n_own: int | None = None
    n_other: int | None = None
    seed: int = 0


class AssessmentIn(BaseModel):
    case_id: str
    scores: dict[str, int]
    utility: int
    comment: str | None = Field(default=None, max_length=4000)


def build_app(config: ServiceConfig | None = None,
              study: ReaderStudy | None = None) -> FastAPI:
    config = config or ServiceConfig()
    if study is None:
        store_path = (":memory:" if config.data_dir == ":memory:"
                      else str(Path(config.data_dir) / "study.sqlite3"))
        study_config = StudyConfig(n_own=config.n_own, n_other=config.n_other)
        if config.dimensions:
            study_config.dimensions = tuple(config.dimensions)
        study = ReaderStudy(StudyStore(store_path), study_config)

    app = FastAPI(title="pet report review study", version="0.1.0")
    app.state.study = study
    app.state.config = config

    def require_token(x_study_token: str | None = Header(default=None)):
        if config.token and x_study_token != config.token:
            raise HTTPException(status_code=401, detail="missing or bad token")

    guarded = [Depends(require_token)]

    @app.get("/health")
    def health():
        return {"ok": True}

    @app.get("/schema", dependencies=guarded)
    def schema():
        return study.schema()

    @app.post("/cases", dependencies=guarded)
    def add_cases(payload: CasesIn):
        try:
            cases = [ReviewCase(**c.model_dump()) for c in payload.cases]
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"added": study.add_cases(cases)}

    @app.post("/sessions", dependencies=guarded)
    def create_session(payload: SessionIn):
        try:
            return study.create_session(payload.reader_id, payload.n_own,
                                        payload.n_other, payload.seed)
        except PoolShortageError as exc:
            raise HTTPException(status_code=409, detail={
                "message": "case pool too small",
                "deficits": {k: {"need": need, "have": have}
                             for k, (need, have) in exc.deficits.items()}})

    @app.get("/sessions/{session_id}", dependencies=guarded)
    def session_state(session_id: str):
        try:
            return study.session_state(session_id)
        except SessionStateError as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.get("/sessions/{session_id}/next", dependencies=guarded)
    def next_case(session_id: str):
        try:
            return study.next_case(session_id)
        except SessionStateError as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.post("/sessions/{session_id}/assessments", dependencies=guarded)
    def submit_assessment(session_id: str, payload: AssessmentIn):
        try:
            return study.submit_assessment(session_id, payload.case_id,
                                           payload.scores, payload.utility,
                                           payload.comment)
        except ValidationFailure as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except SessionStateError as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.get("/export/rows", dependencies=guarded)
    def export_rows():
        try:
            return {"rows": study.export_rows()}
        except SessionStateError as exc:
            raise HTTPException(status_code=409, detail=str(exc))

    @app.get("/export/summary", dependencies=guarded)
    def export_summary(n_boot: int = 2000, seed: int = 0):
        try:
            return {"groups": study.group_summary(n_boot=n_boot, seed=seed)}
        except SessionStateError as exc:
            raise HTTPException(status_code=409, detail=str(exc))

    @app.get("/export.csv", dependencies=guarded, response_class=PlainTextResponse)
    def export_csv():
        try:
            rows = study.export_rows()
        except SessionStateError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()

    return app


def serve(config: ServiceConfig) -> None:
    import uvicorn

    uvicorn.run(build_app(config), host=config.host, port=config.port)
