"""HTTP service over the hunt pipeline.

Versioned JSON API under ``/api/v1`` (with unversioned aliases), candidate
streaming over server-sent events, and in-memory sessions whose threshold
adjustments re-filter stored candidates without re-running engines.  Small
hunts answer synchronously; anything over the configured budget threshold
returns 202 plus a job id.
"""

from __future__ import annotations

import dataclasses
import json
import os
import queue
import threading
import uuid
from collections import OrderedDict
from typing import Iterator

import mpmath as mp
from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel, Field

from . import bisearch, exprs, numcore, pipeline, rank, tables

SYNC_MAX_LEVEL = 6
SYNC_MAX_TIME_BUDGET = 15.0


class ServerConfig:
    def __init__(self, table_dir: str | None = None, ui_origin: str = "*",
                 max_sessions: int = 64, sync_max_level: int = SYNC_MAX_LEVEL):
        self.table_dir = table_dir if table_dir is not None \
            else os.environ.get("CONSTHUNT_TABLE_DIR")
        self.ui_origin = os.environ.get("CONSTHUNT_UI_ORIGIN", ui_origin)
        self.max_sessions = int(os.environ.get("CONSTHUNT_MAX_SESSIONS", max_sessions))
        self.sync_max_level = int(os.environ.get("CONSTHUNT_SYNC_MAX_LEVEL",
                                                 sync_max_level))


class HuntRequestModel(BaseModel):
    raw_input: str
    engines: list[str] = ["lookup", "relations", "bisearch"]
    tables: list[str] | None = None  # names among the loaded tables
    level: int | None = None
    tolerance: str | None = None
    atoms: list[str] | None = None
    operators: list[str] | None = None
    functions: list[str] | None = None
    implicit: bool = False
    pareto: bool = False
    min_margin: float = 0.0
    min_agreement: float | None = None
    relation_bases: list[list[str]] | None = None
    time_budget: float | None = None
    memory_budget: int | None = None
    session_id: str | None = None


class PersistenceRequestModel(HuntRequestModel):
    precisions: list[int] = Field(default_factory=list)


class ThresholdModel(BaseModel):
    min_agreement: float | None = None
    min_margin: float = 0.0


@dataclasses.dataclass
class Job:
    id: str
    thread: threading.Thread
    cancel: threading.Event
    events: "queue.Queue[dict | None]"
    status: str = "running"
    report: dict | None = None
    error: str | None = None
    progress: dict = dataclasses.field(default_factory=dict)


@dataclasses.dataclass
class Session:
    id: str
    raw_input: str
    report: pipeline.HuntReport
    request: pipeline.HuntRequest
    job_cancel: threading.Event | None = None


def _to_request(model: HuntRequestModel, config: ServerConfig,
                loaded: dict[str, str]) -> pipeline.HuntRequest:
    search = pipeline.default_search_config()
    overrides = {}
    if model.level is not None:
        overrides["max_complexity"] = model.level
    if model.tolerance is not None:
        overrides["tolerance"] = mp.mpf(model.tolerance)
    if model.atoms is not None:
        overrides["atoms"] = tuple(exprs.parse_text(a) for a in model.atoms)
    if model.operators is not None:
        overrides["operators"] = tuple(model.operators)
    if model.functions is not None:
        overrides["functions"] = tuple(model.functions)
    if model.implicit:
        overrides["allow_implicit"] = True
    if model.pareto:
        overrides["pareto_filter"] = True
    if model.time_budget is not None:
        overrides["time_budget"] = model.time_budget
    if model.memory_budget is not None:
        overrides["memory_budget"] = model.memory_budget
    search = dataclasses.replace(search, **overrides)
    names = model.tables if model.tables is not None else sorted(loaded)
    missing = [n for n in names if n not in loaded]
    if missing:
        raise HTTPException(422, detail=f"unknown tables: {missing}")
    kwargs = {}
    if model.relation_bases is not None:
        kwargs["relation_bases"] = tuple(tuple(v) for v in model.relation_bases)
    return pipeline.HuntRequest(
        raw_input=model.raw_input,
        engines=tuple(model.engines),
        search=search,
        table_paths=tuple(loaded[n] for n in names),
        min_margin=model.min_margin,
        min_agreement=model.min_agreement,
        **kwargs,
    )


def _refilter(report: pipeline.HuntReport, min_agreement: float | None,
              min_margin: float) -> pipeline.HuntReport:
    """Re-apply thresholds to an existing candidate pool, no engine re-run."""
    pool = [sc.candidate for sc in report.candidates]
    effective_agreement = (min_agreement if min_agreement is not None
                           else report.min_agreement)
    accepted, rejected = rank.accept_filter(pool, effective_agreement, min_margin)
    reasons = {d.candidate.text: d.reason for d in rejected}
    scored = tuple(pipeline.ScoredCandidate(candidate=c,
                                            accepted=c.text not in reasons,
                                            reject_reason=reasons.get(c.text))
                   for c in pool)
    index = {sc.candidate.text: i for i, sc in enumerate(scored)}
    groups = []
    if accepted:
        for group in rank.group_equivalents(accepted, 30):
            groups.append(pipeline.GroupReport(
                representative=index[group.representative.text],
                members=tuple(index[m.text] for m in group.members)))
    return dataclasses.replace(report, candidates=scored, groups=tuple(groups),
                               min_agreement=float(effective_agreement),
                               min_margin=float(min_margin))


def create_app(config: ServerConfig | None = None) -> FastAPI:
    config = config or ServerConfig()
    app = FastAPI(title="consthunt", version="1")
    app.add_middleware(CORSMiddleware, allow_origins=[config.ui_origin],
                       allow_methods=["*"], allow_headers=["*"])

    loaded_tables: dict[str, str] = {}
    if config.table_dir and os.path.isdir(config.table_dir):
        for name in sorted(os.listdir(config.table_dir)):
            if name.endswith(".tbl"):
                loaded_tables[name] = os.path.join(config.table_dir, name)

    sessions: "OrderedDict[str, Session]" = OrderedDict()
    jobs: dict[str, Job] = {}
    lock = threading.Lock()

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        for err in exc.errors():
            if err.get("type") == "json_invalid":
                return JSONResponse(status_code=400,
                                    content={"detail": "malformed JSON body"})
        return JSONResponse(status_code=422, content={"detail": exc.errors()})

    def remember_session(session_id: str | None, request: pipeline.HuntRequest,
                         report: pipeline.HuntReport) -> str:
        sid = session_id or uuid.uuid4().hex
        with lock:
            prior = sessions.get(sid)
            if prior is not None and prior.job_cancel is not None:
                prior.job_cancel.set()
            sessions[sid] = Session(id=sid, raw_input=request.raw_input,
                                    report=report, request=request)
            sessions.move_to_end(sid)
            while len(sessions) > config.max_sessions:
                sessions.popitem(last=False)
        return sid

    def run_sync(model: HuntRequestModel) -> dict:
        request = _to_request(model, config, loaded_tables)
        try:
            report = pipeline.hunt(request)
        except (numcore.GroomingError, pipeline.HuntError) as err:
            raise HTTPException(422, detail=str(err))
        sid = remember_session(model.session_id, request, report)
        body = report.to_dict()
        body["session_id"] = sid
        return body

    def spawn_job(model: HuntRequestModel) -> str:
        request = _to_request(model, config, loaded_tables)
        numcore.parse_float_input(request.raw_input)  # validate before 202
        job_id = uuid.uuid4().hex
        cancel = threading.Event()
        events: "queue.Queue[dict | None]" = queue.Queue()
        job = Job(id=job_id, thread=None, cancel=cancel, events=events)  # type: ignore

        def work():
            try:
                def on_candidate(sc: pipeline.ScoredCandidate):
                    job.progress["candidates"] = job.progress.get("candidates", 0) + 1
                    events.put({"type": "candidate", **sc.to_dict()})

                report = pipeline.hunt(request, cancel=cancel,
                                       on_candidate=on_candidate)
                job.report = report.to_dict()
                job.progress["engine_stats"] = job.report["engine_stats"]
                job.status = "done"
                remember_session(model.session_id, request, report)
            except Exception as err:  # surfaced through the job record
                job.error = f"{type(err).__name__}: {err}"
                job.status = "error"
            finally:
                events.put(None)

        thread = threading.Thread(target=work, daemon=True)
        job.thread = thread
        with lock:
            jobs[job_id] = job
            if model.session_id and model.session_id in sessions:
                sessions[model.session_id].job_cancel = cancel
        thread.start()
        return job_id

    def hunt_endpoint(model: HuntRequestModel):
        level = model.level if model.level is not None \
            else pipeline.default_search_config().max_complexity
        big = ("bisearch" in model.engines and level > config.sync_max_level) or \
            (model.time_budget or 0) > SYNC_MAX_TIME_BUDGET
        if big:
            job_id = spawn_job(model)
            return JSONResponse(status_code=202,
                                content={"job_id": job_id,
                                         "status_url": f"/api/v1/jobs/{job_id}",
                                         "events_url": f"/api/v1/jobs/{job_id}/events"})
        return run_sync(model)

    def persistence_endpoint(model: PersistenceRequestModel):
        if len(model.precisions) < 2:
            raise HTTPException(422, detail="persistence needs at least two precisions")
        request = dataclasses.replace(_to_request(model, config, loaded_tables),
                                      precisions=tuple(model.precisions))
        try:
            target = numcore.parse_float_input(request.raw_input)
        except numcore.GroomingError as err:
            raise HTTPException(422, detail=str(err))
        if max(model.precisions) > target.working_digits:
            raise HTTPException(422, detail="precision exceeds the supplied digits")

        def target_source(p: int) -> str:
            with mp.workdps(target.working_digits + 5):
                return f"{mp.nstr(target.value, p)}`{p}"

        try:
            outcome = pipeline.hunt_with_persistence(request, target_source)
        except (numcore.GroomingError, pipeline.HuntError) as err:
            raise HTTPException(422, detail=str(err))
        body = outcome.to_dict()
        max_p = max(model.precisions)
        for entry in body["persistence"]["entries"]:
            if entry["stable_from"] is not None:
                entry["status"] = "stable"
            elif entry["presence"][-1]:
                entry["status"] = "new-at-max"
            else:
                entry["status"] = "transient"
        body["session_id"] = remember_session(model.session_id, request,
                                              outcome.report)
        return body

    def catalog_endpoint():
        catalog = exprs.DEFAULT_CATALOG
        return {
            "constants": sorted(catalog.constants),
            "functions": sorted(catalog.functions),
            "operators": list(catalog.operators),
        }

    def tables_endpoint():
        out = []
        for name, path in sorted(loaded_tables.items()):
            try:
                table = tables.LookupTable.load(path)
            except (OSError, tables.TableBuildError):
                continue
            out.append(table.stats())
        return {"tables": out}

    def job_endpoint(job_id: str):
        job = jobs.get(job_id)
        if job is None:
            raise HTTPException(404, detail="no such job")
        body = {"job_id": job.id, "status": job.status, "progress": job.progress}
        if job.status == "done":
            body["report"] = job.report
        if job.status == "error":
            body["error"] = job.error
        return body

    def job_events(job_id: str):
        job = jobs.get(job_id)
        if job is None:
            raise HTTPException(404, detail="no such job")

        def stream() -> Iterator[str]:
            while True:
                try:
                    event = job.events.get(timeout=60)
                except queue.Empty:
                    yield ": keepalive\n\n"
                    continue
                if event is None:
                    final = {"type": "done", "status": job.status}
                    if job.status == "error":
                        final["error"] = job.error
                    yield f"data: {json.dumps(final)}\n\n"
                    return
                yield f"data: {json.dumps(event)}\n\n"

        return StreamingResponse(stream(), media_type="text/event-stream")

    def refilter_endpoint(session_id: str, model: ThresholdModel):
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(404, detail="no such session")
        report = _refilter(session.report, model.min_agreement, model.min_margin)
        with lock:
            sessions[session_id] = dataclasses.replace(session, report=report)
        body = report.to_dict()
        body["session_id"] = session_id
        return body

    for prefix in ("/api/v1", "/api"):
        app.post(f"{prefix}/hunt")(hunt_endpoint)
        app.post(f"{prefix}/persistence")(persistence_endpoint)
        app.get(f"{prefix}/catalog")(catalog_endpoint)
        app.get(f"{prefix}/tables")(tables_endpoint)
        app.get(f"{prefix}/jobs/{{job_id}}")(job_endpoint)
        app.get(f"{prefix}/jobs/{{job_id}}/events")(job_events)
        app.post(f"{prefix}/sessions/{{session_id}}/thresholds")(refilter_endpoint)

    return app


def main() -> None:  # pragma: no cover
    import uvicorn
    host = os.environ.get("CONSTHUNT_HOST", "127.0.0.1")
    port = int(os.environ.get("CONSTHUNT_PORT", "8787"))
    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":  # pragma: no cover
    main()
