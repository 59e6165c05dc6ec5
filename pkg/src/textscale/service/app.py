"""HTTP facade over the store and job runner.

JSON in and out; errors come back as ``{"code": ..., "message": ...}`` with
a matching status. Unknown resource ids map to 404, bad input to 400.
"""

from __future__ import annotations

import io
import os
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from textscale import evaluate as ev
from textscale.service.jobs import JobRunner
from textscale.service.store import Store


class CorpusUpload(BaseModel):
    name: str
    matrix: str = Field(description="serialized term matrix (text format)")


class TrainingSetUpload(BaseModel):
    name: str
    csv: str


class ScoreEdit(BaseModel):
    entity: str
    year: int
    score: float


class KeyRef(BaseModel):
    entity: str
    year: int


class CloneRequest(BaseModel):
    name: str | None = None
    set: list[ScoreEdit] = Field(default_factory=list)
    remove: list[KeyRef] = Field(default_factory=list)


class JobRequest(BaseModel):
    corpus_id: str
    training_set_id: str
    spec: dict
    train_years: list[int] | None = None


def create_app(data_dir: str | Path, worker_count: int = 1,
               ui_dir: str | Path | None = None) -> FastAPI:
    store = Store(data_dir)
    runner = JobRunner(store, worker_count=worker_count)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        runner.start()
        runner.requeue_pending()
        yield
        runner.stop()

    app = FastAPI(title="textscale", lifespan=lifespan)
    app.state.store = store
    app.state.runner = runner

    @app.exception_handler(KeyError)
    async def not_found(request: Request, exc: KeyError):
        return JSONResponse(status_code=404,
                            content={"code": "not_found", "message": str(exc.args[0])})

    @app.exception_handler(ValueError)
    async def bad_request(request: Request, exc: ValueError):
        return JSONResponse(status_code=400,
                            content={"code": "bad_request", "message": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def invalid_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"code": "bad_request", "message": str(exc)})

    @app.get("/corpora")
    def list_corpora():
        return {"corpora": store.list_corpora()}

    @app.post("/corpora", status_code=201)
    def add_corpus(upload: CorpusUpload):
        return store.add_corpus(upload.name, upload.matrix)

    @app.get("/training-sets")
    def list_training_sets():
        return {"training_sets": store.list_training_sets()}

    @app.post("/training-sets", status_code=201)
    def add_training_set(upload: TrainingSetUpload):
        return store.add_training_set(upload.name, upload.csv)

    @app.get("/training-sets/{ts_id}")
    def get_training_set(ts_id: str):
        record = store.get_training_set(ts_id)
        return {**record, "csv": store.training_set_csv(ts_id)}

    @app.post("/training-sets/{ts_id}/clone", status_code=201)
    def clone_training_set(ts_id: str, request: CloneRequest):
        edits = {
            "set": [e.model_dump() for e in request.set],
            "remove": [r.model_dump() for r in request.remove],
        }
        return store.clone_training_set(ts_id, edits, name=request.name)

    @app.get("/jobs")
    def list_jobs():
        return {"jobs": store.list_jobs()}

    @app.post("/jobs", status_code=201)
    def submit_job(request: JobRequest):
        ev.BatchSpec.from_dict(request.spec)  # validate early
        record = store.create_job(request.corpus_id, request.training_set_id,
                                  request.spec, train_years=request.train_years)
        runner.submit(record["id"])
        return record

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        return store.get_job(job_id)

    @app.get("/jobs/{job_id}/scores")
    def job_scores(job_id: str):
        table = _job_table(store, job_id)
        rows = [
            {
                "entity": key.entity, "year": key.year, "score": row.score,
                "std_error": row.std_error, "ci_low": row.ci_low, "ci_high": row.ci_high,
            }
            for key, row in table.items()
        ]
        return {"job_id": job_id, "rows": rows}

    @app.get("/eval/corr")
    def eval_corr(job_a: str, job_b: str):
        a = _job_table(store, job_a)
        b = _job_table(store, job_b)
        shared = [k for k in a.keys() if k in b]
        return {"r": ev.pearson(a, b), "n_shared": len(shared)}

    @app.get("/eval/discrepancies")
    def eval_discrepancies(job_a: str, job_b: str, top: int = 10):
        a = _job_table(store, job_a)
        b = _job_table(store, job_b)
        positive, negative = ev.discrepancies(a, b, top)
        return {
            "positive": [_discrepancy_row(d) for d in positive],
            "negative": [_discrepancy_row(d) for d in negative],
        }

    ui_dir = ui_dir or os.environ.get("TEXTSCALE_UI")
    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def _job_table(store: Store, job_id: str) -> ev.ScoreTable:
    return ev.ScoreTable.from_csv_file(io.StringIO(store.job_scores_csv(job_id)))


def _discrepancy_row(d: ev.Discrepancy) -> dict:
    return {"entity": d.key.entity, "year": d.key.year,
            "a": d.a, "b": d.b, "delta": d.delta}
