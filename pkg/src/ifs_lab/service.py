"""HTTP service around the runner.

POST /v1/run executes a config and returns the summary plus every output
file (CSV and JSON as text, PPM base64-encoded) so clients write bytes
verbatim; /v1/validate parses without executing; /v1/render is /v1/run
restricted to render scenarios. Config and parameter errors map to 400 with
the validation message as detail.
"""

from __future__ import annotations

from typing import Literal

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .config import parse_config
from .errors import IfsLabError
from .reports import bundle_files
from .runner import run_config_text
from .symbolic import MAX_SEED

app = FastAPI(title="ifs-lab", version=__version__)


class RunRequest(BaseModel):
    config_text: str
    seed: int | None = Field(default=None, ge=0, lt=MAX_SEED)
    trials: int | None = Field(default=None, ge=1)


class FileEntry(BaseModel):
    name: str
    encoding: Literal["text", "base64"]
    content: str


class RunResponse(BaseModel):
    status: str
    summary: dict
    files: list[FileEntry]


class ValidateRequest(BaseModel):
    config_text: str


class ValidateResponse(BaseModel):
    ok: bool
    scenario: str


def _execute(req: RunRequest) -> RunResponse:
    try:
        bundle = run_config_text(req.config_text, seed=req.seed, trials=req.trials)
    except IfsLabError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    files = [FileEntry(name=n, encoding=e, content=c) for n, e, c in bundle_files(bundle)]
    return RunResponse(status=bundle.summary["status"], summary=bundle.summary, files=files)


@app.get("/v1/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/v1/run", response_model=RunResponse)
def run(req: RunRequest) -> RunResponse:
    return _execute(req)


@app.post("/v1/validate", response_model=ValidateResponse)
def validate(req: ValidateRequest) -> ValidateResponse:
    try:
        cfg = parse_config(req.config_text)
    except IfsLabError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return ValidateResponse(ok=True, scenario=cfg.scenario)


@app.post("/v1/render", response_model=RunResponse)
def render(req: RunRequest) -> RunResponse:
    try:
        cfg = parse_config(req.config_text)
    except IfsLabError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    if cfg.scenario != "render":
        raise HTTPException(status_code=400, detail=f"scenario is {cfg.scenario!r}, not render")
    return _execute(req)
