"""FastAPI application wrapping the simulator and scheduler library."""
from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..controllers import CONTROLLER_KINDS
from ..scenario import ScenarioError
from . import handlers
from .schemas import (
    HealthResponse,
    OracleRequest,
    OracleResponse,
    RunRequest,
    RunResponse,
    ValidateRequest,
    ValidateResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(title="signalsim", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.get("/scenarios")
    def scenarios() -> list[str]:
        return handlers.shipped_scenario_names()

    @app.post("/validate", response_model=ValidateResponse)
    def validate(req: ValidateRequest) -> ValidateResponse:
        problems = handlers.validate_text(req.text)
        return ValidateResponse(ok=not problems, problems=problems)

    @app.post("/run", response_model=RunResponse)
    def run(req: RunRequest) -> RunResponse:
        if not req.controller_ok():
            raise HTTPException(
                status_code=422,
                detail=f"unknown controller {req.controller!r}, expected one of {CONTROLLER_KINDS}",
            )
        try:
            scenario = handlers.resolve_scenario(req.scenario)
        except ScenarioError as e:
            raise HTTPException(status_code=422, detail=str(e))
        out = handlers.run_metrics(scenario, req.controller, req.seed, req.duration)
        return RunResponse(**out)

    @app.post("/oracle", response_model=OracleResponse)
    def oracle(req: OracleRequest) -> OracleResponse:
        return OracleResponse(**handlers.oracle_suite(req.cases, req.seed))

    return app
