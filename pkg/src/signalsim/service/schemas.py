"""Request and response shapes for the HTTP service."""
from __future__ import annotations

from pydantic import BaseModel, Field

from ..controllers import CONTROLLER_KINDS


class HealthResponse(BaseModel):
    status: str
    version: str


class ValidateRequest(BaseModel):
    text: str = Field(description="Scenario document (TOML)")


class ValidateResponse(BaseModel):
    ok: bool
    problems: list[str]


class RunRequest(BaseModel):
    scenario: str = Field(description="Shipped scenario name or inline TOML text")
    controller: str = Field(default="baseline_sd")
    seed: int = Field(default=1, ge=0)
    duration: float | None = Field(default=None, gt=0)

    def controller_ok(self) -> bool:
        return self.controller in CONTROLLER_KINDS


class BandStats(BaseModel):
    vehicles: int
    mean_delay: float
    std_delay: float
    mean_stops: float


class RunResponse(BaseModel):
    scenario: str
    controller: str
    seed: int
    vehicles: int
    mean_delay: float
    std_delay: float
    mean_stops: float
    p95_delay: float
    deadlock: bool
    bands: dict[str, BandStats]


class OracleRequest(BaseModel):
    cases: int = Field(default=500, ge=1, le=5000)
    seed: int = Field(default=7, ge=0)


class OracleResponse(BaseModel):
    cases: int
    mismatches: int
    ok: bool
    runtime_s: float
