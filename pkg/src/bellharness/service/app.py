"""HTTP face of the harness: thin FastAPI routes over the handlers.

Domain validation errors (unknown strategy, regime mismatch, forbidden
override, malformed columns) surface as 422 with a plain detail string,
matching the status FastAPI uses for request-shape problems.
"""

from __future__ import annotations

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..serialize import SCHEMA_VERSION
from . import handlers
from .schemas import (
    AlgebraCheckResponse,
    AuditRequest,
    AuditResponse,
    CertificateModel,
    CertifyRequest,
    EnumerateResponse,
    QmCurveRequest,
    QmCurveResponse,
    RunRequest,
    RunResponse,
    SweepRequest,
    SweepResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(title="bellharness", version=__version__)

    @app.exception_handler(ValueError)
    async def value_error_handler(request: Request, exc: ValueError) -> JSONResponse:
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "schema_version": SCHEMA_VERSION, "version": __version__}

    @app.get("/enumerate", response_model=EnumerateResponse, response_model_exclude_none=True)
    def enumerate_route() -> EnumerateResponse:
        return handlers.handle_enumerate()

    @app.get("/algebra-check", response_model=AlgebraCheckResponse, response_model_exclude_none=True)
    def algebra_check_route(
        samples: int = Query(default=200, ge=1),
        seed: int = Query(default=20240901, ge=0),
    ) -> AlgebraCheckResponse:
        return handlers.handle_algebra_check(samples=samples, seed=seed)

    @app.post("/run", response_model=RunResponse, response_model_exclude_none=True)
    def run_route(request: RunRequest) -> RunResponse:
        return handlers.handle_run(request)

    @app.post("/certify", response_model=CertificateModel, response_model_exclude_none=True)
    def certify_route(request: CertifyRequest) -> CertificateModel:
        return handlers.handle_certify(request)

    @app.post("/qm-curve", response_model=QmCurveResponse, response_model_exclude_none=True)
    def qm_curve_route(request: QmCurveRequest) -> QmCurveResponse:
        return handlers.handle_qm_curve(request)

    @app.post("/sweep", response_model=SweepResponse, response_model_exclude_none=True)
    def sweep_route(request: SweepRequest) -> SweepResponse:
        return handlers.handle_sweep(request)

    @app.post("/audit", response_model=AuditResponse, response_model_exclude_none=True)
    def audit_route(request: AuditRequest) -> AuditResponse:
        return handlers.handle_audit(request)

    return app
