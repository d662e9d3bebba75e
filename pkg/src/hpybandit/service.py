"""HTTP advisory service over the session store.

Thin JSON plumbing: every statistical decision lives in the store and the
model modules.  Errors come back as ``{"code", "message"}`` bodies with the
matching HTTP status.
"""

from __future__ import annotations

from typing import Union

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from .reward import ForecastSummary
from .store import SessionConfig, SessionNotFound, SessionStore

__all__ = ["create_app"]

Counts = Union[dict[str, int], list[tuple[str, int]]]


class CreateSessionRequest(BaseModel):
    arms: list[str]
    counts: dict[str, Counts]
    config: dict = Field(default_factory=dict)
    session_id: str | None = None


class RecommendRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    mode: str = "incidence"
    m: int = Field(alias="M")


class ObserveRequest(BaseModel):
    arm: str
    counts: Counts


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def _forecast_payload(arms: tuple[str, ...], forecasts: list[ForecastSummary]) -> list[dict]:
    return [
        {
            "arm": arms[f.arm],
            "m": f.budget,
            "mean": f.mean,
            "quantiles": {str(q): v for q, v in f.quantiles.items()},
            "n_draws": f.n_draws,
        }
        for f in forecasts
    ]


def create_app(store: SessionStore, token: str | None = None) -> FastAPI:
    app = FastAPI(title="hpybandit advisor", docs_url=None, redoc_url=None)
    # the dashboard is served from wherever, so preflights must clear
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def require_auth(request: Request) -> None:
        if token is None:
            return
        got = request.headers.get("authorization", "")
        if got != f"Bearer {token}":
            raise HTTPException(401, "missing or invalid bearer token")

    auth = Depends(require_auth)

    @app.exception_handler(HTTPException)
    async def http_error(request: Request, exc: HTTPException):
        codes = {400: "bad_request", 401: "unauthorized", 404: "not_found", 422: "invalid"}
        return _error(exc.status_code, codes.get(exc.status_code, "error"), str(exc.detail))

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, exc: RequestValidationError):
        return _error(422, "invalid", str(exc.errors()[:3]))

    @app.exception_handler(SessionNotFound)
    async def missing_session(request: Request, exc: SessionNotFound):
        return _error(404, "not_found", f"no session {exc.args[0]!r}")

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/sessions", dependencies=[auth])
    def list_sessions():
        return {"sessions": [store.info(sid) for sid in store.list_ids()]}

    @app.post("/sessions", status_code=201, dependencies=[auth])
    def create_session(req: CreateSessionRequest):
        if not req.arms:
            raise HTTPException(400, "at least one arm is required")
        try:
            config = SessionConfig.from_dict(req.config) if req.config else None
            session = store.create(req.arms, req.counts, config, req.session_id)
        except ValueError as e:
            raise HTTPException(422, str(e)) from None
        forecasts = store.forecast(session.id)
        return {
            "id": session.id,
            "arms": list(session.arms),
            "forecasts": _forecast_payload(session.arms, forecasts),
        }

    @app.get("/sessions/{sid}", dependencies=[auth])
    def get_session(sid: str):
        # info carries the posterior-side summary; stats the raw bookkeeping
        # (arm cards and the discovery curve render straight from it)
        return {**store.info(sid), "stats": store.stats(sid)}

    @app.post("/sessions/{sid}/recommend", dependencies=[auth])
    def recommend(sid: str, req: RecommendRequest):
        try:
            return store.recommend(sid, req.mode, req.m)
        except SessionNotFound:
            raise
        except ValueError as e:
            raise HTTPException(400, str(e)) from None

    @app.post("/sessions/{sid}/observations", dependencies=[auth])
    def observe(sid: str, req: ObserveRequest):
        try:
            session = store.observe(sid, req.arm, req.counts)
        except SessionNotFound:
            raise
        except ValueError as e:
            raise HTTPException(422, str(e)) from None
        diag = getattr(session.particles, "diagnostics", None)
        forecasts = store.forecast(sid)
        out = {
            "seq": session.last_seq,
            "ess": float(
                diag.ess_second_stage if diag is not None else session.particles.n_particles
            ),
            "forecasts": _forecast_payload(session.arms, forecasts),
        }
        if diag is not None:
            out["diagnostics"] = {
                "ess_first_stage": diag.ess_first_stage,
                "ess_second_stage": diag.ess_second_stage,
                "jitter": diag.jitter,
            }
        return out

    @app.get("/sessions/{sid}/forecast", dependencies=[auth])
    def forecast(
        sid: str,
        m: int | None = Query(default=None, alias="M"),
    ):
        try:
            forecasts = store.forecast(sid, m)
        except SessionNotFound:
            raise
        except ValueError as e:
            raise HTTPException(400, str(e)) from None
        session = store.get(sid)
        return {"forecasts": _forecast_payload(session.arms, forecasts)}

    @app.get("/sessions/{sid}/history", dependencies=[auth])
    def history(sid: str):
        return {"events": store.history(sid)}

    return app
