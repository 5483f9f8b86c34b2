from __future__ import annotations

import logging
import time
import uuid
from typing import Literal, Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from config_helpers import load_settings

from .cli import describe_error
from .connection import connect_to_point, connection_matrix, reconstruction_residual
from .errors import HeunConnectError, ParseError
from .geometry import AngleTriple
from .regions import (
    DEFAULT_DMN_WINDOW,
    config_conditions,
    count_components,
    scan_condition_a,
    scan_condition_ab,
    scan_condition_b,
    scan_dmn,
    unit_circle_config,
)
from .serialization import complex_from_json, config_from_dict, matrix_to_dict, params_report, raster_to_dict
from .series import SymmetricHeunConfig

logger = logging.getLogger("heun_connect.server")

# keeps requests bounded; the CLI has no such limit
MAX_SCAN_CELLS = 256 * 256
MAX_PHI_RESOLUTION = 256
# outer cells times inner angle pairs for one dmn scan
MAX_DMN_WORK = 64**4

app = FastAPI(title="heun-connect")


def _service_fields(request: Request) -> str:
    fields = getattr(request.state, "log_fields", None) or {}
    return "".join(f" {key}={value}" for key, value in fields.items())


@app.middleware("http")
async def log_requests(request: Request, call_next):
    """One log line per request; handlers add their own fields via ``request.state.log_fields``."""

    raw_request_id = request.headers.get("X-Request-Id")
    try:
        request_id = uuid.UUID(raw_request_id).hex if raw_request_id else uuid.uuid4().hex
    except (ValueError, AttributeError, TypeError):
        request_id = uuid.uuid4().hex
    request.state.log_fields = {}
    start = time.perf_counter()
    try:
        response = await call_next(request)
    except Exception:
        logger.exception(
            "%s %s failed request_id=%s duration_ms=%.1f%s",
            request.method,
            request.url.path,
            request_id,
            (time.perf_counter() - start) * 1000,
            _service_fields(request),
        )
        raise

    response.headers["X-Request-Id"] = request_id
    logger.info(
        "%s %s status=%s request_id=%s duration_ms=%.1f%s",
        request.method,
        request.url.path,
        response.status_code,
        request_id,
        (time.perf_counter() - start) * 1000,
        _service_fields(request),
    )
    return response


class ConfigPayload(BaseModel):
    z: Optional[list[list[float]]] = None
    chi: Optional[list[float | list[float]]] = None
    lam: float | list[float] = 0.0
    phi: Optional[list[float]] = Field(default=None, description="unit-circle angles phi1, phi2[, phi4]")
    a: Optional[list[float]] = Field(default=None, description="cross-ratio [re, im] fixing z3")


class ConnectPayload(BaseModel):
    config: ConfigPayload
    k: int = Field(ge=1, le=4)
    l: Optional[int] = Field(default=None, ge=1, le=4)
    at: list[float] = [0.0, 0.0]
    n_terms: Optional[int] = Field(default=None, ge=2)


class ScanPayload(BaseModel):
    kind: Literal["a", "b", "ab", "dmn"]
    resolution: int = Field(default=64, ge=8)
    phi_resolution: int = Field(default=64, ge=8, le=MAX_PHI_RESOLUTION)
    a: Optional[list[float]] = None
    window: Optional[list[float]] = None


def _http_error(exc: HeunConnectError) -> HTTPException:
    status = 422 if isinstance(exc, ParseError) else 400
    return HTTPException(
        status_code=status,
        detail={"error": type(exc).__name__, "exitCode": exc.exit_code, "message": describe_error(exc)},
    )


def _build_config(payload: ConfigPayload) -> SymmetricHeunConfig:
    if payload.phi is not None:
        if payload.a is None or len(payload.phi) not in (2, 3):
            raise ParseError("phi needs two or three angles together with a")
        chi = tuple(payload.chi) if payload.chi else (0.3, 0.5, 0.7, 0.9)
        return unit_circle_config(
            AngleTriple(*payload.phi),
            complex_from_json(payload.a, "a"),
            chi=[complex_from_json(c, "chi") for c in chi],
            lam=complex_from_json(payload.lam, "lam"),
        )
    return config_from_dict(payload.model_dump(exclude={"phi", "a"}, exclude_none=True))


@app.get("/healthz")
def healthcheck() -> JSONResponse:
    return JSONResponse({"status": "ok"})


@app.get("/api/options")
def api_options() -> dict:
    settings = load_settings()
    return {
        "scanKinds": ["a", "b", "ab", "dmn"],
        "maxScanCells": MAX_SCAN_CELLS,
        "maxDmnWork": MAX_DMN_WORK,
        "dmnWindow": [list(DEFAULT_DMN_WINDOW[0]), list(DEFAULT_DMN_WINDOW[1])],
        "settings": {"tolerance": settings.tolerance, "seed": settings.seed, "jobs": settings.jobs},
    }


@app.post("/api/params")
def api_params(payload: ConfigPayload) -> dict:
    try:
        return params_report(_build_config(payload))
    except HeunConnectError as exc:
        raise _http_error(exc) from exc


@app.post("/api/conditions")
def api_conditions(payload: ConfigPayload) -> dict:
    try:
        report = config_conditions(_build_config(payload))
    except HeunConnectError as exc:
        raise _http_error(exc) from exc
    return {**report._asdict(), "singlePoint": report.single_point}


@app.post("/api/connect")
def api_connect(payload: ConnectPayload, request: Request) -> dict:
    request.state.log_fields.update(k=payload.k, l=payload.l)
    settings = load_settings()
    try:
        cfg = _build_config(payload.config)
        at = complex_from_json(payload.at, "at")
        if payload.l is None:
            matrix = connect_to_point(cfg, payload.k, at, n_terms=payload.n_terms)
        else:
            matrix = connection_matrix(cfg, payload.k, payload.l, at, n_terms=payload.n_terms)
        residual = 0.0 if payload.k == payload.l else reconstruction_residual(
            cfg, matrix, seed=settings.seed, n_terms=payload.n_terms
        )
    except HeunConnectError as exc:
        raise _http_error(exc) from exc
    return {"matrix": matrix_to_dict(matrix), "reconstructionResidual": residual}


@app.post("/api/scan")
def api_scan(payload: ScanPayload, request: Request) -> dict:
    cells = payload.resolution**2
    request.state.log_fields.update(kind=payload.kind, cells=cells)
    if cells > MAX_SCAN_CELLS:
        raise HTTPException(status_code=400, detail="Oppløysinga er for stor for HTTP-tenesta; bruk CLI.")
    if payload.kind == "dmn" and cells * payload.phi_resolution**2 > MAX_DMN_WORK:
        raise HTTPException(status_code=400, detail="Dmn-skanninga er for stor for HTTP-tenesta; bruk CLI.")
    resolution = (payload.resolution, payload.resolution)
    try:
        if payload.kind == "a":
            raster = scan_condition_a(resolution)
        elif payload.kind in ("b", "ab"):
            if payload.a is None:
                raise ParseError(f"scan {payload.kind} requires a")
            scan = scan_condition_b if payload.kind == "b" else scan_condition_ab
            raster = scan(complex_from_json(payload.a, "a"), resolution)
        else:
            window = DEFAULT_DMN_WINDOW
            if payload.window is not None:
                if len(payload.window) != 4:
                    raise ParseError("window needs re0, re1, im0, im1")
                window = ((payload.window[0], payload.window[1]), (payload.window[2], payload.window[3]))
            raster = scan_dmn(window, resolution, (payload.phi_resolution, payload.phi_resolution))
    except HeunConnectError as exc:
        raise _http_error(exc) from exc
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=f"Ugyldig skanning: {exc}") from exc
    summary = raster_to_dict(raster)
    request.state.log_fields["true"] = int(raster.cells.sum())
    if payload.kind != "dmn":
        summary["components"] = count_components(raster)
    summary["labels"] = raster.labels.tolist()
    return summary
