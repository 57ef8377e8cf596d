"""FastAPI application exposing the crcartan analyses."""
from typing import Any, Dict, List, Optional

from fastapi import FastAPI, HTTPException
from fastapi.concurrency import run_in_threadpool
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from crcartan import __version__
from crcartan.core.config import TOLERANCES, settings
from crcartan.core.errors import CRCartanError, ParseError
from crcartan.services.analysis import CRAnalyzer, SHIPPED_POINTS, resolve_spec, shipped_specs
from crcartan.services.checks import run_suite


# Create FastAPI app
app = FastAPI(
    title="crcartan",
    description="Cartan connection, tractors and Fefferman metric of CR manifolds given as coframe specs",
    version=__version__,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.CORS_ORIGINS,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


# Request/Response models
class PointRequest(BaseModel):
    """A spec (shipped name or spec text) and a chart point."""
    spec: str
    point: List[float]
    order: Optional[int] = Field(default=None, ge=1, le=12)
    seed: Optional[int] = None


class CheckRequest(BaseModel):
    suite: str = "all"
    seed: Optional[int] = None
    points: int = Field(default=1, ge=1, le=10)


class CheckResponse(BaseModel):
    suite: str
    passed: bool
    failed: List[str]
    checks: List[Dict[str, Any]]


class SpecInfo(BaseModel):
    name: str
    n: int
    coords: List[str]
    default_point: Optional[List[float]]


class HealthResponse(BaseModel):
    """Health check response."""
    status: str
    version: str
    specs_available: int


def _http_error(exc: Exception) -> HTTPException:
    if isinstance(exc, ParseError):
        return HTTPException(status_code=400, detail=str(exc))
    if isinstance(exc, (CRCartanError, KeyError, ValueError)):
        return HTTPException(status_code=422, detail=str(exc))
    return HTTPException(status_code=500, detail=f"Computation failed: {exc}")


@app.get("/health", response_model=HealthResponse)
async def health_check():
    """Health check endpoint."""
    return HealthResponse(status="healthy", version=__version__, specs_available=len(shipped_specs()))


@app.get("/api/specs", response_model=List[SpecInfo])
async def list_specs():
    """Shipped example manifolds."""
    infos = []
    for name in shipped_specs():
        spec = resolve_spec(name)
        infos.append(SpecInfo(name=name, n=spec.n, coords=list(spec.coords), default_point=SHIPPED_POINTS.get(name)))
    return infos


@app.post("/api/analyze")
async def analyze(request: PointRequest) -> Dict[str, Any]:
    """Full analysis at a point."""
    try:
        spec = resolve_spec(request.spec)
        report = await run_in_threadpool(CRAnalyzer(request.seed).analyze, spec, request.point, request.order)
        return report.to_dict()
    except Exception as exc:
        raise _http_error(exc)


@app.post("/api/fefferman")
async def fefferman(request: PointRequest) -> Dict[str, Any]:
    """Fefferman metric and both Ricci computations at a point."""
    try:
        spec = resolve_spec(request.spec)
        report = await run_in_threadpool(CRAnalyzer(request.seed).fefferman, spec, request.point, request.order)
        return report.to_dict()
    except Exception as exc:
        raise _http_error(exc)


@app.post("/api/check", response_model=CheckResponse)
async def check(request: CheckRequest):
    """Run an identity suite; failures are reported, not raised."""
    try:
        ledger = await run_in_threadpool(run_suite, request.suite, request.seed, request.points)
    except Exception as exc:
        raise _http_error(exc)
    return CheckResponse(suite=request.suite, passed=ledger.all_passed, failed=ledger.failed(),
                         checks=ledger.to_records())


@app.get("/api/config")
async def get_config():
    """Effective numerical settings."""
    return {
        "default_order": settings.DEFAULT_ORDER,
        "tolerances": {name: settings.tolerance(name) for name in TOLERANCES},
        "default_seed": settings.DEFAULT_SEED,
    }


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(app, host="0.0.0.0", port=8000)
