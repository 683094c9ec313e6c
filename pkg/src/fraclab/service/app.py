"""FastAPI service wrapping the numerical laboratory.

Every computation endpoint accepts the same RunRequest body (preset plus
optional INI overrides) and returns typed results; domain failures map to
structured error payloads so thin clients can translate them into the
documented exit codes.
"""

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..config import PRESETS, config_to_text, get_preset
from ..errors import ConfigError, DivergenceError, FracLabError, GuardError
from ..runs import run_forward, run_recover, run_runge, run_verify
from .schemas import (
    DnData,
    ForwardResponse,
    PresetConfig,
    PresetList,
    RecoverResponse,
    RungeResponse,
    RunRequest,
    VerifyResponse,
)


def _error(exc: FracLabError) -> HTTPException:
    if isinstance(exc, ConfigError):
        return HTTPException(status_code=422, detail={"code": "config", "message": str(exc)})
    if isinstance(exc, GuardError):
        return HTTPException(status_code=409, detail={"code": "guard", "message": str(exc)})
    if isinstance(exc, DivergenceError):
        return HTTPException(status_code=409, detail={"code": "divergence", "message": str(exc)})
    return HTTPException(status_code=400, detail={"code": "domain", "message": str(exc)})


def create_app() -> FastAPI:
    app = FastAPI(title="fraclab", version=__version__,
                  description="1-D nonlocal operator laboratory: forward solves, "
                              "exterior measurements, density demos, coefficient recovery")

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.get("/presets", response_model=PresetList)
    def presets():
        return PresetList(presets=sorted(PRESETS))

    @app.get("/presets/{name}", response_model=PresetConfig)
    def preset(name: str):
        try:
            cfg = get_preset(name)
        except ConfigError as exc:
            raise _error(exc) from exc
        return PresetConfig(name=name, config_text=config_to_text(cfg))

    @app.post("/forward", response_model=ForwardResponse)
    def forward(req: RunRequest):
        try:
            result = run_forward(req.resolve())
        except FracLabError as exc:
            raise _error(exc) from exc
        return ForwardResponse(
            nodes=result["nodes"], solution=result["solution"],
            residual=result["residual"], sigma_min=result["sigma_min"],
            guard_passed=result["guard_passed"],
            dn=DnData(points=result["dn_points"], values=result["dn_values"],
                      source=result["dn_source"]),
            benchmark_rel_l2_error=result.get("benchmark_rel_l2_error"))

    @app.post("/recover", response_model=RecoverResponse)
    def recover(req: RunRequest):
        try:
            result = run_recover(req.resolve())
        except FracLabError as exc:
            raise _error(exc) from exc
        return RecoverResponse(**result)

    @app.post("/runge", response_model=RungeResponse)
    def runge(req: RunRequest):
        try:
            result = run_runge(req.resolve())
        except FracLabError as exc:
            raise _error(exc) from exc
        return RungeResponse(**result)

    @app.post("/verify", response_model=VerifyResponse)
    def verify(req: RunRequest):
        try:
            result = run_verify(req.resolve())
        except FracLabError as exc:
            raise _error(exc) from exc
        return VerifyResponse(**result)

    return app


app = create_app()
