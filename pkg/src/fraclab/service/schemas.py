"""Pydantic request/response models for the fraclab service.

Requests carry an optional preset name plus a partial configuration in the
same key/value vocabulary as the INI grammar; the effective configuration is
preset < config-text < overrides.
"""

from dataclasses import replace

from pydantic import BaseModel, Field

from ..config import RunConfig, get_preset, parse_config_text


class RunRequest(BaseModel):
    preset: str | None = Field(default=None, description="preset name to start from")
    config_text: str | None = Field(default=None, description="INI configuration text")
    seed: int | None = None

    def resolve(self) -> RunConfig:
        cfg = get_preset(self.preset) if self.preset else RunConfig()
        if self.config_text:
            cfg = parse_config_text(self.config_text, base=cfg)
        if self.seed is not None:
            cfg = replace(cfg, seed=self.seed)
        return cfg.validate()


class ErrorBody(BaseModel):
    code: str
    message: str


class DnData(BaseModel):
    points: list[float]
    values: list[float]
    source: str


class ForwardResponse(BaseModel):
    nodes: list[float]
    solution: list[float]
    residual: float
    sigma_min: float
    guard_passed: bool
    dn: DnData
    benchmark_rel_l2_error: float | None = None


class RecoverResponse(BaseModel):
    cell_centers_b: list[float]
    cell_centers_q: list[float]
    b_hat: list[float]
    q_hat: list[float]
    b_true: list[float]
    q_true: list[float]
    misfit_history: list[float]
    gradient_norms: list[float]
    lambda_tik: float
    converged: bool
    rel_error_b: float
    rel_error_q: float
    log_lines: list[str]
    b_unrecoverable: list[int] | None = None
    q_unrecoverable: list[int] | None = None
    covers_interval: bool | None = None
    identity_residual: float | None = None


class RungeCurve(BaseModel):
    demo: str
    basis_sizes: list[int]
    errors: list[float]


class RungeResponse(BaseModel):
    curves: list[RungeCurve]


class VerifyCheck(BaseModel):
    name: str
    value: float
    tol: float
    passed: bool


class VerifyResponse(BaseModel):
    checks: list[VerifyCheck]
    all_passed: bool


class PresetList(BaseModel):
    presets: list[str]


class PresetConfig(BaseModel):
    name: str
    config_text: str
