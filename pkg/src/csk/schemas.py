"""Request and response models of the HTTP service (also the CLI wire format)."""
from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", ser_json_inf_nan="constants")


class Params(_Strict):
    N: int = Field(ge=2)
    gamma: float = Field(gt=0, lt=1)
    p: Optional[float] = Field(default=None, gt=1)

    @model_validator(mode="after")
    def _dimension(self):
        if self.N <= 2 * self.gamma:
            raise ValueError("need N > 2 gamma")
        return self


class TGrid(_Strict):
    t_min: float
    t_max: float
    n: int = Field(ge=2, le=200_000)

    @model_validator(mode="after")
    def _order(self):
        if not self.t_max > self.t_min:
            raise ValueError("t_max must exceed t_min")
        return self


class Profile(_Strict):
    """Samples on a uniform grid with declared tail exponents (math.inf for compact support)."""
    t_min: float
    t_max: float
    values: list[float] = Field(min_length=16)
    decay_plus: float
    decay_minus: float


class SymbolRequest(_Strict):
    params: Params
    mode: int = Field(default=0, ge=0)
    xi: TGrid
    conjugate: bool = False


class ConstantsRequest(_Strict):
    params: Params
    mode: int = Field(default=0, ge=0)


class PolesRequest(_Strict):
    params: Params
    mode: int = Field(default=0, ge=0)
    kappa: float = Field(default=0.0, ge=0)
    count: int = Field(default=10, ge=1, le=5000)
    certify: bool = True


class GreenRequest(_Strict):
    params: Params
    mode: int = Field(default=0, ge=0)
    kappa: float = Field(default=0.0, ge=0)
    grid: TGrid
    t_cut: float = Field(default=0.05, gt=0)
    window: Optional[int] = Field(default=None, ge=-1)


class KernelRequest(_Strict):
    params: Params
    mode: int = Field(default=0, ge=0)
    grid: TGrid


class SolveModeRequest(_Strict):
    params: Params
    mode: int = Field(default=0, ge=0)
    kappa: float = Field(default=0.0, ge=0)
    window: Optional[int] = Field(default=None, ge=-1)
    h: Profile


class BallRequest(_Strict):
    params: Params
    lam: float = Field(gt=0)
    n_r: int = Field(default=48, ge=8, le=512)
    n_ang: int = Field(default=24, ge=4, le=256)
    tol: float = Field(default=1e-8, gt=0)
    max_iter: int = Field(default=500, ge=1)


class HamiltonianRequest(_Strict):
    params: Params
    v: Profile
    n_tau: int = Field(default=8, ge=2, le=64)
    levels: int = Field(default=30, ge=4, le=60)
    check_quadrature: bool = False


class VerifyRequest(_Strict):
    suite: Literal["acceptance"] = "acceptance"
    only: Optional[list[int]] = None

    @field_validator("only")
    @classmethod
    def _known(cls, v):
        if v is not None and any(not 1 <= k <= 12 for k in v):
            raise ValueError("criteria are numbered 1 to 12")
        return v


class Table(BaseModel):
    """Columns of numbers plus metadata (decay exponents for profiles, diagnostics)."""
    columns: list[str]
    rows: list[list[float]]
    meta: dict = Field(default_factory=dict)
    notes: list[str] = Field(default_factory=list)


class Record(BaseModel):
    data: dict
    notes: list[str] = Field(default_factory=list)


class CriterionOut(BaseModel):
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float


class VerifyResponse(BaseModel):
    results: list[CriterionOut]
    all_passed: bool


class ErrorBody(BaseModel):
    kind: Literal["validation", "numerical"]
    error: str
    message: str
    field: Optional[str] = None
