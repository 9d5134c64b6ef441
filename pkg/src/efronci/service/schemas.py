"""Request/response models for the CI service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field

__all__ = [
    "ConstantsOverrides",
    "CIKnownRequest",
    "CIUnknownRequest",
    "IntervalOut",
    "PilotIntervalOut",
    "PilotOut",
    "CertificateEntryOut",
    "CertificateReportOut",
    "CIResponse",
    "HealthOut",
]


class ConstantsOverrides(BaseModel):
    """Optional tuning-constant overrides; omitted fields keep defaults."""

    M: Optional[float] = None
    L: Optional[float] = None
    kappa: Optional[float] = None
    c0: Optional[float] = None
    C1: Optional[float] = None
    C2: Optional[float] = None
    C3: Optional[float] = None
    pivot_step: Optional[float] = None

    def as_kwargs(self) -> dict:
        return {k: v for k, v in self.model_dump().items() if v is not None}


class CIKnownRequest(BaseModel):
    values: list[float] = Field(min_length=1)
    sigma2: float = Field(gt=0.0)
    delta: float = Field(default=0.1, gt=0.0, lt=1.0)
    eps_max: float = Field(default=0.2, gt=0.0, lt=0.5)
    constants: Optional[ConstantsOverrides] = None
    detail: bool = False


class CIUnknownRequest(BaseModel):
    values: list[float] = Field(min_length=1)
    delta: float = Field(default=0.1, gt=0.0, lt=1.0)
    eps_max: float = Field(default=1.0 / 3.0, gt=0.0, le=1.0 / 3.0)
    constants: Optional[ConstantsOverrides] = None
    detail: bool = False


class IntervalOut(BaseModel):
    lower: Optional[float]
    upper: Optional[float]
    empty: bool


class PilotIntervalOut(BaseModel):
    lower: float
    upper: float


class PilotOut(BaseModel):
    theta_tilde: float
    sigma2_tilde: float
    sigma2_minus: float
    sigma2_plus: float
    pilot_interval: PilotIntervalOut


class CertificateEntryOut(BaseModel):
    t: float
    variance_candidate: float = Field(alias="lambda")
    order1_margin: float
    order2_margin: Optional[float]
    passed: bool

    model_config = {"populate_by_name": True}


class CertificateReportOut(BaseModel):
    mu: float
    accepted: bool
    entries: list[CertificateEntryOut]


class CIResponse(BaseModel):
    mode: str
    n: int
    interval: IntervalOut
    pilot: PilotOut
    accepted_candidates: list[float]
    contiguous: bool
    reports: list[CertificateReportOut]


class HealthOut(BaseModel):
    status: str
    package: str
    version: str
