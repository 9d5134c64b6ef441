"""FastAPI application exposing the CI procedures over HTTP."""

from __future__ import annotations

from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..ci import ci_known_variance, ci_output_to_dict, ci_unknown_variance
from ..model import SampleSet, SeedProvenance
from ..pilot import PilotConstants
from .schemas import (
    CIKnownRequest,
    CIResponse,
    CIUnknownRequest,
    ConstantsOverrides,
    HealthOut,
)

__all__ = ["app"]

app = FastAPI(
    title="efronci",
    version=__version__,
    description="Adaptive robust confidence intervals for contaminated Gaussian data.",
)


def _constants(
    overrides: Optional[ConstantsOverrides], delta: float, eps_max: float
) -> PilotConstants:
    kwargs = overrides.as_kwargs() if overrides is not None else {}
    try:
        return PilotConstants(delta=delta, eps_max=eps_max, **kwargs)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def _samples(values: list[float]) -> SampleSet:
    try:
        return SampleSet(np.asarray(values, dtype=float), SeedProvenance(0, ()))
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.get("/health", response_model=HealthOut)
def health() -> dict:
    return {"status": "ok", "package": "efronci", "version": __version__}


@app.post("/v1/ci/known", response_model=CIResponse)
def ci_known(req: CIKnownRequest) -> dict:
    constants = _constants(req.constants, req.delta, req.eps_max)
    samples = _samples(req.values)
    try:
        out = ci_known_variance(samples, req.sigma2, constants, detail=req.detail)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return ci_output_to_dict(out)


@app.post("/v1/ci/unknown", response_model=CIResponse)
def ci_unknown(req: CIUnknownRequest) -> dict:
    constants = _constants(req.constants, req.delta, req.eps_max)
    samples = _samples(req.values)
    try:
        out = ci_unknown_variance(samples, constants, detail=req.detail)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return ci_output_to_dict(out)
