"""Shared fixtures: reference constants, model builders, dyadic rounding."""

from __future__ import annotations

import json
from importlib import resources

import numpy as np
import pytest

from efronci import (
    DiscreteAtoms,
    EfronModel,
    GaussianMixture,
    PilotConstants,
    PointMass,
)
from efronci.model import population_cf

# Hand-calibrated reference constants used by the per-module tests. The
# acceptance suite loads the committed calibration fixture instead.
KNOWN_CONSTANTS = PilotConstants(M=8.0, delta=0.1, eps_max=0.2)
UNKNOWN_CONSTANTS = PilotConstants(
    M=3.5, L=5.0, c0=0.35, C2=1.6, C3=2.5, delta=0.1, eps_max=1.0 / 3.0
)


@pytest.fixture(scope="session")
def known_constants() -> PilotConstants:
    return KNOWN_CONSTANTS


@pytest.fixture(scope="session")
def unknown_constants() -> PilotConstants:
    return UNKNOWN_CONSTANTS


@pytest.fixture(scope="session")
def acceptance_fixture() -> dict:
    text = resources.files("efronci").joinpath("data/acceptance_constants.json")
    return json.loads(text.read_text())


def constants_from_fixture(fixture: dict, mode: str) -> PilotConstants:
    return PilotConstants(**fixture[mode])


def dyadic(values: np.ndarray) -> np.ndarray:
    """Round to the 2^-26 lattice so translation/scale stay exact in floats."""
    return np.round(np.asarray(values) * 2.0**26) / 2.0**26


def random_model(rng: np.random.Generator, eps_max: float) -> EfronModel:
    """Random model spanning all three adversary families."""
    theta = float(rng.uniform(-5.0, 5.0))
    sigma2 = float(rng.uniform(0.2, 4.0))
    eps = float(rng.uniform(0.0, eps_max))
    kind = rng.integers(3)
    if kind == 0:
        adversary = PointMass(float(rng.uniform(-30.0, 30.0)))
    elif kind == 1:
        k = int(rng.integers(1, 5))
        w = rng.dirichlet(np.ones(k))
        locs = rng.uniform(-20.0, 20.0, size=k)
        adversary = DiscreteAtoms(tuple(zip(locs.tolist(), w.tolist())))
    else:
        k = int(rng.integers(1, 4))
        w = rng.dirichlet(np.ones(k))
        means = rng.uniform(-10.0, 10.0, size=k)
        variances = rng.uniform(0.1, 5.0, size=k)
        adversary = GaussianMixture(
            tuple(zip(means.tolist(), variances.tolist(), w.tolist()))
        )
    return EfronModel(theta=theta, sigma2=sigma2, eps=eps, adversary=adversary)


def population_phi(model: EfronModel):
    return lambda t: population_cf(model, t)
