"""Contaminated Gaussian location model: sampling and characteristic functions.

The observation law is a two-groups mixture

    P = (1 - eps) * N(theta, sigma2) + eps * (Q conv N(0, sigma2)),

where Q is the contamination location distribution ("adversary"). Everything
downstream (certificates, pilots, intervals) consumes either samples from P or
its characteristic function

    phi(t) = (1 - eps) e^{i theta t - sigma2 t^2 / 2}
             + eps e^{-sigma2 t^2 / 2} xi(t),

with xi the characteristic function of Q.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

__all__ = [
    "ModelError",
    "PointMass",
    "DiscreteAtoms",
    "GaussianMixture",
    "Adversary",
    "EfronModel",
    "SeedProvenance",
    "SampleSet",
    "adversary_cf",
    "population_cf",
    "sample",
    "derive_substream",
]

# Contamination above 1/2 makes the location unidentifiable; reject early.
EPS_CAP = 0.5

WEIGHT_SUM_TOL = 1e-9


class ModelError(ValueError):
    """Invalid model configuration."""


@dataclass(frozen=True)
class PointMass:
    """All contamination mass at a single location."""

    location: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.location):
            raise ModelError("point mass location must be finite")


@dataclass(frozen=True)
class DiscreteAtoms:
    """Finitely many contamination locations with probability weights.

    Weights must be nonnegative and sum to 1 within 1e-9; they are renormalized
    to sum to 1 exactly at construction.
    """

    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if not self.atoms:
            raise ModelError("need at least one atom")
        locs = [a[0] for a in self.atoms]
        wts = [a[1] for a in self.atoms]
        if not all(math.isfinite(x) for x in locs):
            raise ModelError("atom locations must be finite")
        if any(w < 0 for w in wts):
            raise ModelError("atom weights must be nonnegative")
        total = math.fsum(wts)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ModelError(f"atom weights sum to {total!r}, expected 1 within {WEIGHT_SUM_TOL}")
        normalized = tuple((float(x), float(w) / total) for x, w in zip(locs, wts))
        object.__setattr__(self, "atoms", normalized)

    @property
    def locations(self) -> np.ndarray:
        return np.array([a[0] for a in self.atoms])

    @property
    def weights(self) -> np.ndarray:
        return np.array([a[1] for a in self.atoms])


@dataclass(frozen=True)
class GaussianMixture:
    """Contamination locations drawn from a finite Gaussian mixture.

    Components are (mean, variance, weight) with variance >= 0 (zero degenerates
    to a point mass) and weights as in DiscreteAtoms.
    """

    components: tuple[tuple[float, float, float], ...]

    def __post_init__(self) -> None:
        if not self.components:
            raise ModelError("need at least one component")
        for m, v, w in self.components:
            if not (math.isfinite(m) and math.isfinite(v) and math.isfinite(w)):
                raise ModelError("component parameters must be finite")
            if v < 0:
                raise ModelError("component variance must be nonnegative")
            if w < 0:
                raise ModelError("component weights must be nonnegative")
        total = math.fsum(w for _, _, w in self.components)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ModelError(f"component weights sum to {total!r}, expected 1 within {WEIGHT_SUM_TOL}")
        normalized = tuple((float(m), float(v), float(w) / total) for m, v, w in self.components)
        object.__setattr__(self, "components", normalized)


Adversary = Union[PointMass, DiscreteAtoms, GaussianMixture]


@dataclass(frozen=True)
class EfronModel:
    """Two-groups model parameters.

    theta: null location. sigma2: known noise variance (> 0). eps: contamination
    fraction in [0, 1/2). adversary: contamination location distribution Q,
    ignored when eps == 0.
    """

    theta: float
    sigma2: float
    eps: float
    adversary: Adversary = field(default_factory=lambda: PointMass(0.0))

    def __post_init__(self) -> None:
        if not math.isfinite(self.theta):
            raise ModelError("theta must be finite")
        if not (math.isfinite(self.sigma2) and self.sigma2 > 0):
            raise ModelError("sigma2 must be positive and finite")
        if not (0.0 <= self.eps < EPS_CAP):
            raise ModelError(f"eps must lie in [0, {EPS_CAP}), got {self.eps!r}")
        if not isinstance(self.adversary, (PointMass, DiscreteAtoms, GaussianMixture)):
            raise ModelError("unknown adversary type")


@dataclass(frozen=True)
class SeedProvenance:
    """Record of the master seed and splittable stream indices used for a draw."""

    master_seed: int
    stream: tuple[int, ...] = ()


@dataclass(frozen=True)
class SampleSet:
    """Immutable sample vector plus the seed that produced it.

    values has n >= 1 finite entries; the array is marked read-only.
    """

    values: np.ndarray
    seed_provenance: SeedProvenance

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 1:
            raise ModelError("values must be a nonempty 1-d array")
        if not np.all(np.isfinite(arr)):
            raise ModelError("values must be finite")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def translated(self, c: float) -> "SampleSet":
        """Shifted copy (same provenance); used by equivariance checks."""
        return SampleSet(self.values + c, self.seed_provenance)

    def scaled(self, s: float) -> "SampleSet":
        """Rescaled copy (same provenance); used by equivariance checks."""
        return SampleSet(self.values * s, self.seed_provenance)


def adversary_cf(q: Adversary, t: float) -> complex:
    """Characteristic function xi(t) of the contamination distribution Q."""
    if isinstance(q, PointMass):
        return cmath.exp(1j * q.location * t)
    if isinstance(q, DiscreteAtoms):
        return complex(sum(w * cmath.exp(1j * x * t) for x, w in q.atoms))
    if isinstance(q, GaussianMixture):
        return complex(
            sum(w * cmath.exp(1j * m * t - 0.5 * v * t * t) for m, v, w in q.components)
        )
    raise ModelError("unknown adversary type")


def population_cf(model: EfronModel, t: float) -> complex:
    """Exact characteristic function of the observation law P."""
    gauss = cmath.exp(-0.5 * model.sigma2 * t * t)
    null = cmath.exp(1j * model.theta * t) * gauss
    if model.eps == 0.0:
        return null
    return (1.0 - model.eps) * null + model.eps * gauss * adversary_cf(model.adversary, t)


def _rng_from(seed: int, stream: tuple[int, ...]) -> np.random.Generator:
    # Philox is counter-based; SeedSequence hashing gives independent substreams
    # for distinct (seed, *stream) tuples.
    entropy = (seed, *stream) if stream else seed
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def derive_substream(prov: SeedProvenance, *tags: int) -> np.random.Generator:
    """Deterministic child generator of a sample's provenance, keyed by tags."""
    return _rng_from(prov.master_seed, (*prov.stream, *tags))


def _draw_adversary(q: Adversary, size: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(q, PointMass):
        return np.full(size, q.location)
    if isinstance(q, DiscreteAtoms):
        return rng.choice(q.locations, size=size, p=q.weights)
    if isinstance(q, GaussianMixture):
        means = np.array([c[0] for c in q.components])
        sds = np.sqrt(np.array([c[1] for c in q.components]))
        wts = np.array([c[2] for c in q.components])
        idx = rng.choice(len(q.components), size=size, p=wts)
        return means[idx] + sds[idx] * rng.standard_normal(size)
    raise ModelError("unknown adversary type")


def sample(
    model: EfronModel, n: int, seed: int, stream: tuple[int, ...] = ()
) -> SampleSet:
    """Draw n iid observations from P.

    Deterministic given (model, n, seed, stream); distinct streams under the
    same seed are independent substreams, which is how the experiment harness
    assigns per-trial randomness.
    """
    if n < 1:
        raise ModelError("n must be >= 1")
    rng = _rng_from(seed, stream)
    centers = np.full(n, model.theta)
    if model.eps > 0.0:
        contaminated = rng.random(n) < model.eps
        k = int(contaminated.sum())
        if k:
            centers[contaminated] = _draw_adversary(model.adversary, k, rng)
    values = centers + math.sqrt(model.sigma2) * rng.standard_normal(n)
    return SampleSet(values, SeedProvenance(int(seed), tuple(int(s) for s in stream)))
