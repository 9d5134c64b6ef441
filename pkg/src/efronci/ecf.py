"""Empirical characteristic function and the sqrt(k) frequency lattice.

phi_n(t) = (1/n) sum_j e^{i t X_j}, accumulated in double precision with
pairwise (tree) summation. Certificates evaluate phi_n on the lattice
t_k = sqrt(k) * t_1, whose uniform concentration radius scales linearly in
t/t_1; the radius formula is exposed here and rejected off the lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import SampleSet

__all__ = [
    "GridError",
    "FrequencyGrid",
    "EmpiricalCF",
    "ecf_eval",
    "grid_known",
    "grid_unknown",
    "concentration_radius",
]

LATTICE_TOL = 1e-9


class GridError(ValueError):
    """Frequency not on the lattice, or an invalid grid request."""


def _grid_size(n: int) -> int:
    # ceil(log(e n)) = ceil(1 + log n) frequencies.
    return max(1, math.ceil(1.0 + math.log(n)))


@dataclass(frozen=True)
class FrequencyGrid:
    """Frequencies t_k = sqrt(k) * base for k = 1..k_max.

    base is the fundamental frequency t_1; frequencies are strictly increasing
    and positive by construction.
    """

    base: float
    frequencies: tuple[float, ...]

    def __post_init__(self) -> None:
        if not (math.isfinite(self.base) and self.base > 0):
            raise GridError("base frequency must be positive and finite")
        if not self.frequencies:
            raise GridError("grid must be nonempty")
        for k, t in enumerate(self.frequencies, start=1):
            expected = math.sqrt(k) * self.base
            if not math.isclose(t, expected, rel_tol=1e-12, abs_tol=0.0):
                raise GridError(f"frequency {t!r} at index {k} is off the sqrt(k) lattice")

    @property
    def k_max(self) -> int:
        return len(self.frequencies)


def _lattice_grid(base: float, k_max: int) -> FrequencyGrid:
    freqs = tuple(math.sqrt(k) * base for k in range(1, k_max + 1))
    return FrequencyGrid(base=base, frequencies=freqs)


def grid_known(sigma2: float, kappa: float, n: int) -> FrequencyGrid:
    """Certificate grid for known variance: t_k = sqrt(k)/(kappa sigma)."""
    if sigma2 <= 0 or kappa <= 0 or n < 1:
        raise GridError("need sigma2 > 0, kappa > 0, n >= 1")
    return _lattice_grid(1.0 / (kappa * math.sqrt(sigma2)), _grid_size(n))


def grid_unknown(sigma2_plus: float, kappa: float, n: int) -> FrequencyGrid:
    """Certificate grid for unknown variance, anchored at the upper window edge."""
    if sigma2_plus <= 0 or kappa <= 0 or n < 1:
        raise GridError("need sigma2_plus > 0, kappa > 0, n >= 1")
    return _lattice_grid(1.0 / (kappa * math.sqrt(sigma2_plus)), _grid_size(n))


def concentration_radius(t: float, base: float, n: int, delta: float) -> float:
    """Uniform ECF deviation radius at lattice point t: (t/t_1) sqrt(8 log(5/delta) / n).

    With probability >= 1 - delta, |phi_n(t) - phi(t)| is bounded by this
    simultaneously over the lattice. Off-lattice t (further than 1e-9 relative
    from every sqrt(k) * base) is rejected.
    """
    if not (0 < delta < 1):
        raise GridError("delta must lie in (0, 1)")
    if n < 1:
        raise GridError("n must be >= 1")
    ratio = t / base
    k = ratio * ratio
    k_round = round(k)
    if k_round < 1 or abs(t - math.sqrt(k_round) * base) > LATTICE_TOL * abs(t):
        raise GridError(f"t={t!r} is not on the sqrt(k) lattice with base {base!r}")
    return ratio * math.sqrt(8.0 * math.log(5.0 / delta) / n)


class EmpiricalCF:
    """ECF of a sample, with exact-t caching.

    eval(t) returns (1/n) sum_j e^{i t X_j}. eval_centered(t) returns the same
    quantity for the anchored values X_j - anchor, where anchor is the lower
    median order statistic; interval routines work in anchored coordinates so
    that candidate phases stay small and translation cancels exactly. The two
    agree up to the phase e^{i t anchor}.
    """

    def __init__(self, samples: SampleSet, anchor: float | None = None):
        self.samples = samples
        values = samples.values
        if anchor is None:
            order = np.sort(values)
            anchor = float(order[(values.size - 1) // 2])
        self.anchor = float(anchor)
        self._centered = values - self.anchor
        self._cache: dict[float, complex] = {}
        self._cache_centered: dict[float, complex] = {}

    @property
    def n(self) -> int:
        return self.samples.n

    def eval(self, t: float) -> complex:
        t = float(t)
        hit = self._cache.get(t)
        if hit is None:
            hit = _phi_of(self.samples.values, t)
            self._cache[t] = hit
        return hit

    def eval_centered(self, t: float) -> complex:
        t = float(t)
        hit = self._cache_centered.get(t)
        if hit is None:
            hit = _phi_of(self._centered, t)
            self._cache_centered[t] = hit
        return hit


def _phi_of(values: np.ndarray, t: float) -> complex:
    # np.mean reduces with pairwise summation, which keeps the accumulation
    # error O(log n) in ulps for the n up to ~1e6 used here.
    arg = t * values
    return complex(float(np.mean(np.cos(arg))), float(np.mean(np.sin(arg))))


def ecf_eval(samples: SampleSet, t: float) -> complex:
    """One-shot ECF evaluation (no cache)."""
    return _phi_of(samples.values, float(t))
