"""Lower-bound instances: moment-matched priors and indistinguishable pairs.

Constructions here are verified objects, not trusted formulas: every
moment-matching claim is checked through prior_moments / gaussian_raw_moments,
and the chi-square moment bound is dominated-from-below by an independent
quadrature oracle in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np
from scipy.integrate import quad
from scipy.stats import norm

from .model import DiscreteAtoms

__all__ = [
    "HardInstanceError",
    "DiscretePrior",
    "GaussianSpec",
    "matching_priors_known",
    "two_point_instance_unknown",
    "gaussian_raw_moments",
    "prior_moments",
    "hankel_dets",
    "hankel_closed_form",
    "chi2_moment_bound",
    "chi2_quadrature",
    "prior_to_adversary",
]

WEIGHT_SUM_TOL = 1e-10

# App-chosen absolute constants for the tilt-then-integrate priors: a = sqrt(eps)/C1,
# b = a/C2 with C2 = 2/eps_max.
MATCHING_C1 = 8


class HardInstanceError(ValueError):
    pass


GaussianSpec = tuple[float, float]


@dataclass(frozen=True)
class DiscretePrior:
    """Finitely supported probability measure on the real line."""

    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if not self.atoms:
            raise HardInstanceError("prior needs at least one atom")
        total = math.fsum(w for _, w in self.atoms)
        if any(w < 0.0 for _, w in self.atoms):
            raise HardInstanceError("negative prior weight")
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise HardInstanceError(f"prior weights sum to {total!r}, not 1")

    @property
    def locations(self) -> np.ndarray:
        return np.array([loc for loc, _ in self.atoms])

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms])

    def mass_at(self, location: float) -> float:
        return math.fsum(w for loc, w in self.atoms if loc == location)


def _exact_matching_coefficients(
    eps_max: float, eps: float, K: int
) -> tuple[Fraction, Fraction, dict[int, Fraction], Fraction, Fraction, Fraction]:
    """Exact-rational alpha/beta/T; tau cancels out of every weight ratio."""
    a = Fraction(math.sqrt(eps) / MATCHING_C1)
    b = a * Fraction(eps_max) / 2  # a / C2 with C2 = 2/eps_max
    assert 0 < b < a < Fraction(1, 2)
    half = K // 2
    alphas: dict[int, Fraction] = {}
    beta_plus = Fraction(0)
    beta_minus = Fraction(0)
    for k in range(K + 1):
        binom = Fraction(math.comb(K, k))
        d1 = k - half + a
        d2 = d1 + b
        alphas[k] = binom / (d1 * d2)
        sign = 1 if (K - k) % 2 == 0 else -1
        beta_plus += sign * binom / (d2 * b)
        beta_minus += sign * binom / (d1 * b)
    if beta_plus <= 0 or beta_minus <= 0:
        raise HardInstanceError("beta coefficients must be positive")
    t_even = beta_plus + sum(alphas[k] for k in range(0, K + 1, 2))
    t_odd = beta_minus + sum(alphas[k] for k in range(1, K + 1, 2))
    if t_even != t_odd:
        # Algebraic identity (the difference CF vanishes at 0); exact rationals
        # cannot miss it.
        raise HardInstanceError("total-mass identity failed")
    return a, b, alphas, beta_plus, beta_minus, t_even


def matching_priors_known(
    eps_max: float, eps: float, K: int, tau: float
) -> tuple[DiscretePrior, DiscretePrior]:
    """Pair of priors matching raw moments 0..K+1, one concentrated at 0.

    nu0 puts mass >= 1 - eps_max at 0; nu1 puts mass >= 1 - eps at b/tau.
    Their difference CF is O(t^{K+2}), built by tilting and integrating an
    order-K sine power twice. Coefficients are computed in exact rational
    arithmetic; only atom locations involve tau.
    """
    if not (0.0 < eps_max < 0.5):
        raise HardInstanceError("eps_max must lie in (0, 1/2)")
    if not (0.0 < eps <= eps_max):
        raise HardInstanceError("eps must lie in (0, eps_max]")
    if K <= 0 or K % 4 != 0:
        raise HardInstanceError("K must be a positive multiple of 4")
    if tau <= 0.0:
        raise HardInstanceError("tau must be positive")
    if K / tau < 1.0:
        raise HardInstanceError("need K/tau >= 1 for the moment-magnitude clause")

    a, b, alphas, beta_plus, beta_minus, total = _exact_matching_coefficients(
        eps_max, eps, K
    )
    half = K // 2
    shift = float(a + b)

    nu0_atoms = [(0.0, float(beta_plus / total))]
    nu0_atoms += [
        ((k - half + shift) / tau, float(alphas[k] / total))
        for k in range(0, K + 1, 2)
    ]
    nu1_atoms = [(float(b) / tau, float(beta_minus / total))]
    nu1_atoms += [
        ((k - half + shift) / tau, float(alphas[k] / total))
        for k in range(1, K + 1, 2)
    ]
    return DiscretePrior(tuple(nu0_atoms)), DiscretePrior(tuple(nu1_atoms))


def two_point_instance_unknown(eps_max: float) -> tuple[DiscretePrior, float, float]:
    """Contaminated point mass vs Gaussian matching the first three moments.

    Returns (mu0, gaussian_mean, gaussian_var) with mu0 = (1-eps_max) at 0 plus
    eps_max split over two negative/positive atoms, and the moment-matched
    Gaussian N(1, s^2). Only valid for eps_max <= 1/3: the fourth moments must
    differ (s^2 > (1-eps_max)/eps_max forces a positive fourth-moment gap).
    """
    if not (0.0 < eps_max <= 1.0 / 3.0):
        raise HardInstanceError("eps_max must lie in (0, 1/3]")
    e = eps_max
    disc = (2.0 * e * e + 9.0 * e + 5.0) / (3.0 * e + 1.0)
    A = math.sqrt(disc)
    y1 = -(1.0 + A) / e
    y2 = (-1.0 + A) / e
    s2 = (2.0 - e - e * e) / (e * (1.0 + 3.0 * e))
    p = 0.5 - math.sqrt((3.0 * e + 1.0) / (2.0 * e * e + 9.0 * e + 5.0))
    if not (0.0 < p < 1.0):
        raise HardInstanceError("atom split left (0, 1)")
    mu0 = DiscretePrior(((0.0, 1.0 - e), (y1, e * p), (y2, e * (1.0 - p))))
    return mu0, 1.0, s2


def gaussian_raw_moments(mean: float, variance: float, k_max: int) -> tuple[float, ...]:
    """E[X^k] for X ~ N(mean, variance), k = 0..k_max."""
    if variance < 0.0:
        raise HardInstanceError("variance must be nonnegative")
    if k_max < 0:
        raise HardInstanceError("k_max must be nonnegative")
    out = [1.0]
    if k_max >= 1:
        out.append(mean)
    for k in range(2, k_max + 1):
        out.append(mean * out[k - 1] + (k - 1) * variance * out[k - 2])
    return tuple(out)


def prior_moments(prior: DiscretePrior, k_max: int) -> tuple[float, ...]:
    """Raw moments by direct compensated summation over the atoms."""
    if k_max < 0:
        raise HardInstanceError("k_max must be nonnegative")
    out = []
    for k in range(k_max + 1):
        out.append(math.fsum(w * loc**k for loc, w in prior.atoms))
    return tuple(out)


def hankel_closed_form(eps_max: float, s2: float, order: int) -> float:
    """Closed-form det H_order for orders 1 and 2 (cross-check polynomials)."""
    e = eps_max
    if order == 1:
        return (e * s2 + e - 1.0) / e**2
    if order == 2:
        return s2 * ((3.0 * e - 1.0) * s2**2 + e - 1.0) / e**3
    raise HardInstanceError("closed forms kept for orders 1 and 2 only")


def hankel_dets(eps_max: float, s2: float, order: int) -> tuple[float, ...]:
    """det H_0 .. det H_order for the deconvolution moment problem.

    H_l = [m_{i+j}] where m_0 = 1 (any candidate contamination is a probability
    measure) and m_k = E[X^k under N(1, s2)] / eps_max for k >= 1. All H_l PSD
    is necessary for a contamination matching the Gaussian's first 2l+1 raw
    moments to exist.
    """
    if not (0.0 < eps_max < 1.0):
        raise HardInstanceError("eps_max must lie in (0, 1)")
    if s2 < 0.0:
        raise HardInstanceError("s2 must be nonnegative")
    if not (0 <= order <= 6):
        raise HardInstanceError("order must lie in 0..6")
    g = gaussian_raw_moments(1.0, s2, 2 * order)
    m = [1.0] + [v / eps_max for v in g[1:]]
    dets = []
    for level in range(order + 1):
        H = np.array([[m[i + j] for j in range(level + 1)] for i in range(level + 1)])
        dets.append(float(np.linalg.det(H)))
    for level in (1, 2):
        if order >= level:
            closed = hankel_closed_form(eps_max, s2, level)
            if abs(dets[level] - closed) > 1e-8 * max(1.0, abs(closed)):
                raise HardInstanceError(
                    f"numeric det H_{level} disagrees with closed form"
                )
    return tuple(dets)


def _moments_of(dist: Union[DiscretePrior, GaussianSpec], k_max: int) -> tuple[float, ...]:
    if isinstance(dist, DiscretePrior):
        return prior_moments(dist, k_max)
    mean, var = dist
    return gaussian_raw_moments(float(mean), float(var), k_max)


def chi2_moment_bound(
    nu0: DiscretePrior, nu1: Union[DiscretePrior, GaussianSpec], k_max: int
) -> float:
    """Moment-difference upper bound on chi^2(nu0 * N(0,1), nu1 * N(0,1)).

    Returns 2 * sum_{k=1}^{k_max} (E_{nu0} X^k - E_{nu1} X^k)^2 / k!. Requires
    nu0({0}) >= 1/2 (the bound's validity condition).
    """
    if k_max < 1:
        raise HardInstanceError("k_max must be at least 1")
    if nu0.mass_at(0.0) < 0.5 - 1e-12:
        raise HardInstanceError("nu0 must put mass at least 1/2 at 0")
    m0 = _moments_of(nu0, k_max)
    m1 = _moments_of(nu1, k_max)
    terms = []
    fact = 1.0
    for k in range(1, k_max + 1):
        fact *= k  # overflows to inf past k = 170; the term then rounds to 0
        d = m0[k] - m1[k]
        terms.append(d * d / fact)
    return 2.0 * math.fsum(terms)


def _mixture_pdf_factory(dist: Union[DiscretePrior, GaussianSpec]):
    if isinstance(dist, DiscretePrior):
        locs = dist.locations
        ws = dist.weights

        def pdf(x: float) -> float:
            return float(np.sum(ws * norm.pdf(x - locs)))

        return pdf, float(np.max(np.abs(locs)))
    mean, var = float(dist[0]), float(dist[1])
    scale = math.sqrt(1.0 + var)

    def pdf(x: float) -> float:
        return float(norm.pdf(x, loc=mean, scale=scale))

    return pdf, abs(mean) + 3.0 * scale


def chi2_quadrature(
    nu0: DiscretePrior, nu1: Union[DiscretePrior, GaussianSpec], pad: float = 10.0
) -> float:
    """Adaptive-quadrature chi^2(nu1 * N(0,1) || nu0 * N(0,1)) oracle.

    Integrates (p1 - p0)^2 / p0 over a window wide enough that the neglected
    tail mass is < 1e-14; independent of the moment machinery by construction.
    """
    p0, reach0 = _mixture_pdf_factory(nu0)
    p1, reach1 = _mixture_pdf_factory(nu1)
    window = max(reach0, reach1) + pad

    def integrand(x: float) -> float:
        d0 = p0(x)
        d1 = p1(x)
        diff = d1 - d0
        return diff * diff / d0

    val, _ = quad(integrand, -window, window, limit=400, epsabs=1e-13, epsrel=1e-10)
    return float(val)


def prior_to_adversary(prior: DiscretePrior) -> DiscreteAtoms:
    """Reuse a prior as a contamination distribution for sampling."""
    return DiscreteAtoms(atoms=prior.atoms)
