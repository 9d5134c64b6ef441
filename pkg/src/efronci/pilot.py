"""Pilot estimators: crude localization of the mean and noise variance.

The confidence-interval stage only searches candidate means inside a pilot
interval [theta_tilde +/- M sigma_hat / sqrt(log(en))] and, in unknown-variance
mode, candidate variances inside a multiplicative window
[sigma2_tilde / (1 + L/log(en)), sigma2_tilde * (1 + L/log(en))].

Estimators:
  * sample median (contamination-robust mean seed),
  * blockwise minimum variance (min over random subsets of the unbiased block
    variance; the min dodges contaminated blocks),
  * Fourier variance sigma2_tilde = -2 log|phi_n(t*)| / t*^2,
  * grid-scan mean: argmin over (mu, lambda) of the hinge loss
      L_n(mu, lambda) = max_t ( |eps_max^{-1} e^{-i mu t + lambda t^2/2}
                                 phi_n(t) - (1-eps_max)/eps_max| - 1 )_+ ,
    which is zero at the truth for every contamination level eps <= eps_max.

All internal arithmetic runs on anchored values y = x - anchor (anchor = lower
median order statistic), so translation enters only through the anchor and the
outputs are exactly equivariant whenever the float translation itself is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal, Optional

import numpy as np
from scipy.stats import norm

from .ecf import FrequencyGrid, grid_known, grid_unknown
from .interval import Interval
from .model import SampleSet, derive_substream

__all__ = [
    "PilotError",
    "ConstantsError",
    "PilotConstants",
    "PilotBundle",
    "median_constant",
    "sample_median",
    "blockwise_variance",
    "pilot_variance",
    "pilot_mean",
    "pilot_bundle",
]

# Substream tag for the blockwise subset draws.
BLOCK_TAG = 0x626C6F63

# Cells per mu-chunk in the scan; caps peak memory near 64 MB.
_SCAN_CHUNK_CELLS = 4_000_000


def _offset_unit(half_width: float) -> float:
    """Power-of-two quantum ~ half_width * 2^-34 for anchor-relative offsets.

    Offsets snapped to a power-of-two grid make anchor + offset (and its
    translated/scaled counterparts) a single exact float sum for dyadic
    inputs of moderate magnitude, so equivariance holds bitwise at the
    output level, not just up to an ulp. Relative resolution 2^-34 is far
    below any statistical scale in play.
    """
    return math.ldexp(1.0, math.frexp(half_width)[1] - 34)


def _snap(x: float, unit: float) -> float:
    return round(x / unit) * unit


class PilotError(ValueError):
    """Pilot estimation failed or received invalid inputs."""


class ConstantsError(ValueError):
    """Tuning constants violate their validity constraints."""


@dataclass(frozen=True)
class PilotConstants:
    """Tuning constants shared by pilots and certificates.

    M: pilot interval width multiplier. L: variance window multiplier.
    kappa: certificate frequency scale; None selects the mode-specific legal
    floor (max(sqrt(2), M/pi) known, max(sqrt(5), 2M/pi) unknown). c0: Fourier
    variance frequency multiplier; None selects sqrt(C3)/2. C1/C2: blockwise
    block count/length exponents. C3: scan window constant (variance scan runs
    over [sigma_breve^2/C3, C3 sigma_breve^2]). delta: failure budget.
    eps_max: contamination budget. pivot_step: unknown-mode pivot spacing
    multiplier (step = pivot_step * sigma_plus * n^{-1/8}).
    """

    M: float = 6.0
    L: float = 4.0
    kappa: Optional[float] = None
    c0: Optional[float] = None
    C1: float = 0.5
    C2: float = 4.0
    C3: float = 2.0
    delta: float = 0.1
    eps_max: float = 0.2
    pivot_step: float = 1.0

    def __post_init__(self) -> None:
        if self.M <= 0 or self.L <= 0 or self.C1 <= 0 or self.C2 <= 0:
            raise ConstantsError("M, L, C1, C2 must be positive")
        if self.C3 < 1.0:
            raise ConstantsError("C3 must be >= 1")
        if self.kappa is not None and self.kappa <= 0:
            raise ConstantsError("kappa must be positive when given")
        if self.c0 is not None and self.c0 <= 0:
            raise ConstantsError("c0 must be positive when given")
        if not (0.0 < self.delta < 1.0):
            raise ConstantsError("delta must lie in (0, 1)")
        if not (0.0 < self.eps_max < 0.5):
            raise ConstantsError("eps_max must lie in (0, 1/2)")
        if self.pivot_step <= 0:
            raise ConstantsError("pivot_step must be positive")

    def kappa_for(self, mode: Literal["known", "unknown"]) -> float:
        """Resolved kappa, validated against the mode's legal floor."""
        floor = (
            max(math.sqrt(2.0), self.M / math.pi)
            if mode == "known"
            else max(math.sqrt(5.0), 2.0 * self.M / math.pi)
        )
        if self.kappa is None:
            return floor
        if self.kappa < floor * (1.0 - 1e-12):
            raise ConstantsError(
                f"kappa={self.kappa!r} below the {mode}-mode floor {floor!r}"
            )
        return self.kappa

    def c0_value(self) -> float:
        return self.c0 if self.c0 is not None else 0.5 * math.sqrt(self.C3)


@dataclass(frozen=True)
class PilotBundle:
    """Pilot outputs plus the derived grids consumed by the CI stage."""

    mode: str
    theta_tilde: float
    lambda_tilde: float
    sigma2_tilde: float
    sigma2_minus: float
    sigma2_plus: float
    pilot_interval: Interval
    freq_grid: FrequencyGrid
    variance_grid: tuple[float, ...]
    anchor: float
    theta_offset: float
    half_width: float
    n_total: int
    n_eff: int


def median_constant(n: int, delta: float, eps_max: float) -> float:
    """Deviation constant D with |median - theta| <= D sigma w.p. >= 1 - delta.

    D = Phi^{-1}( (1/2 + sqrt(log(2/delta)/(2n))) / (1 - eps_max) ); rejects n
    too small for the argument to stay below 1.
    """
    if not (0 < delta < 1):
        raise PilotError("delta must lie in (0, 1)")
    arg = (0.5 + math.sqrt(math.log(2.0 / delta) / (2.0 * n))) / (1.0 - eps_max)
    if arg >= 1.0:
        raise PilotError(f"n={n} too small for the median constant at delta={delta}")
    return float(norm.ppf(arg))


def sample_median(samples: SampleSet) -> float:
    """Standard median (midpoint of the two central order statistics for even n)."""
    return float(np.median(samples.values))


def _lower_median(values: np.ndarray) -> float:
    k = (values.size - 1) // 2
    return float(np.partition(values, k)[k])


def _blockwise(values: np.ndarray, constants: PilotConstants, rng: np.random.Generator) -> float:
    n = values.size
    ell = math.ceil(constants.C2 * math.log(n)) if n > 1 else 0
    if not (2 < ell <= n):
        raise PilotError(f"block length {ell} violates 2 < l <= n={n}")
    m = math.ceil(n ** constants.C1)
    # Variance is translation invariant; anchor for conditioning and so that the
    # result is bitwise unchanged under exactly-representable shifts.
    y = values - _lower_median(values)
    best = math.inf
    for _ in range(m):
        idx = rng.choice(n, size=ell, replace=False)
        v = float(np.var(y[idx], ddof=1))
        if v < best:
            best = v
    return best


def blockwise_variance(samples: SampleSet, constants: PilotConstants, seed: int) -> float:
    """Minimum unbiased variance over m = ceil(n^C1) random blocks of length ceil(C2 log n)."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    return _blockwise(samples.values, constants, rng)


def _fourier_sigma2(modulus: float, t_star: float) -> float:
    if not (0.0 < modulus < 1.0):
        raise PilotError(f"ECF modulus {modulus!r} outside (0, 1); Fourier variance undefined")
    return -2.0 * math.log(modulus) / (t_star * t_star)


def _centered_modulus(values: np.ndarray, t: float) -> float:
    y = values - _lower_median(values)
    arg = t * y
    return float(np.hypot(np.mean(np.cos(arg)), np.mean(np.sin(arg))))


def _block_seed_rng(samples: SampleSet) -> np.random.Generator:
    return derive_substream(samples.seed_provenance, BLOCK_TAG)


def pilot_variance(holdout: SampleSet, train: SampleSet, constants: PilotConstants) -> float:
    """Fourier variance estimate from disjoint halves.

    sigma_breve^2 = blockwise minimum variance on holdout (subset seed derived
    from the holdout's provenance); t* = c0 sqrt(log(e n_eff)) / sigma_breve
    with n_eff = |holdout| + |train|; returns -2 log|phi_n(t*)| / t*^2 with
    phi_n from train.
    """
    sb2 = _blockwise(holdout.values, constants, _block_seed_rng(holdout))
    if not (sb2 > 0):
        raise PilotError("blockwise variance is degenerate (zero)")
    n_eff = holdout.n + train.n
    t_star = constants.c0_value() * math.sqrt(1.0 + math.log(n_eff)) / math.sqrt(sb2)
    return _fourier_sigma2(_centered_modulus(train.values, t_star), t_star)


def _scan_grids(
    x_med: float,
    sigma_breve2: float,
    big_c: float,
    n_eff: int,
    n_med: int,
    constants: PilotConstants,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Coarsest admissible (T, M, V) grids for the mean scan, endpoints included."""
    em = constants.eps_max
    alpha = em / (1.0 - em)
    beta = math.sqrt((1.0 + alpha * alpha) / 2.0)
    gamma = beta / alpha - 1.0
    d_const = median_constant(n_med, constants.delta, em)
    sb = math.sqrt(sigma_breve2)
    root_c_sb = math.sqrt(big_c) * sb
    log_en = 1.0 + math.log(n_eff)
    t_star = math.sqrt(log_en / (8.0 * big_c)) / sb
    quarter = (math.e * n_eff) ** 0.25

    spacing_t = math.acos(beta) / (2.0 * d_const * root_c_sb)
    nt = math.ceil(t_star / spacing_t) + 1
    ts = np.linspace(t_star, 2.0 * t_star, nt)

    half_m = 2.0 * d_const * root_c_sb
    spacing_m = gamma * em / (16.0 * t_star * quarter)
    nm = math.ceil(2.0 * half_m / spacing_m) + 1
    mus = np.linspace(x_med - half_m, x_med + half_m, nm)

    if big_c == 1.0:
        lams = np.array([sigma_breve2])
    else:
        lo, hi = sigma_breve2 / big_c, sigma_breve2 * big_c
        spacing_v = gamma * em / (16.0 * t_star * t_star * quarter)
        nv = math.ceil((hi - lo) / spacing_v) + 1
        lams = np.linspace(lo, hi, nv)
    return ts, mus, lams


def _mean_scan(
    y_train: np.ndarray,
    x_med: float,
    sigma_breve2: float,
    big_c: float,
    n_eff: int,
    n_med: int,
    constants: PilotConstants,
    phi_fn: Optional[Callable[[float], complex]] = None,
) -> tuple[float, float, float]:
    """Hinge-loss grid scan; returns (mu_hat, lambda_hat, achieved loss).

    Ties break toward the smallest mu, then the smallest lambda (row-major
    argmin over the clamped squared modulus, which is order-equivalent to the
    hinge loss).
    """
    em = constants.eps_max
    target = (1.0 - em) / em
    inv_em = 1.0 / em
    ts, mus, lams = _scan_grids(x_med, sigma_breve2, big_c, n_eff, n_med, constants)

    phis: list[complex] = []
    for t in ts:
        if phi_fn is not None:
            phis.append(complex(phi_fn(float(t))))
        else:
            arg = t * y_train
            phis.append(complex(float(np.mean(np.cos(arg))), float(np.mean(np.sin(arg)))))

    # Precompute per-t radius over lambda and ECF phase.
    radii = []
    psis = []
    for t, phi in zip(ts, phis):
        radii.append(inv_em * np.exp(0.5 * lams * t * t) * abs(phi))
        psis.append(math.atan2(phi.imag, phi.real))

    nv = lams.size
    chunk = max(1, _SCAN_CHUNK_CELLS // nv)
    best_val = math.inf
    best_i = 0
    best_j = 0
    for start in range(0, mus.size, chunk):
        mu_c = mus[start : start + chunk]
        m2 = None
        for t, r, psi in zip(ts, radii, psis):
            cosv = np.cos(mu_c * t - psi)
            # |z|^2 for z = r e^{i(psi - mu t)} - target.
            block = (r * r + target * target) - (2.0 * target) * np.outer(cosv, r)
            m2 = block if m2 is None else np.maximum(m2, block, out=m2)
        np.maximum(m2, 1.0, out=m2)
        idx = int(np.argmin(m2))
        val = float(m2.flat[idx])
        if val < best_val:
            best_val = val
            best_i = start + idx // nv
            best_j = idx % nv
    loss = max(0.0, math.sqrt(best_val) - 1.0)
    return float(mus[best_i]), float(lams[best_j]), loss


def pilot_mean(
    holdout: SampleSet,
    train: SampleSet,
    constants: PilotConstants,
    sigma2_known: Optional[float] = None,
    phi_fn: Optional[Callable[[float], complex]] = None,
) -> tuple[float, float]:
    """Grid-scan mean pilot; returns (theta_tilde, lambda_tilde).

    With sigma2_known given, the scan runs at sigma_breve^2 = sigma2_known and
    C = 1, collapsing the variance grid to the singleton {sigma2_known}.
    Otherwise sigma_breve^2 comes from the blockwise estimator on the holdout.
    phi_fn substitutes an exact CF for the train ECF (test hook; disables
    anchoring since exact CFs carry absolute phases).
    """
    if sigma2_known is not None:
        sb2, big_c = float(sigma2_known), 1.0
    else:
        sb2 = _blockwise(holdout.values, constants, _block_seed_rng(holdout))
        big_c = constants.C3
    if not (sb2 > 0):
        raise PilotError("scan variance seed is degenerate (zero)")
    n_eff = holdout.n + train.n
    if phi_fn is not None:
        anchor = 0.0
        y_train = train.values
        x_med = float(np.median(holdout.values))
    else:
        anchor = _lower_median(holdout.values)
        y_train = train.values - anchor
        x_med = float(np.median(holdout.values - anchor))
    mu_off, lam, _ = _mean_scan(
        y_train, x_med, sb2, big_c, n_eff, holdout.n, constants, phi_fn=phi_fn
    )
    return anchor + mu_off, lam


def pilot_bundle(
    samples: SampleSet,
    mode: Literal["known", "unknown"],
    constants: PilotConstants,
    sigma2: Optional[float] = None,
) -> PilotBundle:
    """Assemble pilot estimates, pilot interval, and certificate grids.

    Known mode: the full sample feeds both the median and the scan ECF; the
    variance grid is the singleton {sigma2} and the frequency grid uses the
    true sigma2. Unknown mode: the first floor(n/2) samples form the pilot
    half (first third of it -> blockwise variance and median, rest -> pilot
    ECF); slacks, frequency grid, variance grid, and interval width all use
    the total n, while scan-internal quantities use the pilot sample count.
    """
    n_total = samples.n
    log_en = 1.0 + math.log(n_total)
    kappa = constants.kappa_for(mode)

    if mode == "known":
        if sigma2 is None or sigma2 <= 0:
            raise PilotError("known mode requires sigma2 > 0")
        values = samples.values
        anchor = _lower_median(values)
        y = values - anchor
        x_med = float(np.median(y))
        theta_off, lam, _ = _mean_scan(
            y, x_med, float(sigma2), 1.0, n_total, n_total, constants
        )
        sigma = math.sqrt(sigma2)
        half_width = constants.M * sigma / math.sqrt(log_en)
        unit = _offset_unit(half_width)
        half_width = _snap(half_width, unit)
        theta_off = _snap(theta_off, unit)
        return PilotBundle(
            mode="known",
            theta_tilde=anchor + theta_off,
            lambda_tilde=lam,
            sigma2_tilde=float(sigma2),
            sigma2_minus=float(sigma2),
            sigma2_plus=float(sigma2),
            pilot_interval=Interval(
                anchor + (theta_off - half_width), anchor + (theta_off + half_width)
            ),
            freq_grid=grid_known(float(sigma2), kappa, n_total),
            variance_grid=(float(sigma2),),
            anchor=anchor,
            theta_offset=theta_off,
            half_width=half_width,
            n_total=n_total,
            n_eff=n_total,
        )

    if mode != "unknown":
        raise PilotError(f"unknown pilot mode {mode!r}")
    if sigma2 is not None:
        raise PilotError("unknown mode does not take sigma2")
    half = n_total // 2
    if half < 6:
        raise PilotError("need n >= 12 in unknown mode")
    pilot_values = samples.values[:half]
    anchor = _lower_median(pilot_values)
    n_a = half // 3
    if n_a < 4:
        raise PilotError("pilot half too small to split")
    y_a = pilot_values[:n_a] - anchor
    y_b = pilot_values[n_a:] - anchor
    n_eff = half

    sb2 = _blockwise(y_a, constants, _block_seed_rng(samples))
    if not (sb2 > 0):
        raise PilotError("blockwise variance is degenerate (zero)")
    t_star = constants.c0_value() * math.sqrt(1.0 + math.log(n_eff)) / math.sqrt(sb2)
    arg = t_star * y_b
    modulus = float(np.hypot(np.mean(np.cos(arg)), np.mean(np.sin(arg))))
    sigma2_tilde = _fourier_sigma2(modulus, t_star)
    if not (sigma2_tilde > 0):
        raise PilotError("Fourier variance is degenerate (zero)")

    window = 1.0 + constants.L / log_en
    sigma2_minus = sigma2_tilde / window
    sigma2_plus = sigma2_tilde * window

    x_med = float(np.median(y_a))
    theta_off, lam, _ = _mean_scan(
        y_b, x_med, sb2, constants.C3, n_eff, n_a, constants
    )

    sigma_plus = math.sqrt(sigma2_plus)
    half_width = constants.M * sigma_plus / math.sqrt(log_en)
    unit = _offset_unit(half_width)
    half_width = _snap(half_width, unit)
    theta_off = _snap(theta_off, unit)
    v_count = math.ceil(4.0 / (kappa * kappa) * math.sqrt(n_total) * log_en) + 1
    variance_grid = tuple(float(v) for v in np.linspace(sigma2_minus, sigma2_plus, v_count))
    return PilotBundle(
        mode="unknown",
        theta_tilde=anchor + theta_off,
        lambda_tilde=lam,
        sigma2_tilde=sigma2_tilde,
        sigma2_minus=sigma2_minus,
        sigma2_plus=sigma2_plus,
        pilot_interval=Interval(
            anchor + (theta_off - half_width), anchor + (theta_off + half_width)
        ),
        freq_grid=grid_unknown(sigma2_plus, kappa, n_total),
        variance_grid=variance_grid,
        anchor=anchor,
        theta_offset=theta_off,
        half_width=half_width,
        n_total=n_total,
        n_eff=n_eff,
    )
