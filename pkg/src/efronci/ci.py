"""Confidence intervals by certification of pivot candidates.

Known variance: the pilot interval is cut into J = ceil(n^{1/4}/sqrt(log(en)))
pieces and the J+1 boundary points are the candidate means; a candidate is
accepted when the order-1 certificate passes at every grid frequency. Unknown
variance: candidates are spaced pivot_step * sigma_plus * n^{-1/8} apart and a
candidate is accepted when SOME variance grid point passes both certificate
orders at ALL frequencies. The returned interval is the convex hull of the
accepted candidates widened by one step on each side, clamped to the pilot
interval (candidate index -1 maps to index 0, J+1 to J).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Literal, Optional

import numpy as np

from .certificates import (
    CertificateMargins,
    ExponentOverflowError,
    order1_margin,
    order2_margin,
    slack_known,
    slack_unknown,
    upsilon_known,
    upsilon_unknown,
)
from .ecf import EmpiricalCF
from .interval import Interval
from .model import SampleSet
from .pilot import ConstantsError, PilotBundle, PilotConstants, _offset_unit, pilot_bundle

__all__ = [
    "Interval",
    "CertificateReport",
    "CIOutput",
    "certify_candidate",
    "ci_known_variance",
    "ci_unknown_variance",
    "ci_output_to_dict",
]

UNKNOWN_EPS_MAX_CAP = 1.0 / 3.0

PhiFn = Optional[Callable[[float], complex]]


def _pivot_offsets(theta_offset: float, half_width: float, count: int) -> np.ndarray:
    """Candidate offsets on [theta_offset +/- half_width], snapped to the
    power-of-two quantum so anchor + offset is an exact float sum for dyadic
    inputs (keeps translation/scale equivariance bitwise at the endpoints)."""
    unit = _offset_unit(half_width)
    raw = np.linspace(theta_offset - half_width, theta_offset + half_width, count)
    return np.round(raw / unit) * unit


@dataclass(frozen=True)
class CertificateReport:
    """Per-candidate certificate outcome; entries stop at the first failure."""

    mu: float
    entries: tuple[CertificateMargins, ...]
    accepted: bool


@dataclass(frozen=True)
class CIOutput:
    mode: str
    interval: Interval
    pilot: PilotBundle
    accepted_candidates: tuple[float, ...]
    reports: tuple[CertificateReport, ...]
    n: int

    @property
    def contiguous(self) -> bool:
        """Whether the accepted pivots form one run (no gaps); empty is contiguous."""
        idx = [i for i, r in enumerate(self.reports) if r.accepted]
        return not idx or idx[-1] - idx[0] + 1 == len(idx)


def _centered_phi(ecf: EmpiricalCF, t: float, population_cf: PhiFn) -> complex:
    if population_cf is None:
        return ecf.eval_centered(t)
    # Exact-CF test hook: re-anchor the absolute phase so both paths share the
    # offset parametrization.
    return complex(population_cf(t)) * cmath.exp(-1j * t * ecf.anchor)


def _certify_known(
    offset: float,
    mu_abs: float,
    ecf: EmpiricalCF,
    bundle: PilotBundle,
    sigma2: float,
    slacks: tuple[float, ...],
    population_cf: PhiFn,
) -> CertificateReport:
    entries: list[CertificateMargins] = []
    accepted = True
    for t, slack in zip(bundle.freq_grid.frequencies, slacks):
        phi = _centered_phi(ecf, t, population_cf)
        m1 = order1_margin(upsilon_known(phi, t, offset, sigma2), slack)
        entries.append(
            CertificateMargins(
                frequency=t,
                variance_candidate=sigma2,
                order1_margin=m1,
                order2_margin=None,
                passed=m1 <= 0.0,
            )
        )
        if m1 > 0.0:
            accepted = False
            break
    return CertificateReport(mu=mu_abs, entries=tuple(entries), accepted=accepted)


def _unknown_margins_scalar(
    offset: float,
    lam: float,
    t: float,
    phi_t: complex,
    phi_2t: complex,
    d1: float,
    d2: float,
) -> tuple[float, float]:
    u1 = upsilon_unknown(phi_t, t, offset, lam)
    u2 = upsilon_unknown(phi_2t, 2.0 * t, offset, lam)
    return order1_margin(u1, d1), order2_margin(u1, u2, d2)


def _certify_unknown(
    offset: float,
    mu_abs: float,
    ecf: EmpiricalCF,
    bundle: PilotBundle,
    slacks: tuple[tuple[float, float], ...],
    population_cf: PhiFn,
    detail: bool,
) -> CertificateReport:
    freqs = bundle.freq_grid.frequencies
    lams = np.asarray(bundle.variance_grid)
    nv = lams.size
    lam_max = float(lams[-1])

    phi1 = [_centered_phi(ecf, t, population_cf) for t in freqs]
    phi2 = [_centered_phi(ecf, 2.0 * t, population_cf) for t in freqs]

    alive = np.ones(nv, dtype=bool)
    fail_t = np.full(nv, -1, dtype=np.int64)
    fail_m1 = np.zeros(nv)
    fail_m2 = np.zeros(nv)
    for ti, (t, (d1, d2)) in enumerate(zip(freqs, slacks)):
        if 2.0 * lam_max * t * t > 700.0:
            raise ExponentOverflowError(
                f"variance candidate {lam_max!r} overflows at frequency {t!r}"
            )
        rot1 = cmath.exp(-1j * offset * t)
        rot2 = cmath.exp(-2j * offset * t)
        u1 = 3.0 * np.exp(0.5 * lams * t * t) * (phi1[ti] * rot1) - 2.0
        u2 = 3.0 * np.exp(2.0 * lams * t * t) * (phi2[ti] * rot2) - 2.0
        a1 = np.abs(u1)
        m1 = a1 - 1.0 - d1
        m2 = np.abs(u1 * u1 - u2) + a1 * a1 - 1.0 - d2
        failing = alive & ((m1 > 0.0) | (m2 > 0.0))
        if failing.any():
            fail_t[failing] = ti
            fail_m1[failing] = m1[failing]
            fail_m2[failing] = m2[failing]
            alive &= ~failing
        if not alive.any():
            break

    accepted_idx = int(np.argmax(alive)) if alive.any() else -1
    accepted = accepted_idx >= 0

    entries: list[CertificateMargins] = []
    if detail:
        # Sequential semantics: lambdas are scanned in grid order, each until
        # its first failing frequency; the first fully passing lambda ends the
        # scan with its complete row of entries.
        last = accepted_idx if accepted else nv - 1
        for j in range(0, last + (0 if accepted else 1)):
            ti = int(fail_t[j])
            t = freqs[ti]
            entries.append(
                CertificateMargins(
                    frequency=t,
                    variance_candidate=float(lams[j]),
                    order1_margin=float(fail_m1[j]),
                    order2_margin=float(fail_m2[j]),
                    passed=False,
                )
            )
        if accepted:
            lam = float(lams[accepted_idx])
            for t, (d1, d2) in zip(freqs, slacks):
                m1, m2 = _unknown_margins_scalar(
                    offset,
                    lam,
                    t,
                    _centered_phi(ecf, t, population_cf),
                    _centered_phi(ecf, 2.0 * t, population_cf),
                    d1,
                    d2,
                )
                entries.append(
                    CertificateMargins(
                        frequency=t,
                        variance_candidate=lam,
                        order1_margin=m1,
                        order2_margin=m2,
                        passed=(m1 <= 0.0 and m2 <= 0.0),
                    )
                )
    return CertificateReport(mu=mu_abs, entries=tuple(entries), accepted=accepted)


def certify_candidate(
    mu: float,
    ecf: EmpiricalCF,
    bundle: PilotBundle,
    mode: Literal["known", "unknown"],
    constants: PilotConstants,
    population_cf: PhiFn = None,
    detail: bool = True,
) -> CertificateReport:
    """Run the certificate battery for one candidate mean.

    population_cf substitutes an exact CF for the ECF with zero slack (test
    hook). Early-exits on the first failed frequency but records the failing
    margins.
    """
    offset = mu - ecf.anchor
    n = bundle.n_total
    delta = constants.delta
    if mode == "known":
        sigma2 = bundle.variance_grid[0]
        kappa = constants.kappa_for("known")
        slacks = tuple(
            0.0 if population_cf is not None else slack_known(t, sigma2, kappa, n, delta)
            for t in bundle.freq_grid.frequencies
        )
        return _certify_known(offset, mu, ecf, bundle, sigma2, slacks, population_cf)
    if mode != "unknown":
        raise ConstantsError(f"unknown mode {mode!r}")
    kappa = constants.kappa_for("unknown")
    slacks = tuple(
        (0.0, 0.0)
        if population_cf is not None
        else slack_unknown(t, bundle.sigma2_plus, kappa, n, delta)
        for t in bundle.freq_grid.frequencies
    )
    return _certify_unknown(offset, mu, ecf, bundle, slacks, population_cf, detail)


def _assemble(
    mode: str,
    samples_n: int,
    anchor: float,
    pivot_offsets: np.ndarray,
    reports: tuple[CertificateReport, ...],
    bundle: PilotBundle,
) -> CIOutput:
    accepted_idx = [i for i, r in enumerate(reports) if r.accepted]
    accepted = tuple(float(anchor + pivot_offsets[i]) for i in accepted_idx)
    if not accepted_idx:
        interval = Interval.empty_interval()
    else:
        last = pivot_offsets.size - 1
        lo = pivot_offsets[max(accepted_idx[0] - 1, 0)]
        hi = pivot_offsets[min(accepted_idx[-1] + 1, last)]
        interval = Interval(float(anchor + lo), float(anchor + hi))
    return CIOutput(
        mode=mode,
        interval=interval,
        pilot=bundle,
        accepted_candidates=accepted,
        reports=reports,
        n=samples_n,
    )


def ci_known_variance(
    samples: SampleSet,
    sigma2: float,
    constants: PilotConstants,
    population_cf: PhiFn = None,
    bundle: Optional[PilotBundle] = None,
    detail: bool = True,
) -> CIOutput:
    """Known-variance confidence interval."""
    if bundle is None:
        bundle = pilot_bundle(samples, "known", constants, sigma2=sigma2)
    n = bundle.n_total
    ecf = EmpiricalCF(samples, anchor=bundle.anchor)
    j_pieces = max(1, math.ceil(n**0.25 / math.sqrt(1.0 + math.log(n))))
    offsets = _pivot_offsets(bundle.theta_offset, bundle.half_width, j_pieces + 1)
    kappa = constants.kappa_for("known")
    slacks = tuple(
        0.0 if population_cf is not None else slack_known(t, sigma2, kappa, n, constants.delta)
        for t in bundle.freq_grid.frequencies
    )
    reports = tuple(
        _certify_known(
            float(off), float(bundle.anchor + off), ecf, bundle, sigma2, slacks, population_cf
        )
        for off in offsets
    )
    return _assemble("known", samples.n, bundle.anchor, offsets, reports, bundle)


def ci_unknown_variance(
    samples: SampleSet,
    constants: PilotConstants,
    population_cf: PhiFn = None,
    bundle: Optional[PilotBundle] = None,
    detail: bool = True,
) -> CIOutput:
    """Unknown-variance confidence interval (requires eps_max <= 1/3).

    The pilot consumes the first floor(n/2) samples; the certificate ECF is
    built from the remaining half only.
    """
    if constants.eps_max > UNKNOWN_EPS_MAX_CAP + 1e-12:
        raise ConstantsError("unknown-variance mode requires eps_max <= 1/3")
    if bundle is None:
        bundle = pilot_bundle(samples, "unknown", constants)
    n = bundle.n_total
    half = n // 2
    cert_samples = SampleSet(samples.values[half:], samples.seed_provenance)
    ecf = EmpiricalCF(cert_samples, anchor=bundle.anchor)

    sigma_plus = math.sqrt(bundle.sigma2_plus)
    step = constants.pivot_step * sigma_plus * n ** (-0.125)
    count = max(2, math.ceil(2.0 * bundle.half_width / step) + 1)
    offsets = _pivot_offsets(bundle.theta_offset, bundle.half_width, count)
    kappa = constants.kappa_for("unknown")
    slacks = tuple(
        (0.0, 0.0)
        if population_cf is not None
        else slack_unknown(t, bundle.sigma2_plus, kappa, n, constants.delta)
        for t in bundle.freq_grid.frequencies
    )
    reports = tuple(
        _certify_unknown(
            float(off),
            float(bundle.anchor + off),
            ecf,
            bundle,
            slacks,
            population_cf,
            detail,
        )
        for off in offsets
    )
    return _assemble("unknown", samples.n, bundle.anchor, offsets, reports, bundle)


def ci_output_to_dict(out: CIOutput) -> dict:
    """JSON-ready dict in the documented response schema."""
    interval = {
        "lower": None if out.interval.empty else out.interval.lower,
        "upper": None if out.interval.empty else out.interval.upper,
        "empty": out.interval.empty,
    }
    pilot = {
        "theta_tilde": out.pilot.theta_tilde,
        "sigma2_tilde": out.pilot.sigma2_tilde,
        "sigma2_minus": out.pilot.sigma2_minus,
        "sigma2_plus": out.pilot.sigma2_plus,
        "pilot_interval": {
            "lower": out.pilot.pilot_interval.lower,
            "upper": out.pilot.pilot_interval.upper,
        },
    }
    reports = [
        {
            "mu": r.mu,
            "accepted": r.accepted,
            "entries": [
                {
                    "t": e.frequency,
                    "lambda": e.variance_candidate,
                    "order1_margin": e.order1_margin,
                    "order2_margin": e.order2_margin,
                    "passed": e.passed,
                }
                for e in r.entries
            ],
        }
        for r in out.reports
    ]
    return {
        "mode": out.mode,
        "n": out.n,
        "interval": interval,
        "pilot": pilot,
        "accepted_candidates": list(out.accepted_candidates),
        "contiguous": out.contiguous,
        "reports": reports,
    }
