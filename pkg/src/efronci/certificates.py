"""Characteristic-function certificates and closed-form gap bounds.

A candidate mean mu (and variance lambda in unknown-variance mode) is accepted
when the standardized ECF residual

    known:   Upsilon_n(t; mu)        = 2 e^{-i mu t + sigma2 t^2/2} phi_n(t) - 1
    unknown: Upsilon_n(t; mu,lambda) = 3 e^{-i mu t + lambda t^2/2} phi_n(t) - 2

stays within 1 + slack at every grid frequency. At the truth the residual is a
characteristic function (modulus <= 1); far from the truth its modulus provably
exceeds 1 by the gap bounds at the bottom of this module.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "CertificateError",
    "ExponentOverflowError",
    "CertificateMargins",
    "upsilon_known",
    "upsilon_unknown",
    "slack_known",
    "slack_unknown",
    "order1_margin",
    "order2_margin",
    "cosine_acceptance",
    "order3_residuals",
    "toeplitz_psd_check",
    "quadratic_gap_lb",
    "quartic_gap_check",
    "disk_distance",
]

# exp(x) overflows double precision near x ~ 709; refuse a bit earlier.
EXP_GUARD = 700.0


class CertificateError(ValueError):
    """Invalid certificate inputs."""


class ExponentOverflowError(CertificateError):
    """A Gaussian compensation exponent exceeded the overflow guard."""


def _guard(exponent: float) -> float:
    if exponent > EXP_GUARD:
        raise ExponentOverflowError(
            f"compensation exponent {exponent!r} exceeds {EXP_GUARD}; "
            "frequency too large for this variance"
        )
    return exponent


@dataclass(frozen=True)
class CertificateMargins:
    """Signed margins at one (frequency, variance candidate) pair.

    A margin is (certified quantity) - (threshold); passed means every margin
    present is <= 0. order2_margin is None in known-variance mode.
    """

    frequency: float
    variance_candidate: float
    order1_margin: float
    order2_margin: Optional[float]
    passed: bool

    def __post_init__(self) -> None:
        ok = self.order1_margin <= 0.0 and (
            self.order2_margin is None or self.order2_margin <= 0.0
        )
        if self.passed != ok:
            raise CertificateError("passed flag inconsistent with margins")


def upsilon_known(phi_value: complex, t: float, mu: float, sigma2: float) -> complex:
    """Known-variance residual 2 e^{-i mu t + sigma2 t^2/2} phi - 1."""
    expo = _guard(0.5 * sigma2 * t * t)
    return 2.0 * cmath.exp(complex(expo, -mu * t)) * phi_value - 1.0


def upsilon_unknown(phi_value: complex, t: float, mu: float, lam: float) -> complex:
    """Unknown-variance residual 3 e^{-i mu t + lambda t^2/2} phi - 2."""
    expo = _guard(0.5 * lam * t * t)
    return 3.0 * cmath.exp(complex(expo, -mu * t)) * phi_value - 2.0


def slack_known(t: float, sigma2: float, kappa: float, n: int, delta: float) -> float:
    """Known-variance acceptance slack Delta(t) = 2 kappa e^{sigma2 t^2} sqrt(8 log(10/delta)/n)."""
    if not (0 < delta < 1):
        raise CertificateError("delta must lie in (0, 1)")
    expo = _guard(sigma2 * t * t)
    return 2.0 * kappa * math.exp(expo) * math.sqrt(8.0 * math.log(10.0 / delta) / n)


def slack_unknown(
    t: float, sigma2_plus: float, kappa: float, n: int, delta: float
) -> tuple[float, float]:
    """Unknown-variance slacks (Delta_1(t), Delta_2(t)).

    Delta_1(t) = 6 kappa e^{sigma2_plus t^2}       sqrt(16 log(10/delta)/n)
    Delta_2(t) = 81 kappa e^{5 sigma2_plus t^2/2}  sqrt(16 log(10/delta)/n)

    The 16 (vs 8) under the root accounts for the certificate ECF using half
    the sample.
    """
    if not (0 < delta < 1):
        raise CertificateError("delta must lie in (0, 1)")
    root = math.sqrt(16.0 * math.log(10.0 / delta) / n)
    e1 = _guard(sigma2_plus * t * t)
    e2 = _guard(2.5 * sigma2_plus * t * t)
    return 6.0 * kappa * math.exp(e1) * root, 81.0 * kappa * math.exp(e2) * root


def order1_margin(upsilon: complex, slack: float) -> float:
    """|Upsilon| - (1 + slack); acceptance is margin <= 0."""
    return abs(upsilon) - 1.0 - slack


def order2_margin(upsilon_t: complex, upsilon_2t: complex, slack2: float) -> float:
    """|Upsilon(t)^2 - Upsilon(2t)| + |Upsilon(t)|^2 - (1 + slack2)."""
    return abs(upsilon_t * upsilon_t - upsilon_2t) + abs(upsilon_t) ** 2 - 1.0 - slack2


def cosine_acceptance(
    phi_value: complex, t: float, mu: float, sigma2: float, slack: float
) -> bool:
    """Known-variance acceptance in cosine form; equivalent to order1_margin <= 0.

    With R e^{i psi} = e^{sigma2 t^2/2} phi_n(t), the modulus condition
    |2 R e^{i(psi - mu t)} - 1| <= 1 + slack rearranges to

        cos(t mu - psi) >= (1 - (1 + slack)^2 + 4 R^2) / (4 R).

    Kept as a cross-check on the modulus path.
    """
    expo = _guard(0.5 * sigma2 * t * t)
    w = math.exp(expo) * phi_value
    r = abs(w)
    if r == 0.0:
        # Residual is exactly -1; always within 1 + slack.
        return True
    threshold = (1.0 - (1.0 + slack) ** 2 + 4.0 * r * r) / (4.0 * r)
    return math.cos(t * mu - cmath.phase(w)) >= threshold


def order3_residuals(
    u_t: complex, u_2t: complex, u_3t: complex
) -> tuple[float, float, float, float]:
    """Nested PSD residuals of the order-3 Toeplitz matrix of CF values.

    Inputs are values of a candidate characteristic function at t, 2t, 3t
    (z_0 = 1 implicitly). Returns the four residuals

        r1 = 1 - |z1|^2
        r2 = (1 - |z1|^2)^2 - |z1^2 - z2|^2
        r3 = (1 - |z1|^2)(1 - |z2|^2) - |z1 z2 - z3|^2
        r4 = det T_3

    r2, r3 are the order-2 principal minors of T_3 = Toeplitz(1, z1, z2, z3)
    containing rows {0,1,2} and {0,1,3}; r4 is the full determinant, written
    out in the expanded real form. Genuine CFs make all four nonnegative
    (Bochner); point masses make all four vanish.
    """
    z1, z2, z3 = complex(u_t), complex(u_2t), complex(u_3t)
    a1 = abs(z1) ** 2
    a2 = abs(z2) ** 2
    a3 = abs(z3) ** 2
    r1 = 1.0 - a1
    r2 = r1 * r1 - abs(z1 * z1 - z2) ** 2
    r3 = r1 * (1.0 - a2) - abs(z1 * z2 - z3) ** 2
    r4 = (
        1.0
        - 3.0 * a1
        - 2.0 * a2
        - a3
        + (a1 - a2) ** 2
        + a1 * a3
        + 4.0 * (z1 * z1 * z2.conjugate()).real
        + 4.0 * (z1 * z2 * z3.conjugate()).real
        - 2.0 * (z1 * z1 * z1 * z3.conjugate()).real
        - 2.0 * (z1 * z2.conjugate() * z2.conjugate() * z3).real
    )
    return r1, r2, r3, r4


def toeplitz_psd_check(z: Sequence[complex], m: int) -> tuple[bool, float]:
    """Minimum eigenvalue test of the (m+1) x (m+1) Hermitian Toeplitz matrix.

    z = (z_0, z_1, ..., z_m) are CF values at (0, t, 2t, ..., m t); z_0 must be
    1 within 1e-9. Passes when the minimum eigenvalue is >= -1e-10 * (m + 1).
    """
    if m < 0 or len(z) < m + 1:
        raise CertificateError(f"need z_0..z_{m}, got {len(z)} values")
    if abs(complex(z[0]) - 1.0) > 1e-9:
        raise CertificateError("z_0 must equal 1")
    mat = np.empty((m + 1, m + 1), dtype=np.complex128)
    for i in range(m + 1):
        for j in range(m + 1):
            mat[i, j] = complex(z[j - i]) if j >= i else complex(z[i - j]).conjugate()
    min_eig = float(np.linalg.eigvalsh(mat)[0])
    return min_eig >= -1e-10 * (m + 1), min_eig


def quadratic_gap_lb(b: float, eps: float) -> float:
    """Known-variance separation lower bound 1 + 2 (b/pi)^2 - 4 eps.

    For |b| <= pi this lower-bounds the exact distance
    sqrt(1 - 4 (1-eps) cos b + 4 (1-eps)^2) - 2 eps from the residual disk to
    the unit circle, which is what forces rejection of a mismatched mean at
    the wrap-around frequency.
    """
    return 1.0 + 2.0 * (b / math.pi) ** 2 - 4.0 * eps


def quartic_gap_check(t: float, r: float, lam: float, sigma2: float) -> tuple[float, float]:
    """Unknown-variance separation: certified value vs 1 + (r t / pi)^4.

    Evaluates both certificate orders for the clean Gaussian CF
    phi(s) = e^{-sigma2 s^2/2} against candidate (mu = r, lambda), returning

        (max(|Upsilon(t)|, |Upsilon(t)^2 - Upsilon(2t)| + |Upsilon(t)|^2),
         1 + (r t / pi)^4).

    The first component is provably >= the second for |r t| <= pi and any
    lambda, which is the engine behind the unknown-variance rejection radius.
    """
    phi_t = cmath.exp(-0.5 * sigma2 * t * t)
    phi_2t = cmath.exp(-2.0 * sigma2 * t * t)
    u1 = upsilon_unknown(phi_t, t, r, lam)
    u2 = upsilon_unknown(phi_2t, 2.0 * t, r, lam)
    lhs = max(abs(u1), abs(u1 * u1 - u2) + abs(u1) ** 2)
    return lhs, 1.0 + (r * t / math.pi) ** 4


def disk_distance(eps_max: float, eps: float, angle: float) -> float:
    """Distance from the eps_max acceptance disk to the rotated residual disk.

    Closed form: ( sqrt((eps_max - eps)^2 + 4 (1-eps_max)(1-eps) sin^2(angle/2))
                   - (eps_max + eps) )_+ .

    Zero iff the two disks intersect; strictly positive distance at angle pi
    is what separates distinct candidate means.
    """
    if not (0 <= eps <= eps_max < 1):
        raise CertificateError("need 0 <= eps <= eps_max < 1")
    s = math.sin(0.5 * angle)
    d = math.sqrt(
        (eps_max - eps) ** 2 + 4.0 * (1.0 - eps_max) * (1.0 - eps) * s * s
    ) - (eps_max + eps)
    return max(0.0, d)
