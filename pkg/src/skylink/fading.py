"""Rician small-scale fading: PDF, K-factor conversions, and sampling.

The amplitude density is evaluated in log space internally (with log I0 of
the modified Bessel function) so large LoS-to-scatter ratios do not overflow
before the final exponentiation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# Switch point between the I0 power series and its asymptotic expansion.
_I0_ASYMPTOTIC_CUTOFF = 15.0
_I0_RELATIVE_TOL = 1e-16


@dataclass(frozen=True)
class RicianParams:
    """Rician amplitude parameters.

    Attributes:
        s: field strength of the LoS component, linear amplitude, >= 0.
        delta: standard deviation of each scattered quadrature component,
            linear amplitude, > 0.
    """

    s: float
    delta: float

    def __post_init__(self):
        if not (math.isfinite(self.s) and math.isfinite(self.delta)):
            raise DomainError(
                f"s and delta must be finite, got s={self.s}, delta={self.delta}"
            )
        if self.s < 0.0:
            raise DomainError(f"s must be >= 0, got {self.s}")
        if self.delta <= 0.0:
            raise DomainError(f"delta must be > 0, got {self.delta}")


def _log_bessel_i0(x: float) -> float:
    """log I0(x) for x >= 0, accurate across both evaluation regimes."""
    if x <= _I0_ASYMPTOTIC_CUTOFF:
        # Power series sum_k (x^2/4)^k / (k!)^2, stopped at relative 1e-16.
        term = 1.0
        total = 1.0
        k = 0
        q = x * x / 4.0
        while True:
            k += 1
            term *= q / (k * k)
            total += term
            if term < _I0_RELATIVE_TOL * total:
                return math.log(total)
    # Asymptotic form e^x / sqrt(2 pi x) * sum_k a_k / x^k with
    # a_0 = 1, a_k = a_{k-1} (2k - 1)^2 / (8k); summed until terms stop
    # shrinking (the series is divergent but its partial sums reach
    # ~e^{-2x} relative accuracy at the smallest term).
    coeff = 1.0
    total = 1.0
    prev = math.inf
    k = 0
    while True:
        k += 1
        coeff *= (2 * k - 1) ** 2 / (8.0 * k)
        term = coeff / x**k
        if term >= prev or term < _I0_RELATIVE_TOL * total:
            if term < prev:
                total += term
            break
        total += term
        prev = term
    return x - 0.5 * math.log(2.0 * math.pi * x) + math.log(total)


def bessel_i0(x: float) -> float:
    """Modified Bessel function of the first kind, order zero.

    Even in x. Evaluated by power series up to |x| = 15 and by the
    asymptotic expansion beyond, where the direct series would need the
    explicit exponential that this function exists to keep in log space
    for density ratios.
    """
    if not math.isfinite(x):
        raise DomainError(f"x must be finite, got {x!r}")
    return math.exp(_log_bessel_i0(abs(x)))


def rician_pdf(params: RicianParams, r: float) -> float:
    """Rician amplitude density at r >= 0.

    f(r) = (r / delta^2) exp(-(r^2 + s^2) / (2 delta^2)) I0(r s / delta^2)

    s = 0 reduces to the Rayleigh density; large K concentrates the mass
    near s with an approximately Gaussian shape of width delta.
    """
    if not math.isfinite(r):
        raise DomainError(f"r must be finite, got {r!r}")
    if r < 0.0:
        raise DomainError(f"r must be >= 0, got {r}")
    if r == 0.0:
        return 0.0
    s, delta = params.s, params.delta
    var = delta * delta
    log_f = (
        math.log(r)
        - math.log(var)
        - (r * r + s * s) / (2.0 * var)
        + _log_bessel_i0(r * s / var)
    )
    return math.exp(log_f)


def k_factor(params: RicianParams) -> float:
    """Rician K-factor s^2 / (2 delta^2), dimensionless power ratio."""
    return params.s * params.s / (2.0 * params.delta * params.delta)


def k_factor_db(params: RicianParams) -> float:
    """K-factor in dB; K = 0 (pure Rayleigh) maps to -inf."""
    k = k_factor(params)
    if k == 0.0:
        return -math.inf
    return 10.0 * math.log10(k)


def params_from_k(k: float, mean_power: float = 1.0) -> RicianParams:
    """RicianParams with the given linear K-factor and mean power E[r^2].

    Inverts K = s^2 / (2 delta^2) under s^2 + 2 delta^2 = mean_power:
    s^2 = mean_power K / (K + 1), 2 delta^2 = mean_power / (K + 1).
    K = 0 gives the Rayleigh special case.
    """
    if not (math.isfinite(k) and k >= 0.0):
        raise DomainError(f"k must be finite and >= 0, got {k!r}")
    if not (math.isfinite(mean_power) and mean_power > 0.0):
        raise DomainError(f"mean_power must be > 0, got {mean_power!r}")
    s = math.sqrt(mean_power * k / (k + 1.0))
    delta = math.sqrt(mean_power / (2.0 * (k + 1.0)))
    return RicianParams(s=s, delta=delta)


def rician_pdf_kdb(k_db: float, s: float, r: float) -> float:
    """Rician amplitude density parameterized by K in dB and s.

    Substituting delta^2 = s^2 / (2 K) with K = 10^(k_db / 10) into the
    amplitude density gives

        f(r) = (2 r K / s^2) exp(-K (r^2 + s^2) / s^2) I0(2 r K / s)

    and agrees with rician_pdf for the corresponding (s, delta).
    """
    if not (math.isfinite(k_db) and math.isfinite(s) and math.isfinite(r)):
        raise DomainError(
            f"arguments must be finite, got k_db={k_db!r}, s={s!r}, r={r!r}"
        )
    if s <= 0.0:
        raise DomainError(f"s must be > 0, got {s}")
    if r < 0.0:
        raise DomainError(f"r must be >= 0, got {r}")
    if r == 0.0:
        return 0.0
    k = 10.0 ** (k_db / 10.0)
    s_sq = s * s
    log_f = (
        math.log(2.0 * r * k / s_sq)
        - k * (r * r + s_sq) / s_sq
        + _log_bessel_i0(2.0 * r * k / s)
    )
    return math.exp(log_f)


def sample_rician(params: RicianParams, n: int, seed: int) -> np.ndarray:
    """Draw n Rician amplitudes deterministically for the given seed.

    Each draw is sqrt((s + delta g1)^2 + (delta g2)^2) with g1, g2
    independent standard normal variates from a dedicated generator.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    g1 = rng.standard_normal(n)
    g2 = rng.standard_normal(n)
    return np.sqrt((params.s + params.delta * g1) ** 2 + (params.delta * g2) ** 2)
