"""Expected exponential growth rates, exact or by quadrature.

All functions return the growth rate G per time step in nats; the long-term
average return per step is R = e^G - 1. Ruin (a reachable outcome with a
non-positive wealth factor) is encoded as G = -inf rather than an exception
so that maximizers treat it as dominated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .assets import (
    BinaryAsset,
    LognormalAsset,
    OutcomeDistribution,
    TwoScaleAsset,
    binary_compound_distribution,
    two_scale_compound_distribution,
)
from .mechanics import NO_FEES, FeeSchedule, log_wealth_factor

__all__ = [
    "GrowthEstimate",
    "growth_binary",
    "growth_two_scale",
    "growth_lognormal",
    "growth_distribution",
    "long_term_return",
    "QuadratureError",
]

# Beyond this many steps the exact binomial sum gives way to the matched
# lognormal surrogate (the compound log-return is normal to high accuracy).
_EXACT_T_LIMIT = 10_000

# Integration half-width in standard deviations for the lognormal quadrature.
_SPAN = 10.0


class QuadratureError(RuntimeError):
    """Numerical integration failed to reach the requested tolerance."""


@dataclass(frozen=True)
class GrowthEstimate:
    """Growth per step G, the equivalent per-step return R, optional stderr."""

    G: float
    R: float
    stderr: float | None = None

    def __post_init__(self):
        if math.isfinite(self.G) and abs(self.R - math.expm1(self.G)) > 1e-12:
            raise ValueError("R must equal exp(G) - 1")

    @classmethod
    def from_growth(cls, G: float, stderr: float | None = None) -> "GrowthEstimate":
        return cls(G=G, R=math.expm1(G) if math.isfinite(G) else -1.0, stderr=stderr)


def long_term_return(G: float) -> float:
    """Average per-step return equivalent to growth rate G."""
    return math.expm1(G)


def growth_distribution(
    dist: OutcomeDistribution, f: float, T: int, fee: FeeSchedule = NO_FEES
) -> float:
    """Per-step growth for a known compound-return distribution over T steps."""
    with np.errstate(divide="ignore"):
        log_gross = np.log1p(dist.returns)
    lf = log_wealth_factor(f, log_gross, fee)
    mask = dist.probs > 0.0
    if np.any(~np.isfinite(lf[mask])):
        return -math.inf
    return float(np.dot(dist.probs[mask], lf[mask])) / T


def growth_binary(
    asset: BinaryAsset, f: float, T: int = 1, fee: FeeSchedule = NO_FEES
) -> float:
    """Exact growth per step of a binary asset rebalanced every T steps."""
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"f must be in [0, 1], got {f}")
    if int(T) != T or T < 1:
        raise ValueError(f"T must be an integer >= 1, got {T}")
    T = int(T)
    if f == 0.0:
        return 0.0
    if T > _EXACT_T_LIMIT:
        m = _binary_log_mean(asset)
        v = _binary_log_var(asset)
        return growth_lognormal(LognormalAsset(m=T * m, D=T * v), f, fee) / T
    return growth_distribution(binary_compound_distribution(asset, T), f, T, fee)


def growth_two_scale(
    asset: TwoScaleAsset, f: float, T: int = 1, fee: FeeSchedule = NO_FEES
) -> float:
    """Growth per step of a two-scale asset, averaged over window phase."""
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"f must be in [0, 1], got {f}")
    if f == 0.0:
        return 0.0
    total = 0.0
    for weight, dist in two_scale_compound_distribution(asset, T):
        if weight == 0.0:
            continue
        g = growth_distribution(dist, f, T, fee)
        if g == -math.inf:
            return -math.inf
        total += weight * g
    return total


def growth_lognormal(
    asset: LognormalAsset, f: float, fee: FeeSchedule = NO_FEES
) -> float:
    """Growth per step for lognormal returns, by adaptive quadrature.

    Integrates the log wealth factor against the Normal(m, D) density of the
    log return over m +- 10 sqrt(D), with the fee kink at eta = 0 as a
    mandatory breakpoint.
    """
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"f must be in [0, 1], got {f}")
    if f == 0.0:
        return 0.0
    m, d = asset.m, asset.D
    s = math.sqrt(d)
    lo, hi = m - _SPAN * s, m + _SPAN * s

    def integrand(eta):
        rho = math.exp(-0.5 * (eta - m) ** 2 / d) / math.sqrt(2.0 * math.pi * d)
        return rho * log_wealth_factor(f, eta, fee)

    points = [0.0] if lo < 0.0 < hi else None
    val, err = integrate.quad(
        integrand, lo, hi, points=points, limit=200, epsabs=1e-13, epsrel=1e-13
    )
    if not math.isfinite(val) or err > 1e-9 * max(1.0, abs(val)):
        raise QuadratureError(
            f"growth integral did not converge (estimate {val}, error {err})"
        )
    return val


def _binary_log_mean(asset: BinaryAsset) -> float:
    p = asset.p_up
    return p * math.log1p(asset.r1) + (1.0 - p) * math.log1p(-asset.r1)


def _binary_log_var(asset: BinaryAsset) -> float:
    p = asset.p_up
    up, dn = math.log1p(asset.r1), math.log1p(-asset.r1)
    m = p * up + (1.0 - p) * dn
    return p * (up - m) ** 2 + (1.0 - p) * (dn - m) ** 2
