"""Maximization of growth over the investment fraction and the rebalancing
period, plus the closed-form perturbative approximations.

The numerical maximizer is deliberately derivative-free: transaction fees
make G(f) continuous but not smooth wherever an outcome's sign flips, so a
coarse scan picks the basin and golden-section search refines it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .assets import (
    BinaryAsset,
    GarchAsset,
    LognormalAsset,
    StudentAsset,
    TwoScaleAsset,
    binary_compound_distribution,
    two_scale_compound_distribution,
)
from .growth import growth_distribution, growth_lognormal
from .mechanics import NO_FEES, FeeSchedule, log_wealth_factor

__all__ = [
    "Optimum",
    "maximize_fraction",
    "maximize_period",
    "approx_f1",
    "approx_f_period",
    "threshold_fees",
    "lognormal_closed_forms",
]

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_SCAN_POINTS = 101
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(80)


@dataclass(frozen=True)
class Optimum:
    """Maximizer of per-step growth; T_star is set by period searches only."""

    f_star: float
    G_star: float
    T_star: int | None = None


def maximize_fraction(growth_fn, tol: float = 1e-8):
    """Maximize growth_fn over f in [0, 1]; returns (f_star, G_star).

    A 101-point scan locates the best coarse cell, guarding against the
    fee-induced kinks; golden-section search then narrows the bracket to tol.
    If every fraction is ruinous the convention (f_star, G_star) = (0, 0)
    applies, matching G(0) = 0.
    """
    grid = np.linspace(0.0, 1.0, _SCAN_POINTS)
    vals = np.array([growth_fn(f) for f in grid])
    if not np.any(np.isfinite(vals)):
        return 0.0, 0.0
    i = int(np.nanargmax(np.where(np.isfinite(vals), vals, -np.inf)))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, _SCAN_POINTS - 1)]
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = growth_fn(c), growth_fn(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = growth_fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = growth_fn(d)
    f_best = (a + b) / 2.0
    g_best = growth_fn(f_best)
    # the scanned vertex may still win if the basin is extremely narrow
    if vals[i] > g_best:
        return float(grid[i]), float(vals[i])
    return float(f_best), float(g_best)


def maximize_period(model, fee: FeeSchedule, T_max: int = 1000, tol: float = 1e-8):
    """Exhaustive search of the rebalancing period T = 1..T_max.

    For each T the growth is maximized over f; the returned Optimum carries
    the best (T, f) pair. Ties break toward smaller T. The search is
    deliberately exhaustive: the known T ~ alpha^(2/3) scaling is a test
    target, not an input.
    """
    if int(T_max) != T_max or T_max < 1:
        raise ValueError(f"T_max must be an integer >= 1, got {T_max}")
    best = None
    for T in range(1, int(T_max) + 1):
        growth_fn = _growth_fn_for(model, T, fee)
        f_star, g_star = maximize_fraction(growth_fn, tol)
        if best is None or g_star > best.G_star:
            best = Optimum(f_star=f_star, G_star=g_star, T_star=T)
    return best


def _growth_fn_for(model, T: int, fee: FeeSchedule):
    """Per-step growth as a function of f, with the T-dependent setup hoisted."""
    if isinstance(model, BinaryAsset):
        dist = binary_compound_distribution(model, T)
        return lambda f: growth_distribution(dist, f, T, fee)
    if isinstance(model, TwoScaleAsset):
        pairs = two_scale_compound_distribution(model, T)
        pairs = [(w, d) for w, d in pairs if w > 0.0]

        def growth_fn(f):
            total = 0.0
            for w, d in pairs:
                g = growth_distribution(d, f, T, fee)
                if g == -math.inf:
                    return -math.inf
                total += w * g
            return total

        return growth_fn
    if isinstance(model, LognormalAsset):
        return _lognormal_window_growth(model, T, fee)
    if isinstance(model, (StudentAsset, GarchAsset)):
        raise TypeError(
            f"{type(model).__name__} has no exact distribution; "
            "use the Monte-Carlo period sweep instead"
        )
    raise TypeError(f"unsupported model type {type(model).__name__}")


def _lognormal_window_growth(model: LognormalAsset, T: int, fee: FeeSchedule):
    """Fast fixed-node quadrature of per-step growth over a T-step window.

    The compound log-return over T steps is Normal(T*m, T*D) exactly, so the
    integral is the single-step one with scaled parameters. Gauss-Legendre
    panels split at the fee kink replace adaptive quadrature inside the T
    loop; agreement with growth_lognormal is checked in the test suite.
    """
    m, d = T * model.m, T * model.D
    s = math.sqrt(d)
    lo, hi = m - 10.0 * s, m + 10.0 * s
    xs, ws = [], []
    breaks = sorted({lo, 0.0, hi}) if lo < 0.0 < hi else [lo, hi]
    for a, b in zip(breaks[:-1], breaks[1:]):
        xs.append(0.5 * (b - a) * _GL_NODES + 0.5 * (b + a))
        ws.append(0.5 * (b - a) * _GL_WEIGHTS)
    eta = np.concatenate(xs)
    rho = np.exp(-0.5 * (eta - m) ** 2 / d) / math.sqrt(2.0 * math.pi * d)
    weight = np.concatenate(ws) * rho

    def growth_fn(f):
        if f == 0.0:
            return 0.0
        return float(np.dot(weight, log_wealth_factor(f, eta, fee))) / T

    return growth_fn


def _clamp01(x: float):
    return min(1.0, max(0.0, x)), (x < 0.0 or x > 1.0)


def approx_f1(P1: float, r1: float, alpha: float, return_clamped: bool = False):
    """First-order optimal fraction with fees, (2*P1 - alpha)/(r1 - 2*alpha).

    Valid for r1 > 2*alpha; the result is clamped to [0, 1] and the clamp
    can be reported with return_clamped=True.
    """
    if r1 <= 2.0 * alpha:
        raise ValueError(f"requires r1 > 2*alpha, got r1={r1}, alpha={alpha}")
    value, clamped = _clamp01((2.0 * P1 - alpha) / (r1 - 2.0 * alpha))
    return (value, clamped) if return_clamped else value


def approx_f_period(
    T: int, P1: float, r1: float, alpha: float, return_clamped: bool = False
):
    """Optimal fraction for rebalancing every T in {2, 3, 4} turns.

    All three reduce to 2*P1/r1 as alpha -> 0.
    """
    if T == 2:
        num = 8.0 * P1 - alpha * (2.0 + r1)
        den = 4.0 * r1 - 2.0 * alpha * (2.0 + r1)
    elif T == 3:
        num = 2.0 * P1 - alpha / 2.0
        den = r1 - 2.0 * alpha
    elif T == 4:
        num = 32.0 * P1 - 3.0 * alpha * (2.0 + r1)
        den = 16.0 * r1 - 6.0 * alpha * (2.0 + r1)
    else:
        raise ValueError(f"closed form exists for T in {{2, 3, 4}}, got {T}")
    if den <= 0.0:
        raise ValueError(f"denominator not positive for T={T}, alpha={alpha}")
    value, clamped = _clamp01(num / den)
    return (value, clamped) if return_clamped else value


def threshold_fees(P1: float, r1: float):
    """Fee levels at which longer rebalancing periods start to pay.

    Returns (alpha_x, alpha_y, alpha_z):
      alpha_x - rebalancing every turn and every other turn break even,
      alpha_y - crude estimate of the same crossover (fee comparable to the
                per-turn growth advantage),
      alpha_z - periods two and four break even.
    Requires 0 < P1 < r1/2 (interior optimum on the short scale).
    """
    if not 0.0 < P1 < r1 / 2.0:
        raise ValueError(f"requires 0 < P1 < r1/2, got P1={P1}, r1={r1}")
    alpha_x = 2.0 * r1 * P1 * (r1 - 2.0 * P1) / (2.0 - r1)
    alpha_y = 2.0 * P1 * (r1 - 2.0 * P1)
    alpha_z = 16.0 * P1 * r1 * (r1 - 2.0 * P1) / (2.0 + r1)
    return alpha_x, alpha_y, alpha_z


def lognormal_closed_forms(
    m: float, D: float, alpha: float, integer_T: bool = False
):
    """Perturbative optimum for lognormal returns: (f_star, G_star, T_star).

    f_star  = 1/2 + m/D + alpha*m*sqrt(8/(pi D^3))
    G_star  = G*(0) - alpha*(1/4 - m^2/D^2)*sqrt(2D/pi)
    T_star  = (alpha^(2/3)/D)*sqrt(8/pi)*(1/4 - m^2/D^2)^(-2/3)

    Valid for |m| < D/2 (interior optimum) and small D. T_star is the
    continuous-time value; integer_T=True rounds to the nearest integer >= 1.
    """
    if D <= 0.0:
        raise ValueError(f"D must be positive, got {D}")
    if abs(m) >= D / 2.0:
        raise ValueError(f"requires |m| < D/2, got m={m}, D={D}")
    q = 0.25 - (m / D) ** 2
    f_star = 0.5 + m / D + alpha * m * math.sqrt(8.0 / (math.pi * D**3))
    g0 = D / 2.0 * (0.5 + m / D) ** 2 - D**2 / 4.0 * q**2
    g_star = g0 - alpha * q * math.sqrt(2.0 * D / math.pi)
    t_star = alpha ** (2.0 / 3.0) / D * math.sqrt(8.0 / math.pi) * q ** (-2.0 / 3.0)
    if integer_T:
        t_star = max(1, round(t_star))
    return f_star, g_star, t_star
