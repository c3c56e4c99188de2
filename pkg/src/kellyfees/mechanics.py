"""Fee-aware portfolio arithmetic.

A transfer of magnitude |x| leaves the source side whole while the
destination receives (1-alpha)|x|; the fee alpha|x| is skimmed in transit.
This single rule reproduces the standard sell/buy transfer volumes from a
balanced portfolio and extends them to the unbalanced states that partial
rebalancing produces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FeeSchedule",
    "NO_FEES",
    "PortfolioState",
    "Strategy",
    "required_transfer",
    "rebalance",
    "wealth_factor_full_rebalance",
    "log_wealth_factor",
]


@dataclass(frozen=True)
class FeeSchedule:
    """Proportional transaction fee: moving volume |X| costs alpha*|X|."""

    alpha: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"alpha must be in [0, 1), got {self.alpha}")


NO_FEES = FeeSchedule(0.0)


@dataclass(frozen=True)
class PortfolioState:
    """Total wealth and the part of it held in the risky asset."""

    total: float
    invested: float

    def __post_init__(self):
        if not self.total > 0.0:
            raise ValueError(f"total must be positive, got {self.total}")
        if not 0.0 <= self.invested <= self.total * (1.0 + 1e-12):
            raise ValueError(
                f"invested must lie in [0, total], got {self.invested} of {self.total}"
            )

    @property
    def fraction(self) -> float:
        return self.invested / self.total


@dataclass(frozen=True)
class Strategy:
    """Target fraction f, rebalancing period T, partial-transfer weight eps."""

    f: float
    T: int = 1
    eps: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.f <= 1.0:
            raise ValueError(f"f must be in [0, 1], got {self.f}")
        if int(self.T) != self.T or self.T < 1:
            raise ValueError(f"T must be an integer >= 1, got {self.T}")
        if not 0.0 < self.eps <= 1.0:
            raise ValueError(f"eps must be in (0, 1], got {self.eps}")


def required_transfer(state: PortfolioState, f: float, fee: FeeSchedule) -> float:
    """Signed volume X restoring invested/total = f after fees.

    X > 0 moves wealth from the asset to cash, X < 0 the other way.
    Boundary targets f = 0 and f = 1 return 0: a portfolio at a boundary
    stays there without trading, which is the only way those targets arise.
    """
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"f must be in [0, 1], got {f}")
    if f == 0.0 or f == 1.0:
        return 0.0
    a = fee.alpha
    excess = state.invested - f * state.total
    denom = 1.0 - a * f if excess >= 0.0 else 1.0 - a * (1.0 - f)
    x = excess / denom
    if state.total - a * abs(x) <= 0.0:
        raise ValueError("transfer fee would exhaust the portfolio")
    return x


def rebalance(
    state: PortfolioState, f: float, fee: FeeSchedule, eps: float = 1.0
) -> PortfolioState:
    """Transfer eps times the required volume toward the target fraction.

    eps = 1 lands exactly on invested/total = f; eps < 1 moves part way.
    """
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must be in (0, 1], got {eps}")
    x = eps * required_transfer(state, f, fee)
    paid = fee.alpha * abs(x)
    total = state.total - paid
    invested = state.invested - x if x >= 0.0 else state.invested - (1.0 - fee.alpha) * x
    if total <= 0.0:
        raise ValueError("rebalancing fee bankrupted the portfolio")
    return PortfolioState(total=total, invested=min(invested, total))


def wealth_factor_full_rebalance(f, r, fee: FeeSchedule):
    """Net wealth multiplier for one balanced -> returns -> rebalanced cycle.

    Equals 1 + f*r - alpha*f*(1-f)*|r| / (1 - alpha*chi) with chi = f for
    gains and 1-f for losses; evaluated in the algebraically identical form
    1 + f*r*c where c absorbs the fee, which is stable near f = 0 and 1.
    Non-positive values signal ruin for that outcome and are returned as-is.
    """
    a = fee.alpha
    r = np.asarray(r, dtype=float)
    c = np.where(r > 0.0, (1.0 - a) / (1.0 - a * f), 1.0 / (1.0 - a * (1.0 - f)))
    out = 1.0 + f * r * c
    return out if out.ndim else float(out)


def log_wealth_factor(f, log_gross, fee: FeeSchedule):
    """ln of the full-rebalance wealth factor from L = ln(1 + r).

    Stable for compound returns of any size: for L > 0 the factor
    1 + f*(e^L - 1)*c is evaluated as L + ln(c + (1 - f*c + ...)) terms that
    never overflow; ruinous outcomes come back as -inf.
    """
    a = fee.alpha
    f = float(f)
    L = np.asarray(log_gross, dtype=float)
    scalar = L.ndim == 0
    L = np.atleast_1d(L)
    c_pos = (1.0 - a) / (1.0 - a * f)
    c_neg = 1.0 / (1.0 - a * (1.0 - f))
    pos = L > 0.0
    out = np.empty_like(L)
    with np.errstate(divide="ignore", invalid="ignore"):
        # factor = 1 + f*(e^L - 1)*c = e^L * (f*c + (1 - f*c)e^-L) for L > 0
        out[pos] = L[pos] + np.log(f * c_pos + (1.0 - f * c_pos) * np.exp(-L[pos]))
        neg = ~pos
        out[neg] = np.log1p(f * np.expm1(L[neg]) * c_neg)
    return float(out[0]) if scalar else out
