"""Return models: parameter records, exact compound-return distributions,
and seeded samplers.

Five models are supported. Binary and two-scale assets have exact finite
outcome distributions for any aggregation window; the lognormal model is
handled by quadrature elsewhere; Student-t and GARCH returns exist only as
samplers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

__all__ = [
    "BinaryAsset",
    "TwoScaleAsset",
    "LognormalAsset",
    "StudentAsset",
    "GarchAsset",
    "OutcomeDistribution",
    "binary_compound_distribution",
    "two_scale_compound_distribution",
    "sample_path",
    "garch_step",
    "GARCH_BURN_IN",
]

# Steps discarded before a GARCH path is measured; the recursion starts at the
# unconditional variance with prev_eps = 0, so a short burn-in removes the
# remaining transient.
GARCH_BURN_IN = 1000


@dataclass(frozen=True)
class BinaryAsset:
    """Single asset whose price moves by a factor 1 +- r1 each step.

    The up move has probability 1/2 + P1, the down move 1/2 - P1.
    """

    r1: float
    P1: float

    def __post_init__(self):
        if not 0.0 < self.r1 <= 1.0:
            raise ValueError(f"r1 must be in (0, 1], got {self.r1}")
        if not -0.5 < self.P1 <= 0.5:
            raise ValueError(f"P1 must be in (-1/2, 1/2], got {self.P1}")

    @property
    def p_up(self) -> float:
        return 0.5 + self.P1


@dataclass(frozen=True)
class TwoScaleAsset:
    """Binary asset with an extra +-r2 move applied every T2 steps.

    The short scale is `base`; the long scale pays +r2 with probability
    1/2 + P2 and -r2 otherwise, once per T2 steps.
    """

    base: BinaryAsset
    r2: float
    P2: float
    T2: int

    def __post_init__(self):
        if not 0.0 < self.r2 <= 1.0:
            raise ValueError(f"r2 must be in (0, 1], got {self.r2}")
        if not 0.0 < self.P2 <= 0.5:
            raise ValueError(f"P2 must be in (0, 1/2], got {self.P2}")
        if int(self.T2) != self.T2 or self.T2 < 2:
            raise ValueError(f"T2 must be an integer >= 2, got {self.T2}")


@dataclass(frozen=True)
class LognormalAsset:
    """Per-step return r = e^eta - 1 with eta ~ Normal(m, D)."""

    m: float
    D: float

    def __post_init__(self):
        if self.D <= 0.0:
            raise ValueError(f"D must be positive, got {self.D}")


@dataclass(frozen=True)
class StudentAsset:
    """Per-step return r = e^(sigma*chi) - 1, chi ~ Student-t.

    dof defaults to 2; note that t(2) has divergent variance (finite mean),
    so nothing downstream may rely on a second moment for this model.
    """

    sigma: float
    dof: int = 2

    def __post_init__(self):
        if self.sigma <= 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.dof < 1:
            raise ValueError(f"dof must be >= 1, got {self.dof}")


@dataclass(frozen=True)
class GarchAsset:
    """GARCH(1,1) log-return innovations: r = e^eps - 1.

    var_t = a0 + a1*eps_{t-1}^2 + b*var_{t-1}, eps_t = sqrt(var_t)*z_t.
    """

    a0: float
    a1: float
    b: float

    def __post_init__(self):
        if self.a0 <= 0.0:
            raise ValueError(f"a0 must be positive, got {self.a0}")
        if self.a1 < 0.0 or self.b < 0.0:
            raise ValueError("a1 and b must be non-negative")
        if self.a1 + self.b >= 1.0:
            raise ValueError(
                f"a1 + b must be < 1 for stationarity, got {self.a1 + self.b}"
            )

    @property
    def unconditional_var(self) -> float:
        return self.a0 / (1.0 - self.a1 - self.b)


class OutcomeDistribution:
    """Finite distribution of compound returns: arrays of (r, p) pairs.

    Probabilities must sum to 1 within 1e-12 and every return must be >= -1.
    The -1 boundary is admitted (an all-loss run of an r1 = 1 asset reaches
    it); growth evaluation treats the resulting zero wealth factor as ruin.
    """

    __slots__ = ("returns", "probs")

    def __init__(self, returns, probs):
        r = np.atleast_1d(np.asarray(returns, dtype=float))
        p = np.atleast_1d(np.asarray(probs, dtype=float))
        if r.shape != p.shape or r.ndim != 1:
            raise ValueError("returns and probs must be 1-d arrays of equal length")
        if np.any(r < -1.0):
            raise ValueError("compound returns below -1 are impossible")
        if np.any(p < -1e-15):
            raise ValueError("negative probability")
        total = float(p.sum())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total}, not 1")
        self.returns = r
        self.probs = p

    @property
    def entries(self):
        """List of (return, probability) pairs."""
        return list(zip(self.returns.tolist(), self.probs.tolist()))

    def __len__(self):
        return self.returns.size

    def __repr__(self):
        return f"OutcomeDistribution({len(self)} outcomes)"


def binary_compound_distribution(asset: BinaryAsset, T: int) -> OutcomeDistribution:
    """Exact distribution of the compound return of a binary asset over T steps.

    With w up-moves out of T, the compound return is
    (1+r1)^w (1-r1)^(T-w) - 1 and the weight is Binomial(T, 1/2+P1).
    Weights are evaluated in log space so T up to 10^4 is safe.
    """
    if int(T) != T or T < 1:
        raise ValueError(f"T must be an integer >= 1, got {T}")
    T = int(T)
    w = np.arange(T + 1)
    log_p = binom.logpmf(w, T, asset.p_up)
    # expm1 keeps precision for small r1; at r1 = 1 any down-move is a total
    # loss, and 0 * log1p(-1) = 0 * -inf must not poison the all-up outcome
    with np.errstate(divide="ignore", invalid="ignore"):
        log_down = np.where(w < T, (T - w) * np.log1p(-asset.r1), 0.0)
    log_gross = w * np.log1p(asset.r1) + log_down
    return OutcomeDistribution(np.expm1(log_gross), np.exp(log_p))


def two_scale_compound_distribution(asset: TwoScaleAsset, T: int):
    """Compound-return distributions of a two-scale asset over a T-step window.

    A window of length T placed with uniform random phase against the T2-grid
    covers either t = T // T2 or t + 1 long-scale events. Returns
    [(weight_t, dist_t), (weight_{t+1}, dist_{t+1})] where the weights are
    1 - (T mod T2)/T2 and (T mod T2)/T2.
    """
    if int(T) != T or T < 1:
        raise ValueError(f"T must be an integer >= 1, got {T}")
    T = int(T)
    t, s = divmod(T, asset.T2)
    weights = (1.0 - s / asset.T2, s / asset.T2)
    out = []
    for n_long, weight in zip((t, t + 1), weights):
        w1 = np.arange(T + 1)
        log_p1 = binom.logpmf(w1, T, asset.base.p_up)
        with np.errstate(divide="ignore"):
            log_g1 = w1 * np.log1p(asset.base.r1) + (T - w1) * np.log1p(-asset.base.r1)
        w2 = np.arange(n_long + 1)
        log_p2 = binom.logpmf(w2, n_long, 0.5 + asset.P2)
        with np.errstate(divide="ignore"):
            log_g2 = w2 * np.log1p(asset.r2) + (n_long - w2) * np.log1p(-asset.r2)
        log_p = (log_p1[:, None] + log_p2[None, :]).ravel()
        log_g = (log_g1[:, None] + log_g2[None, :]).ravel()
        out.append((weight, OutcomeDistribution(np.expm1(log_g), np.exp(log_p))))
    return out


def garch_step(asset: GarchAsset, state, rng):
    """One GARCH(1,1) step: returns (per-step return, new state).

    state is (prev_eps, prev_var). The innovation is a log return,
    r = e^eps - 1.
    """
    prev_eps, prev_var = state
    if not (np.isfinite(prev_eps) and np.isfinite(prev_var)) or prev_var <= 0.0:
        raise ValueError(f"invalid GARCH state {state}")
    var = asset.a0 + asset.a1 * prev_eps**2 + asset.b * prev_var
    eps = np.sqrt(var) * rng.standard_normal()
    return np.expm1(eps), (eps, var)


def sample_path(asset, T: int, rng) -> np.ndarray:
    """T per-step returns of the given model, driven by the supplied generator.

    Deterministic for a fixed generator state. GARCH paths start at the
    unconditional variance with prev_eps = 0 and discard GARCH_BURN_IN steps
    before the T returned ones.
    """
    if int(T) != T or T < 1:
        raise ValueError(f"T must be an integer >= 1, got {T}")
    T = int(T)
    if isinstance(asset, BinaryAsset):
        up = rng.random(T) < asset.p_up
        return np.where(up, asset.r1, -asset.r1)
    if isinstance(asset, LognormalAsset):
        return np.expm1(rng.normal(asset.m, np.sqrt(asset.D), T))
    if isinstance(asset, StudentAsset):
        return np.expm1(asset.sigma * rng.standard_t(asset.dof, T))
    if isinstance(asset, GarchAsset):
        total = GARCH_BURN_IN + T
        z = rng.standard_normal(total)
        eps = _garch_recursion(asset, z)
        return np.expm1(eps[GARCH_BURN_IN:])
    if isinstance(asset, TwoScaleAsset):
        r = sample_path(asset.base, T, rng)
        n_long = T // asset.T2
        if n_long:
            up2 = rng.random(n_long) < 0.5 + asset.P2
            long_r = np.where(up2, asset.r2, -asset.r2)
            # long-scale move lands on every T2-th step, compounding with it
            idx = asset.T2 * np.arange(1, n_long + 1) - 1
            r[idx] = (1.0 + r[idx]) * (1.0 + long_r) - 1.0
        return r
    raise TypeError(f"unsupported asset type {type(asset).__name__}")


def _garch_recursion(asset: GarchAsset, z: np.ndarray) -> np.ndarray:
    """eps series from innovations z; vectorized over leading axes of z."""
    var = np.full(z.shape[:-1], asset.unconditional_var)
    eps_sq = np.zeros(z.shape[:-1])
    eps = np.empty_like(z)
    for t in range(z.shape[-1]):
        var = asset.a0 + asset.a1 * eps_sq + asset.b * var
        eps[..., t] = np.sqrt(var) * z[..., t]
        eps_sq = eps[..., t] ** 2
    return eps
