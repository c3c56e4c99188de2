"""Seeded Monte-Carlo estimation of long-run growth, and the experiment
sweeps over rebalancing period and partial-transfer fraction.

Every realization draws from its own generator seeded as (master_seed, index),
so results are bit-identical for a fixed master seed regardless of how path
generation is distributed over threads. Sweeps reuse one set of paths across
the whole decision grid (common random numbers), and the period/partial sweeps
additionally subtract control variates built from the same paths: the growth
differences that decide an argmax are orders of magnitude below the plain
Monte-Carlo noise floor at desk scale, and paired paths alone do not close
that gap. The control variates are exact-mean constructions (no fitted
coefficients) and leave every estimate unbiased.

Student-t and GARCH sweeps are run at f = 1/2: both models are symmetric with
zero drift, for which 1/2 is the exact optimum at any period, so the period
scaling can be measured without a noisy search over f.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .assets import (
    GARCH_BURN_IN,
    BinaryAsset,
    GarchAsset,
    LognormalAsset,
    StudentAsset,
    TwoScaleAsset,
    _garch_recursion,
    sample_path,
)
from .growth import GrowthEstimate, growth_binary, growth_lognormal, growth_two_scale
from .mechanics import NO_FEES, FeeSchedule, Strategy

__all__ = [
    "SimConfig",
    "PeriodPoint",
    "PeriodSweep",
    "PartialPoint",
    "simulate_growth",
    "sweep_period",
    "period_scan",
    "sweep_partial",
]

REDUCED_STEPS = 100_000
REDUCED_REALIZATIONS = 100

# one path block plus estimator workspace stays under ~1 GB
_CHUNK_BYTES = 10**9
_ESTIMATOR_EXPANSION = 12

# heavy-tail models clip the control variate this many step deviations out;
# the clip only moves variance between terms, never the mean
_CLIP_SIGMAS = 60.0

# window offsets averaged per period; resamples which steps share a window
_MAX_PHASES = 16


@dataclass(frozen=True)
class SimConfig:
    """Scale, seed, model and fee for one batch of simulated paths.

    reduced=True overrides steps and realizations with the desk-scale values
    (1e5 x 1e2). threads=None uses the machine's CPU count; the thread count
    never affects results, only wall time.
    """

    model: object
    fee: FeeSchedule = NO_FEES
    master_seed: int = 0
    steps: int = 1_000_000
    realizations: int = 1_000
    reduced: bool = False
    threads: int | None = None

    def __post_init__(self):
        if self.reduced:
            object.__setattr__(self, "steps", REDUCED_STEPS)
            object.__setattr__(self, "realizations", REDUCED_REALIZATIONS)
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be an integer >= 1, got {self.steps}")
        if int(self.realizations) != self.realizations or self.realizations < 1:
            raise ValueError(
                f"realizations must be an integer >= 1, got {self.realizations}"
            )
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError(f"master_seed must be a 64-bit value, got {self.master_seed}")
        if self.threads is not None and self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")


@dataclass(frozen=True)
class PeriodPoint:
    T: int
    f_star: float
    G_star: float
    stderr: float


@dataclass(frozen=True)
class PeriodSweep:
    """Per-period optima at one fee level; best is the growth-maximizing row."""

    alpha: float
    points: tuple[PeriodPoint, ...]

    @property
    def best(self) -> PeriodPoint:
        top = max(p.G_star for p in self.points)
        for p in self.points:
            if p.G_star == top:
                return p
        raise AssertionError("unreachable")


@dataclass(frozen=True)
class PartialPoint:
    """G_star is the anchored estimate; G_raw the plain path average."""

    eps: float
    f_star: float
    G_star: float
    G_raw: float
    stderr: float


def _map_rows(fn, n: int, threads: int | None):
    workers = os.cpu_count() or 1 if threads is None else threads
    if workers > 1 and n > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fn, range(n)))
    else:
        for i in range(n):
            fn(i)


def _path_block(model, steps, row0, n, master_seed, threads):
    """Returns block for realizations row0..row0+n-1, one rng stream per row."""
    if isinstance(model, GarchAsset):
        # same draws as sample_path row by row, but the variance recursion
        # runs once across the whole block
        total = GARCH_BURN_IN + steps
        z = np.empty((n, total))

        def fill_z(i):
            z[i] = np.random.default_rng([master_seed, row0 + i]).standard_normal(total)

        _map_rows(fill_z, n, threads)
        eps = _garch_recursion(model, z)
        return np.expm1(eps[:, GARCH_BURN_IN:])
    out = np.empty((n, steps))

    def fill(i):
        rng = np.random.default_rng([master_seed, row0 + i])
        out[i] = sample_path(model, steps, rng)

    _map_rows(fill, n, threads)
    return out


def _path_chunks(config: SimConfig, expansion: int = 1):
    """Yield (row0, block) covering all realizations under the memory cap."""
    per_row = 8 * config.steps * expansion
    if isinstance(config.model, GarchAsset):
        per_row = max(per_row, 8 * (config.steps + GARCH_BURN_IN) * 3)
    rows = max(1, min(config.realizations, _CHUNK_BYTES // per_row))
    for row0 in range(0, config.realizations, rows):
        n = min(rows, config.realizations - row0)
        yield row0, _path_block(
            config.model, config.steps, row0, n, config.master_seed, config.threads
        )


def _reduce_paths(G: np.ndarray) -> GrowthEstimate:
    if not np.all(np.isfinite(G)):
        return GrowthEstimate(G=-math.inf, R=-1.0, stderr=None)
    stderr = float(G.std(ddof=1) / math.sqrt(G.size)) if G.size > 1 else 0.0
    return GrowthEstimate.from_growth(float(G.mean()), stderr)


def simulate_growth(config: SimConfig, strategy: Strategy) -> GrowthEstimate:
    """Mean per-step log growth across realizations of the full state walk.

    Each path applies the step return to the invested fraction, then every
    strategy.T steps transfers strategy.eps of the rebalancing amount, paying
    the proportional fee. Any path whose wealth factor hits zero is ruined
    and scores -inf, which dominates the mean.
    """
    f, T, eps_frac = strategy.f, strategy.T, strategy.eps
    if f == 0.0:
        # nothing invested: wealth never moves and no transfer is ever needed
        return GrowthEstimate.from_growth(0.0, 0.0)
    alpha = config.fee.alpha
    inv_pos = 1.0 / (1.0 - alpha * f)
    inv_neg = 1.0 / (1.0 - alpha * (1.0 - f))
    G = np.empty(config.realizations)
    for row0, block in _path_chunks(config):
        n = block.shape[0]
        g = np.full(n, f)
        logw = np.zeros(n)
        dead = np.zeros(n, dtype=bool)
        with np.errstate(divide="ignore", invalid="ignore"):
            for t in range(config.steps):
                r = block[:, t]
                factor = 1.0 + g * r
                bad = factor <= 0.0
                if bad.any():
                    dead |= bad
                    factor = np.where(bad, 1.0, factor)
                    g = np.where(bad, 0.0, g)
                logw += np.log(factor)
                g = g * (1.0 + r) / factor
                if (t + 1) % T == 0:
                    dev = g - f
                    x = dev * np.where(dev > 0.0, inv_pos, inv_neg)
                    ex = eps_frac * x
                    aex = alpha * np.abs(ex)
                    logw += np.log1p(-aex)
                    g = np.where(x > 0.0, g - ex, g - (1.0 - alpha) * ex) / (1.0 - aex)
        G[row0 : row0 + n] = np.where(dead, -np.inf, logw / config.steps)
    return _reduce_paths(G)


def _exact_step_growth(model, f: float, fee: FeeSchedule):
    """Exact per-step growth at T = 1, or None for sampler-only models."""
    if isinstance(model, BinaryAsset):
        return growth_binary(model, f, 1, fee)
    if isinstance(model, TwoScaleAsset):
        return growth_two_scale(model, f, 1, fee)
    if isinstance(model, LognormalAsset):
        return growth_lognormal(model, f, fee)
    return None


def _window_cv_params(model):
    """(clip_abs, mean_y) for the period-sweep control variate, or None.

    mean_y is the exact mean of the clipped per-step log return; it must be
    exact for the control variate to stay unbiased. Models whose steps are
    not identically distributed (two-scale) get no control variate.
    """
    if isinstance(model, BinaryAsset):
        mean = model.p_up * math.log1p(model.r1) + (1.0 - model.p_up) * math.log1p(
            -model.r1
        )
        return math.inf, mean
    if isinstance(model, LognormalAsset):
        return math.inf, model.m
    if isinstance(model, StudentAsset):
        return _CLIP_SIGMAS * model.sigma, 0.0
    if isinstance(model, GarchAsset):
        return _CLIP_SIGMAS * math.sqrt(model.unconditional_var), 0.0
    return None


def _phase_offsets(T: int) -> np.ndarray:
    n = min(T, _MAX_PHASES)
    return np.unique(np.linspace(0.0, T, n, endpoint=False).astype(int))


def _window_deltas(r_block, T_list, f, alphas, cv_params, delta_out, g1_out, row0):
    """Per-realization estimates of G(T) - G(1) on one block of paths.

    For each window of T steps the fee-adjusted compound log factor minus the
    sum of single-step factors measures the compounding gain directly; two
    control-variate terms cancel the dominant pairwise and outlier noise, and
    the window partition is averaged over up to _MAX_PHASES offsets. Writes
    delta_out[a, Ti, rows] and the plain per-path T = 1 growth g1_out[a, rows].
    """
    n, steps = r_block.shape
    x = np.log1p(r_block)
    one_plus_r = 1.0 + r_block
    zeros = np.zeros((n, 1))
    cx = np.concatenate([zeros, np.cumsum(x, axis=1)], axis=1)
    use_cv = cv_params is not None and 0.0 < f < 1.0
    if use_cv:
        clip_abs, mean_y = cv_params
        y = np.where(np.abs(x) <= clip_abs, x, 0.0) - mean_y
        cy = np.concatenate([zeros, np.cumsum(y, axis=1)], axis=1)
        cq = np.concatenate([zeros, np.cumsum(y * y, axis=1)], axis=1)
    ff = f - f * f
    with np.errstate(divide="ignore", invalid="ignore"):
        for ai, a in enumerate(alphas):
            c_pos = (1.0 - a) / (1.0 - a * f)
            c_neg = 1.0 / (1.0 - a * (1.0 - f))
            c = np.where(r_block > 0.0, c_pos, c_neg)
            denom = 1.0 + f * r_block * c
            hx = np.log(denom)
            ch = np.concatenate([zeros, np.cumsum(hx, axis=1)], axis=1)
            g1_out[ai, row0 : row0 + n] = ch[:, steps] / steps
            if use_cv:
                u = f * c * one_plus_r / denom - f - ff * y
                cu = np.concatenate([zeros, np.cumsum(u, axis=1)], axis=1)
                cuy = np.concatenate([zeros, np.cumsum(u * y, axis=1)], axis=1)
            for ti, T in enumerate(T_list):
                acc = np.zeros(n)
                offsets = _phase_offsets(T)
                used = 0
                for p in offsets:
                    idx = np.arange(p, steps + 1, T)
                    if idx.size < 2:
                        continue
                    i1, i0 = idx[1:], idx[:-1]
                    rw = np.expm1(cx[:, i1] - cx[:, i0])
                    cw = np.where(rw > 0.0, c_pos, c_neg)
                    est = np.log(1.0 + f * rw * cw) - (ch[:, i1] - ch[:, i0])
                    if use_cv:
                        yw = cy[:, i1] - cy[:, i0]
                        est -= ff * 0.5 * (yw * yw - (cq[:, i1] - cq[:, i0]))
                        est -= (cu[:, i1] - cu[:, i0]) * yw - (cuy[:, i1] - cuy[:, i0])
                    acc += est.mean(axis=1)
                    used += 1
                delta_out[ai, ti, row0 : row0 + n] = acc / used / T


def period_scan(config: SimConfig, T_list, f_grid, alphas) -> list[PeriodSweep]:
    """Period sweeps at several fee levels sharing one set of paths.

    The per-step growth at each (alpha, f, T) is estimated as an anchored
    difference to T = 1: exact T = 1 growth when the model has one, otherwise
    the plain Monte-Carlo average. stderr is the paired spread of the
    difference, so comparisons across T are honest while the common anchor
    noise (if any) is excluded.
    """
    T_list = sorted(set(int(t) for t in T_list))
    if not T_list or T_list[0] < 1:
        raise ValueError(f"periods must be integers >= 1, got {T_list}")
    if T_list[-1] > config.steps // 2:
        raise ValueError(
            f"longest period {T_list[-1]} needs at least two windows "
            f"in {config.steps} steps"
        )
    f_grid = [float(f) for f in f_grid]
    if not f_grid or not all(0.0 <= f <= 1.0 for f in f_grid):
        raise ValueError(f"fractions must lie in [0, 1], got {f_grid}")
    alphas = [float(a) for a in alphas]
    if not alphas or not all(0.0 <= a < 1.0 for a in alphas):
        raise ValueError(f"fee rates must lie in [0, 1), got {alphas}")
    na, nf, nT = len(alphas), len(f_grid), len(T_list)
    R = config.realizations
    delta = np.empty((na, nf, nT, R))
    g1 = np.empty((na, nf, R))
    cv_params = _window_cv_params(config.model)
    for row0, block in _path_chunks(config, expansion=_ESTIMATOR_EXPANSION):
        for fi, f in enumerate(f_grid):
            _window_deltas(
                block, T_list, f, alphas, cv_params, delta[:, fi], g1[:, fi], row0
            )
    sweeps = []
    for ai, a in enumerate(alphas):
        fee = FeeSchedule(a)
        anchors = np.empty(nf)
        for fi, f in enumerate(f_grid):
            exact = _exact_step_growth(config.model, f, fee)
            anchors[fi] = g1[ai, fi].mean() if exact is None else exact
        dmean = delta[ai].mean(axis=2)
        dse = delta[ai].std(axis=2, ddof=1) / math.sqrt(R)
        G = anchors[:, None] + dmean
        points = []
        for ti, T in enumerate(T_list):
            fi = int(np.argmax(G[:, ti]))
            points.append(
                PeriodPoint(
                    T=T,
                    f_star=f_grid[fi],
                    G_star=float(G[fi, ti]),
                    stderr=float(dse[fi, ti]),
                )
            )
        sweeps.append(PeriodSweep(alpha=a, points=tuple(points)))
    return sweeps


def sweep_period(config: SimConfig, T_list, f_grid) -> PeriodSweep:
    """Period sweep at the config's fee; see period_scan."""
    return period_scan(config, T_list, f_grid, [config.fee.alpha])[0]


def sweep_partial(config: SimConfig, eps_grid, f_grid) -> tuple[PartialPoint, ...]:
    """Growth under partial rebalancing (every step, transfer fraction eps).

    All (eps, f) pairs walk the same paths simultaneously. For binary models
    a control variate removes the exposure-deviation noise and each f-slice
    is anchored to the exact full-rebalancing growth, so the returned G_star
    resolves differences far below the raw noise floor; G_raw is the plain
    average of path log growth and matches simulate_growth bit-for-bit at
    eps = 1. stderr is the paired spread of the difference to eps = 1.
    """
    eps_req = [float(e) for e in eps_grid]
    if not eps_req or not all(0.0 < e <= 1.0 for e in eps_req):
        raise ValueError(f"eps values must lie in (0, 1], got {eps_req}")
    f_grid = [float(f) for f in f_grid]
    if not f_grid or not all(0.0 <= f <= 1.0 for f in f_grid):
        raise ValueError(f"fractions must lie in [0, 1], got {f_grid}")
    eps_all = list(eps_req)
    if 1.0 not in eps_all:
        eps_all.append(1.0)
    i1 = eps_all.index(1.0)
    ne, nf, R = len(eps_all), len(f_grid), config.realizations
    alpha = config.fee.alpha
    f_arr = np.asarray(f_grid)[None, :, None]
    e_arr = np.asarray(eps_all)[:, None, None]
    inv_pos = 1.0 / (1.0 - alpha * f_arr)
    inv_neg = 1.0 / (1.0 - alpha * (1.0 - f_arr))
    model = config.model
    if isinstance(model, BinaryAsset):
        # exact mean of r/(1 + f r), the control variate's step kernel
        mu = model.p_up * model.r1 / (1.0 + f_arr * model.r1) + (
            1.0 - model.p_up
        ) * -model.r1 / (1.0 - f_arr * model.r1)
    else:
        mu = None
    acc_raw = np.empty((ne, nf, R))
    acc_cv = np.empty((ne, nf, R))
    dead_all = np.empty((ne, nf, R), dtype=bool)
    for row0, block in _path_chunks(config):
        n = block.shape[0]
        g = np.broadcast_to(f_arr, (ne, nf, n)).copy()
        raw = np.zeros((ne, nf, n))
        cv = np.zeros((ne, nf, n))
        dead = np.zeros((ne, nf, n), dtype=bool)
        with np.errstate(divide="ignore", invalid="ignore"):
            for t in range(config.steps):
                r = block[:, t]
                if mu is not None:
                    cv += (g - f_arr) * (r / (1.0 + f_arr * r) - mu)
                factor = 1.0 + g * r
                bad = factor <= 0.0
                if bad.any():
                    dead |= bad
                    factor = np.where(bad, 1.0, factor)
                    g = np.where(bad, 0.0, g)
                raw += np.log(factor)
                g = g * (1.0 + r) / factor
                dev = g - f_arr
                x = dev * np.where(dev > 0.0, inv_pos, inv_neg)
                ex = e_arr * x
                aex = alpha * np.abs(ex)
                raw += np.log1p(-aex)
                g = np.where(x > 0.0, g - ex, g - (1.0 - alpha) * ex) / (1.0 - aex)
        acc_raw[:, :, row0 : row0 + n] = raw
        acc_cv[:, :, row0 : row0 + n] = cv
        dead_all[:, :, row0 : row0 + n] = dead
    g_raw = acc_raw / config.steps
    g_raw[dead_all] = -np.inf
    g_cv = (acc_raw - acc_cv) / config.steps
    g_cv[dead_all] = -np.inf
    delta = g_cv - g_cv[i1 : i1 + 1]
    with np.errstate(invalid="ignore"):
        dmean = delta.mean(axis=2)
        dse = delta.std(axis=2, ddof=1) / math.sqrt(R)
    anchors = np.empty(nf)
    for fi, f in enumerate(f_grid):
        exact = _exact_step_growth(model, f, config.fee)
        anchors[fi] = g_cv[i1, fi].mean() if exact is None else exact
    G = dmean + anchors[None, :]
    points = []
    for e in eps_req:
        ei = eps_all.index(e)
        fi = int(np.argmax(G[ei]))
        points.append(
            PartialPoint(
                eps=e,
                f_star=f_grid[fi],
                G_star=float(G[ei, fi]),
                G_raw=float(g_raw[ei, fi].mean()),
                stderr=float(dse[ei, fi]),
            )
        )
    return tuple(points)
