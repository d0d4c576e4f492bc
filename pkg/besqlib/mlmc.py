#!/usr/bin/env python3

# Copyright (C) 2020 The besqlib developers
#
# This file is part of besqlib. It is subject to the license terms in the
# LICENSE file found in the top-level directory of this distribution.
#
# No part of besqlib including this file, may be copied, modified, propagated,
# or distributed except according to the terms contained in the LICENSE file.

"""Multilevel Monte Carlo for volatility payoffs.

Level ℓ discretizes dY = (1 - ηY) dt + √Y dW by full-truncation Euler
with n0·⌈T⌉·2^ℓ steps; ∫dt/Y is the trapezoidal rule on max(Y, floor).
The coarse path of a level pair is driven by the pairwise sums of the
fine Brownian increments, and

  E[P_L] = E[P_0] + Σ_{ℓ=1}^{L} E[P_ℓ - P_{ℓ-1}]

is estimated level by level with the sample allocation
N_ℓ = ⌈2 ε⁻² √(V_ℓ/C_ℓ) Σ_k √(V_k C_k)⌉ (Giles 2008).

https://doi.org/10.1287/opre.1070.0496

Samples of level ℓ come in chunks of batch_size paths, chunk c
drawing from RngStream(seed, level_stream_id(ℓ, c)): runs are
reproducible and adding samples never changes the earlier ones.
"""

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .errors import ConvergenceError
from .pricing import Estimate, PayoffSpec, VOL_KINDS, benchmark_ratio, vol_payoff
from .processes import MmmParams, cir_euler_step
from .randkit import RngStream, level_stream_id
from .utils import normal_quantile

logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-30


@dataclass(frozen=True)
class MlmcConfig:
    eps: float
    L_max: int = 10
    n0: int = 4
    pilot_n: int = 1000
    batch_size: int = 250
    floor: float = 1e-10
    ci_level: float = 0.99

    def __post_init__(self) -> None:
        if self.eps <= 0:
            raise ValueError(f"non-positive eps: {self.eps}")
        if self.n0 < 1:
            raise ValueError(f"n0 < 1: {self.n0}")
        if self.L_max < 0:
            raise ValueError(f"negative L_max: {self.L_max}")
        if self.pilot_n < 2:
            raise ValueError(f"pilot_n < 2: {self.pilot_n}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size < 1: {self.batch_size}")
        if self.floor <= 0:
            raise ValueError(f"non-positive floor: {self.floor}")

    @property
    def L_min(self) -> int:
        return min(2, self.L_max)

    def steps(self, level: int, T: float) -> int:
        "Euler steps of the given level (cost per sample)."
        return self.n0 * int(np.ceil(T)) * 2 ** level


@dataclass(frozen=True)
class LevelStats:
    level: int
    mean: float
    variance: float
    cost: int
    n_assigned: int

    def to_row(self) -> Tuple[int, float, float, int, int]:
        return (self.level, self.mean, self.variance, self.cost, self.n_assigned)


def coarsen_increments(dw: np.ndarray) -> np.ndarray:
    "Sums of consecutive pairs of Brownian increments (last axis)."

    dw = np.asarray(dw, dtype=float)
    if dw.shape[-1] % 2:
        raise ValueError(f"odd number of increments: {dw.shape[-1]}")
    return dw[..., 0::2] + dw[..., 1::2]


def _euler_payoff(
    model: MmmParams,
    payoff: PayoffSpec,
    dw: np.ndarray,
    floor: float,
) -> np.ndarray:
    "Benchmarked payoff along the Euler paths driven by dw (n, steps)."

    T = payoff.maturity
    steps = dw.shape[-1]
    dt = T / steps
    sr = model.square_root()
    y = np.full(dw.shape[0], model.y0)
    integral = 0.5 / y
    for k in range(steps):
        y = cir_euler_step(None, sr, y, dt, dw[:, k])
        integral += 1 / np.maximum(y, floor)
    integral -= 0.5 / np.maximum(y, floor)
    v = dt * integral
    ratio = benchmark_ratio(model, T, np.maximum(y, floor))
    return vol_payoff(payoff, v) * ratio


def _check_payoff(payoff: PayoffSpec) -> None:
    if payoff.kind not in VOL_KINDS:
        raise ValueError(f"not a volatility payoff: {payoff.kind}")


def _increments(stream: RngStream, n: int, steps: int, dt: float) -> np.ndarray:
    return np.sqrt(dt) * stream.generator.standard_normal((n, steps))


def level_sample(
    stream: RngStream,
    model: MmmParams,
    payoff: PayoffSpec,
    level: int,
    n: int,
    cfg: MlmcConfig,
) -> np.ndarray:
    "Payoff samples P_ℓ of the level alone."

    _check_payoff(payoff)
    T = payoff.maturity
    steps = cfg.steps(level, T)
    dw = _increments(stream, n, steps, T / steps)
    return _euler_payoff(model, payoff, dw, cfg.floor)


def coupled_level_sample(
    stream: RngStream,
    model: MmmParams,
    payoff: PayoffSpec,
    level: int,
    n: int,
    cfg: MlmcConfig,
) -> np.ndarray:
    """Samples of P_ℓ - P_{ℓ-1} on coupled paths; P_0 at level 0.

    The fine payoffs are those of level_sample on the same stream.
    """

    _check_payoff(payoff)
    if level < 0:
        raise ValueError(f"negative level: {level}")
    T = payoff.maturity
    steps = cfg.steps(level, T)
    dw = _increments(stream, n, steps, T / steps)
    fine = _euler_payoff(model, payoff, dw, cfg.floor)
    if level == 0:
        return fine
    coarse = _euler_payoff(model, payoff, coarsen_increments(dw), cfg.floor)
    return fine - coarse


def level_samples(
    seed: int,
    model: MmmParams,
    payoff: PayoffSpec,
    level: int,
    n: int,
    cfg: MlmcConfig,
    coupled: bool = True,
    first_chunk: int = 0,
) -> np.ndarray:
    """Samples of whole chunks, enough for n, starting at first_chunk."""

    sampler = coupled_level_sample if coupled else level_sample
    n_chunks = -(-n // cfg.batch_size)
    parts = [
        sampler(
            RngStream(seed, level_stream_id(level, c)),
            model,
            payoff,
            level,
            cfg.batch_size,
            cfg,
        )
        for c in range(first_chunk, first_chunk + n_chunks)
    ]
    return np.concatenate(parts)


class _Level:
    "Running sums of one level."

    def __init__(self, level: int, cost: int) -> None:
        self.level = level
        self.cost = cost
        self.n = 0
        self.chunks = 0
        self.sum = 0.0
        self.sum2 = 0.0

    def add(self, samples: np.ndarray, chunks: int) -> None:
        self.n += samples.size
        self.chunks += chunks
        self.sum += float(np.sum(samples))
        self.sum2 += float(np.sum(samples ** 2))

    @property
    def mean(self) -> float:
        return self.sum / self.n

    @property
    def variance(self) -> float:
        v = (self.sum2 - self.n * self.mean ** 2) / (self.n - 1)
        return max(v, VARIANCE_FLOOR)

    def stats(self) -> LevelStats:
        return LevelStats(self.level, self.mean, self.variance, self.cost, self.n)


def _weak_order(levels: List[_Level]) -> float:
    "Observed weak order from the level means, clamped at 0.5."

    used = [lv for lv in levels if lv.level > 0]
    if len(used) < 2:
        return 0.5
    x = np.array([lv.level for lv in used], dtype=float)
    y = np.log2(np.array([max(abs(lv.mean), VARIANCE_FLOOR) for lv in used]))
    slope = np.polyfit(x, y, 1)[0]
    return max(0.5, -float(slope))


def _bias_converged(levels: List[_Level], eps: float) -> bool:
    "Bias test on the last three level means."

    gamma = _weak_order(levels)
    last = levels[-3:][::-1]
    bound = max(abs(lv.mean) / 2 ** (gamma * k) for k, lv in enumerate(last))
    threshold = (2 ** gamma - 1) * eps / np.sqrt(2)
    logger.debug("bias bound %.3e, threshold %.3e", bound, threshold)
    return bound < threshold


def mlmc_run(
    model: MmmParams,
    payoff: PayoffSpec,
    cfg: MlmcConfig,
    seed: int = 0,
) -> Tuple[Estimate, List[LevelStats]]:
    """Multilevel estimate of S_0·E[H/S_T] with RMS error about eps.

    ConvergenceError (carrying the level statistics) is raised when the
    bias test still fails at L_max; with L_max = 0 the level-0 Euler
    estimate is returned without bias test.
    """

    _check_payoff(payoff)
    T = payoff.maturity
    eps = cfg.eps
    levels: List[_Level] = []

    def extend(lv: _Level, n: int) -> None:
        samples = level_samples(
            seed, model, payoff, lv.level, n, cfg, first_chunk=lv.chunks
        )
        lv.add(samples, samples.size // cfg.batch_size)

    def allocate() -> None:
        root = sum(np.sqrt(lv.variance * lv.cost) for lv in levels)
        for lv in levels:
            target = int(np.ceil(2 / eps ** 2 * np.sqrt(lv.variance / lv.cost) * root))
            if target > lv.n:
                extend(lv, target - lv.n)
            logger.debug(
                "level %d: mean %.3e variance %.3e n %d",
                lv.level, lv.mean, lv.variance, lv.n,
            )

    for level in range(cfg.L_min + 1):
        levels.append(_Level(level, cfg.steps(level, T)))
        extend(levels[-1], cfg.pilot_n)
    allocate()
    while cfg.L_max > 0 and not _bias_converged(levels, eps):
        if levels[-1].level == cfg.L_max:
            stats = [lv.stats() for lv in levels]
            m = f"bias test failed at L_max = {cfg.L_max}"
            raise ConvergenceError(m, stats)
        level = levels[-1].level + 1
        logger.info("adding level %d", level)
        levels.append(_Level(level, cfg.steps(level, T)))
        extend(levels[-1], cfg.pilot_n)
        allocate()

    stats = [lv.stats() for lv in levels]
    value = sum(s.mean for s in stats)
    se = float(np.sqrt(sum(s.variance / s.n_assigned for s in stats)))
    half = normal_quantile(cfg.ci_level) * se
    cost = sum(s.cost * s.n_assigned for s in stats)
    n = sum(s.n_assigned for s in stats)
    logger.info(
        "mlmc: %d levels, samples %s, cost %d",
        len(stats), [s.n_assigned for s in stats], cost,
    )
    diagnostics = {"cost": cost, "levels": len(stats)}
    estimate = Estimate(
        value, se, value - half, value + half, n, seed, "mlmc", diagnostics
    )
    return estimate, stats
