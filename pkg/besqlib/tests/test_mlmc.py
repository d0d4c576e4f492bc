#!/usr/bin/env python3

# Copyright (C) 2020 The besqlib developers
#
# This file is part of besqlib. It is subject to the license terms in the
# LICENSE file found in the top-level directory of this distribution.
#
# No part of besqlib including this file, may be copied, modified, propagated,
# or distributed except according to the terms contained in the LICENSE file.

"Tests for `besqlib.mlmc` module."

import numpy as np
import pytest

from besqlib.errors import ConvergenceError
from besqlib.mlmc import (
    LevelStats,
    MlmcConfig,
    coarsen_increments,
    coupled_level_sample,
    level_sample,
    level_samples,
    mlmc_run,
)
from besqlib.presets import build_model, preset
from besqlib.pricing import PayoffSpec, joint_density_for, price_vol_put
from besqlib.processes import MmmParams
from besqlib.randkit import RngStream

STYLIZED = build_model(preset("stylized"))
PUT = PayoffSpec("vol_put", 0.25, 1.0)


def test_config() -> None:
    cfg = MlmcConfig(eps=1e-3)
    assert cfg.L_min == 2
    assert MlmcConfig(eps=1e-3, L_max=1).L_min == 1
    assert cfg.steps(0, 1.0) == 4
    assert cfg.steps(3, 1.0) == 32
    assert cfg.steps(0, 2.5) == 12

    with pytest.raises(ValueError, match="non-positive eps: "):
        MlmcConfig(eps=0.0)
    with pytest.raises(ValueError, match="n0 < 1: "):
        MlmcConfig(eps=1e-3, n0=0)
    with pytest.raises(ValueError, match="negative L_max: "):
        MlmcConfig(eps=1e-3, L_max=-1)
    with pytest.raises(ValueError, match="pilot_n < 2: "):
        MlmcConfig(eps=1e-3, pilot_n=1)

    stats = LevelStats(2, 1e-5, 1e-9, 16, 400)
    assert stats.to_row() == (2, 1e-5, 1e-9, 16, 400)


def test_coarsen_increments() -> None:
    dw = np.arange(8.0).reshape(2, 4)
    assert np.array_equal(coarsen_increments(dw), [[1.0, 5.0], [9.0, 13.0]])
    with pytest.raises(ValueError, match="odd number of increments: "):
        coarsen_increments(np.ones((2, 3)))


def test_level_samples() -> None:
    cfg = MlmcConfig(eps=1e-3)
    fine = level_sample(RngStream(3), STYLIZED, PUT, 0, 100, cfg)
    coupled = coupled_level_sample(RngStream(3), STYLIZED, PUT, 0, 100, cfg)
    assert np.array_equal(fine, coupled)
    assert np.all(fine >= 0)

    # samples come in whole chunks, independent of how they are requested
    both = level_samples(5, STYLIZED, PUT, 2, 500, cfg)
    first = level_samples(5, STYLIZED, PUT, 2, 250, cfg)
    second = level_samples(5, STYLIZED, PUT, 2, 250, cfg, first_chunk=1)
    assert np.array_equal(both, np.concatenate([first, second]))
    assert level_samples(5, STYLIZED, PUT, 2, 260, cfg).size == 500

    with pytest.raises(ValueError, match="not a volatility payoff: "):
        level_sample(RngStream(3), STYLIZED, PayoffSpec("zcb"), 0, 10, cfg)
    with pytest.raises(ValueError, match="negative level: "):
        coupled_level_sample(RngStream(3), STYLIZED, PUT, -1, 10, cfg)


def test_telescoping_sum() -> None:
    cfg = MlmcConfig(eps=1e-3)
    n, L = 4000, 3
    corrections = [level_samples(7, STYLIZED, PUT, lv, n, cfg) for lv in range(L + 1)]
    total = sum(c.mean() for c in corrections)
    var = sum(c.var(ddof=1) / c.size for c in corrections)
    direct = level_samples(8, STYLIZED, PUT, L, n, cfg, coupled=False)
    var += direct.var(ddof=1) / direct.size
    assert abs(total - direct.mean()) <= 4 * np.sqrt(var)


def test_variance_decay() -> None:
    cfg = MlmcConfig(eps=1e-3)
    n = 10_000
    variances = [
        level_samples(9, STYLIZED, PUT, lv, n, cfg).var(ddof=1) for lv in range(3, 7)
    ]
    for coarse, fine in zip(variances, variances[1:]):
        assert fine / coarse < 0.9


def test_level_zero_only() -> None:
    cfg = MlmcConfig(eps=1e-3, L_max=0, pilot_n=500)
    estimate, stats = mlmc_run(STYLIZED, PUT, cfg, seed=11)
    assert len(stats) == 1
    assert estimate.method == "mlmc"
    samples = level_samples(11, STYLIZED, PUT, 0, stats[0].n_assigned, cfg)
    assert estimate.value == pytest.approx(samples.mean(), rel=1e-12)
    assert estimate.diagnostics["levels"] == 1
    assert estimate.diagnostics["cost"] == stats[0].n_assigned * 4


def test_reproducible() -> None:
    cfg = MlmcConfig(eps=5e-4)
    first = mlmc_run(STYLIZED, PUT, cfg, seed=2)
    second = mlmc_run(STYLIZED, PUT, cfg, seed=2)
    assert first[0] == second[0]
    assert first[1] == second[1]
    assert first[0].ci_low < first[0].value < first[0].ci_high


def test_cost_scaling() -> None:
    "Cost grows no faster than ε^{-2} (log ε)², the rate of Euler levels."

    payoff = PayoffSpec("vol_put", np.sqrt(0.05), 1.0)
    eps = np.array([1e-4, 5e-5, 2.5e-5, 1.25e-5])
    costs = []
    for e in eps:
        cfg = MlmcConfig(eps=float(e), pilot_n=100)
        estimate, _ = mlmc_run(STYLIZED, payoff, cfg, seed=3)
        costs.append(estimate.diagnostics["cost"])
    costs = np.array(costs, dtype=float)
    assert np.all(np.diff(costs) > 0)

    normalized = costs * eps ** 2 / np.log(eps) ** 2
    assert np.max(normalized) <= 2 * normalized[0]
    # fixed pilot and chunk costs flatten the growth at coarse eps
    rate = -np.polyfit(np.log(eps), np.log(costs), 1)[0]
    assert 1.3 <= rate <= 2.6


def test_initial_value_scale() -> None:
    "Scaling S_0 and α_0 together leaves Y, and so the price, unchanged."

    scaled = MmmParams(
        2 * STYLIZED.s0, 2 * STYLIZED.alpha0, STYLIZED.eta, STYLIZED.r
    )
    cfg = MlmcConfig(eps=1e-3)
    base, _ = mlmc_run(STYLIZED, PUT, cfg, seed=4)
    other, _ = mlmc_run(scaled, PUT, cfg, seed=4)
    assert other.value == pytest.approx(base.value, rel=1e-12)
    assert other.std_error == pytest.approx(base.std_error, rel=1e-12)


def test_convergence_error() -> None:
    "Starting close to zero, one Euler step is far too coarse."

    model = MmmParams(1.0, 2.0, 0.05)
    payoff = PayoffSpec("vol_put", 1.0, 1.0)
    cfg = MlmcConfig(eps=2e-3, L_max=1, n0=1)
    with pytest.raises(ConvergenceError, match="bias test failed at L_max = 1") as err:
        mlmc_run(model, payoff, cfg)
    stats = err.value.diagnostics
    assert [s.level for s in stats] == [0, 1]


def test_against_quadrature() -> None:
    K, T = 0.25, 1.0
    grid = joint_density_for(STYLIZED, T)
    quad = price_vol_put(STYLIZED, K, T, grid).value
    eps = 5e-4
    estimate = price_vol_put(STYLIZED, K, T, mc=MlmcConfig(eps=eps), method="mlmc")
    assert abs(estimate.value - quad) <= 4 * estimate.std_error + eps
