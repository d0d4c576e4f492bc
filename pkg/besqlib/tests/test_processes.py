#!/usr/bin/env python3

# Copyright (C) 2020 The besqlib developers
#
# This file is part of besqlib. It is subject to the license terms in the
# LICENSE file found in the top-level directory of this distribution.
#
# No part of besqlib including this file, may be copied, modified, propagated,
# or distributed except according to the terms contained in the LICENSE file.

"Tests for `besqlib.processes` module."

import math

import numpy as np
import pytest
from scipy import stats

from besqlib.processes import (
    BesqParams,
    MmmParams,
    SquareRootParams,
    besq_density,
    besq_inverse_moment,
    besq_laplace,
    besq_sample_transition,
    cir_euler_step,
    cir_mean,
    cir_sample_transition,
    cir_scale,
    cir_transition_density,
    mmm_gop_path,
    mmm_terminal_sample,
    mmm_y_path,
    phi_time,
)
from besqlib.randkit import RngStream
from besqlib.utils import quad_positive

STYLIZED = MmmParams(s0=1.0, alpha0=0.05, eta=0.05, r=0.05)


def test_params() -> None:
    assert STYLIZED.y0 == pytest.approx(20.0)
    assert STYLIZED.alpha(0.0) == pytest.approx(0.05)
    assert STYLIZED.savings(1.0) == pytest.approx(math.exp(0.05))
    sr = STYLIZED.square_root()
    assert (sr.a, sr.b, sr.sigma) == (1.0, 0.05, 1.0)
    assert sr.y0 == pytest.approx(20.0)
    assert sr.dimension == 4.0

    assert BesqParams(3.0, 1.0).nu == 0.5
    assert not BesqParams(0.0, 0.0).samplable
    assert BesqParams(0.0, 1.0).samplable

    with pytest.raises(ValueError, match="non-positive s0: "):
        MmmParams(0.0, 0.05, 0.05)
    with pytest.raises(ValueError, match="non-positive eta: "):
        MmmParams(1.0, 0.05, 0.0)
    with pytest.raises(ValueError, match="negative delta: "):
        BesqParams(-1.0, 1.0)
    with pytest.raises(ValueError, match="non-positive sigma: "):
        SquareRootParams(1.0, 0.1, 0.0, 1.0)


def test_phi_time() -> None:
    p = MmmParams(1.0, 0.05, 0.05, phi0=0.3)
    assert phi_time(p, 0.0) == pytest.approx(0.3)
    expected = 0.3 + 0.05 * math.expm1(0.05 * 2.0) / (4 * 0.05)
    assert phi_time(p, 2.0) == pytest.approx(expected, rel=1e-14)
    # series limit for tiny η·t
    t = 1e-10
    assert phi_time(STYLIZED, t) == pytest.approx(0.05 * t / 4, rel=1e-12)

    values = phi_time(STYLIZED, np.array([0.0, 1.0, 2.0]))
    assert np.all(np.diff(values) > 0)
    with pytest.raises(ValueError, match="negative time: "):
        phi_time(STYLIZED, -1.0)


@pytest.mark.parametrize("delta", [3.0, 4.0, 7.0])
def test_besq_density_normalization(delta: float) -> None:
    x, t = 1.0, 0.5
    total = quad_positive(
        lambda y: besq_density(t, x, y, delta), x + delta * t, 2 * np.sqrt(t * (x + t))
    )
    assert total == pytest.approx(1.0, abs=1e-8)

    # Laplace transform
    lam = 0.7
    lt = quad_positive(
        lambda y: math.exp(-lam * y) * besq_density(t, x, y, delta),
        x + delta * t,
        2 * np.sqrt(t * (x + t)),
    )
    assert lt == pytest.approx(besq_laplace(x, t, lam, delta), rel=1e-8)


def test_besq_density() -> None:
    # δ < 2 uses the chi-squared mixture
    total = quad_positive(lambda y: besq_density(0.5, 1.0, y, 1.0), 1.5, 1.5)
    assert total == pytest.approx(1.0, abs=1e-6)

    # start at zero: gamma law t·χ²_δ
    y = np.array([0.1, 1.0, 3.0])
    expected = stats.chi2.pdf(y / 0.5, 4.0) / 0.5
    assert np.allclose(besq_density(0.5, 0.0, y, 4.0), expected, rtol=1e-12)

    # δ = 4 against the noncentral chi-squared law of X_t/t
    expected = stats.ncx2.pdf(y / 0.5, 4.0, 2.0 / 0.5) / 0.5
    assert np.allclose(besq_density(0.5, 2.0, y, 4.0), expected, rtol=1e-8)

    with pytest.raises(ValueError, match="non-positive time: "):
        besq_density(0.0, 1.0, 1.0, 4.0)
    with pytest.raises(ValueError, match="non-positive end: "):
        besq_density(1.0, 1.0, 0.0, 4.0)


def test_besq_laplace() -> None:
    assert besq_laplace(1.0, 1.0, 0.0, 4.0) == 1.0
    expected = math.exp(-1.0 / 3.0) * 3.0 ** -2
    assert besq_laplace(1.0, 1.0, 1.0, 4.0) == pytest.approx(expected, rel=1e-14)
    with pytest.raises(ValueError, match="negative lambda: "):
        besq_laplace(1.0, 1.0, -1.0, 4.0)


def test_besq_inverse_moment() -> None:
    x, t = 1.5, 0.8
    expected = quad_positive(
        lambda y: besq_density(t, x, y, 4.0) / y, x + 4 * t, 2 * np.sqrt(t * (x + t))
    )
    assert besq_inverse_moment(x, t) == pytest.approx(expected, rel=1e-8)
    # strict local martingale: E[1/X_t] < 1/x
    assert besq_inverse_moment(x, t) < 1 / x


@pytest.mark.parametrize("delta", [1.0, 4.0])
def test_besq_sample_transition(delta: float) -> None:
    n = 100_000
    x, dt = 1.0, 0.5
    samples = besq_sample_transition(RngStream(4), x, delta, dt, n)
    assert np.all(samples >= 0)
    for lam in (0.3, 1.0, 3.0):
        f = np.exp(-lam * samples)
        se = np.std(f) / np.sqrt(n)
        assert abs(np.mean(f) - besq_laplace(x, dt, lam, delta)) < 4 * se


def test_cir() -> None:
    p = SquareRootParams(a=0.8, b=0.5, sigma=0.6, y0=1.0)
    c, decay = cir_scale(p, 1.0)
    assert decay == pytest.approx(math.exp(-0.5))
    assert c == pytest.approx(0.36 * (1 - math.exp(-0.5)) / 2.0)

    # b = 0: BESQ-like limit
    q = SquareRootParams(a=1.0, b=0.0, sigma=2.0, y0=1.0)
    assert cir_scale(q, 0.5) == pytest.approx((0.5, 1.0))
    assert cir_mean(q, 1.0, 0.5) == pytest.approx(1.5)

    total = quad_positive(
        lambda y: cir_transition_density(p, 1.0, y, 1.0), 1.0, 0.5
    )
    assert total == pytest.approx(1.0, abs=1e-8)

    mean = quad_positive(
        lambda y: y * cir_transition_density(p, 1.0, y, 1.0), 1.0, 0.5
    )
    assert mean == pytest.approx(cir_mean(p, 1.0, 1.0), rel=1e-8)

    n = 100_000
    samples = cir_sample_transition(RngStream(6), p, 1.0, 1.0, n)
    se = np.std(samples) / np.sqrt(n)
    assert abs(np.mean(samples) - cir_mean(p, 1.0, 1.0)) < 4 * se
    law = stats.ncx2(p.dimension, decay / c)
    assert stats.kstest(samples / c, law.cdf).pvalue > 1e-3


def test_cir_euler_step() -> None:
    p = SquareRootParams(a=1.0, b=0.5, sigma=1.0, y0=1.0)
    y = np.array([1.0, -0.5])
    dw = np.array([0.1, 0.2])
    step = cir_euler_step(None, p, y, 0.25, dw)
    expected = [1.0 + (1.0 - 0.5) * 0.25 + 0.1, -0.5 + 0.25]
    assert np.allclose(step, expected)

    a = cir_euler_step(RngStream(1), p, y, 0.25)
    b = cir_euler_step(RngStream(1), p, y, 0.25)
    assert np.array_equal(a, b)

    with pytest.raises(ValueError, match="either a stream or increments"):
        cir_euler_step(None, p, y, 0.25)


def test_mmm_paths() -> None:
    times = np.array([0.0, 0.5, 1.0, 2.0])
    paths = mmm_gop_path(RngStream(3), STYLIZED, times, 50)
    assert paths.shape == (50, 4)
    assert np.all(paths[:, 0] == STYLIZED.s0)
    assert np.all(paths > 0)

    single = mmm_gop_path(RngStream(3), STYLIZED, times)
    assert single.shape == (4,)

    y = mmm_y_path(RngStream(3), STYLIZED, times, 50)
    assert np.allclose(y[:, 0], STYLIZED.y0)
    # S_t = e^{rt} α_t Y_t
    assert np.allclose(paths, STYLIZED.savings(times) * STYLIZED.alpha(times) * y)

    with pytest.raises(ValueError, match="times not strictly increasing: "):
        mmm_gop_path(RngStream(3), STYLIZED, [1.0, 0.5])


def test_mmm_terminal_sample() -> None:
    n = 100_000
    T = 2.0
    dphi = phi_time(STYLIZED, T)
    one = mmm_terminal_sample(RngStream(1), STYLIZED, T, n)
    # E[s̄_T] = s0 + 4Δφ
    se = np.std(one) / np.sqrt(n)
    assert abs(np.mean(one) - (STYLIZED.s0 + 4 * dphi)) < 4 * se

    # tower property: several exact steps give the same law
    many = mmm_terminal_sample(RngStream(2), STYLIZED, T, 20_000, n_steps=8)
    assert stats.ks_2samp(one[:20_000], many).pvalue > 1e-3

    with pytest.raises(ValueError, match="n_steps < 1: "):
        mmm_terminal_sample(RngStream(1), STYLIZED, T, 10, n_steps=0)
    with pytest.raises(ValueError, match="non-positive maturity: "):
        mmm_terminal_sample(RngStream(1), STYLIZED, 0.0, 10)
