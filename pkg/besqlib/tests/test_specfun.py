#!/usr/bin/env python3

# Copyright (C) 2020 The besqlib developers
#
# This file is part of besqlib. It is subject to the license terms in the
# LICENSE file found in the top-level directory of this distribution.
#
# No part of besqlib including this file, may be copied, modified, propagated,
# or distributed except according to the terms contained in the LICENSE file.

"Tests for `besqlib.specfun` module."

import math

import numpy as np
import pytest
from scipy import special, stats

from besqlib.specfun import (
    EvalPolicy,
    bessel_i_log,
    bessel_i_log_complex,
    hyp1f1,
    log_gamma,
    ncx2_cdf,
    ncx2_logpdf,
    ncx2_pdf,
    whittaker_m,
)


def test_log_gamma() -> None:
    for x in (0.1, 0.5, 1.0, 2.5, 10.0, 171.5, 1e4):
        assert log_gamma(x) == pytest.approx(math.lgamma(x), rel=1e-13)

    xs = np.array([0.5, 1.5, 2.5])
    assert np.allclose(log_gamma(xs), [math.lgamma(x) for x in xs], rtol=1e-13)

    with pytest.raises(ValueError, match="non-positive argument: "):
        log_gamma(0.0)
    with pytest.raises(ValueError, match="non-positive argument: "):
        log_gamma(-1.5)


def test_bessel_i_log() -> None:
    for nu in (0.0, 0.5, 1.0, 2.5, 7.0):
        for z in (1e-3, 0.5, 3.0, 40.0):
            expected = math.log(special.iv(nu, z))
            approx = pytest.approx(expected, rel=1e-11, abs=1e-14)
            assert bessel_i_log(nu, z) == approx

    assert bessel_i_log(0.0, 0.0) == 0.0
    assert bessel_i_log(1.0, 0.0) == -np.inf

    # no overflow for large arguments
    z = 1e6
    expected = z - 0.5 * math.log(2 * math.pi * z)
    assert bessel_i_log(1.0, z) == pytest.approx(expected, rel=1e-9)

    # large order, tiny argument: e^{-z} I_ν(z) underflows
    nu, z = 200.0, 1e-3
    leading = nu * math.log(z / 2) - math.lgamma(nu + 1)
    assert bessel_i_log(nu, z) == pytest.approx(leading, rel=1e-9)

    values = bessel_i_log(np.array([0.0, 1.0]), np.array([1.0, 2.0]))
    assert values.shape == (2,)

    with pytest.raises(ValueError, match="negative order: "):
        bessel_i_log(-0.5, 1.0)
    with pytest.raises(ValueError, match="negative argument: "):
        bessel_i_log(1.0, -1.0)


def test_bessel_i_log_complex() -> None:
    # real orders agree with the real-order function
    nu = np.array([0.0, 0.5, 1.0, 3.0])
    for z in (0.3, 5.0, 60.0):
        values = bessel_i_log_complex(nu, z)
        assert np.allclose(values.real, bessel_i_log(nu, z), rtol=1e-10)
        assert np.allclose(values.imag, 0.0, atol=1e-10)

    # recurrence I_{ν-1}(z) - I_{ν+1}(z) = (2ν/z) I_ν(z) for complex ν
    nu = np.array([2.0 + 1.5j, 3.5 - 2.0j, 1.2 + 0.3j])
    z = 4.0
    lhs = np.exp(bessel_i_log_complex(nu - 1, z)) - np.exp(
        bessel_i_log_complex(nu + 1, z)
    )
    rhs = 2 * nu / z * np.exp(bessel_i_log_complex(nu, z))
    assert np.allclose(lhs, rhs, rtol=1e-10)

    assert bessel_i_log_complex(np.array([1.0 + 1j]), 0.0)[0].real == -np.inf

    with pytest.raises(ValueError, match="order real part not > -1: "):
        bessel_i_log_complex(np.array([-1.5 + 0j]), 1.0)
    with pytest.raises(ValueError, match="negative argument: "):
        bessel_i_log_complex(np.array([1.0 + 0j]), -1.0)


def _kummer_series(a: float, c: float, z: float, n_terms: int = 200) -> float:
    terms = [1.0]
    for n in range(n_terms):
        terms.append(terms[-1] * (a + n) / (c + n) * z / (n + 1))
    return math.fsum(terms)


def test_hyp1f1() -> None:
    for a, c, z in ((0.5, 1.5, 2.0), (-1.3, 2.2, 0.7), (2.0, 3.5, 10.0)):
        expected = _kummer_series(a, c, z)
        assert hyp1f1(a, c, z) == pytest.approx(expected, rel=1e-10)

    # ₁F₁(a; a; z) = e^z
    assert hyp1f1(1.7, 1.7, 3.0) == pytest.approx(math.exp(3.0), rel=1e-13)

    with pytest.raises(ValueError, match="non-positive integer c: "):
        hyp1f1(1.0, -2.0, 1.0)
    with pytest.raises(ValueError, match="non-positive integer c: "):
        hyp1f1(1.0, 0.0, 1.0)


def test_whittaker_m() -> None:
    # k = m + 1/2: ₁F₁(0; 1+2m; z) = 1, also when m + 1/2 rounds
    for m in (0.0, 0.5, 1.75, 1.7):
        k = m + 0.5
        for z in (0.1, 2.0, 30.0):
            expected = math.exp(-z / 2) * z ** (m + 0.5)
            assert whittaker_m(k, m, z) == pytest.approx(expected, rel=1e-12)

    k, m, z = -1.0, 0.75, 3.0
    series = _kummer_series(m - k + 0.5, 1 + 2 * m, z)
    expected = math.exp(-z / 2) * z ** (m + 0.5) * series
    assert whittaker_m(k, m, z) == pytest.approx(expected, rel=1e-10)

    assert whittaker_m(-1.0, 0.5, 0.0) == 0.0

    with pytest.raises(ValueError, match="negative argument: "):
        whittaker_m(-1.0, 0.5, -1.0)
    with pytest.raises(ValueError, match="1\\+2m is a non-positive integer: "):
        whittaker_m(0.0, -1.0, 1.0)


def test_ncx2() -> None:
    x = np.array([0.05, 0.5, 2.0, 7.0, 25.0])
    for df, lam in ((4.0, 3.0), (1.0, 0.5), (0.5, 10.0), (3.0, 80.0)):
        expected = stats.ncx2.pdf(x, df, lam)
        assert np.allclose(ncx2_pdf(x, df, lam), expected, rtol=1e-7, atol=1e-300)
        expected = stats.ncx2.cdf(x, df, lam)
        assert np.allclose(ncx2_cdf(x, df, lam), expected, rtol=1e-8, atol=1e-14)

    # central law
    assert np.allclose(ncx2_pdf(x, 3.0, 0.0), stats.chi2.pdf(x, 3.0), rtol=1e-10)
    assert np.allclose(
        ncx2_logpdf(x, 3.0, 0.0), stats.chi2.logpdf(x, 3.0), rtol=1e-10
    )

    assert ncx2_pdf(0.0, 4.0, 2.0) == 0.0
    assert ncx2_cdf(0.0, 4.0, 2.0) == 0.0

    with pytest.raises(ValueError, match="negative argument: "):
        ncx2_pdf(-1.0, 4.0, 1.0)
    with pytest.raises(ValueError, match="non-positive degrees of freedom: "):
        ncx2_pdf(1.0, 0.0, 1.0)
    with pytest.raises(ValueError, match="negative noncentrality: "):
        ncx2_cdf(1.0, 2.0, -1.0)


def test_eval_policy() -> None:
    with pytest.raises(ValueError, match="non-positive rel_tol: "):
        EvalPolicy(rel_tol=0.0)
    with pytest.raises(ValueError, match="max_terms < 1: "):
        EvalPolicy(max_terms=0)
