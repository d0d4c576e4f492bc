#!/usr/bin/env python3

# Copyright (C) 2020 The besqlib developers
#
# This file is part of besqlib. It is subject to the license terms in the
# LICENSE file found in the top-level directory of this distribution.
#
# No part of besqlib including this file, may be copied, modified, propagated,
# or distributed except according to the terms contained in the LICENSE file.

"""Special functions.

Log-space kernels for the Gamma, modified Bessel, confluent
hypergeometric and Whittaker functions, plus the noncentral
chi-squared density as a Poisson mixture.

Real-order Bessel functions are delegated to the exponentially scaled
scipy.special.ive, whose series/asymptotic regime switching is the
Amos one; the complex-order variant needed by the Laplace inversion in
the Bessel order is an ascending series summed in log space.

All functions are pure and vectorized over their array arguments.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import special

from .alias import Real

logger = logging.getLogger(__name__)

LOG2 = np.log(2.0)


@dataclass(frozen=True)
class EvalPolicy:
    """Truncation policy of the series kernels.

    rel_tol is the relative size of the neglected terms,
    max_terms the largest number of terms ever summed,
    overflow_guard the largest exponent (log scale) exponentiated.
    """

    rel_tol: float = 1e-12
    max_terms: int = 500
    overflow_guard: float = 700.0

    def __post_init__(self) -> None:
        if self.rel_tol <= 0:
            raise ValueError(f"non-positive rel_tol: {self.rel_tol}")
        if self.max_terms < 1:
            raise ValueError(f"max_terms < 1: {self.max_terms}")
        if self.overflow_guard <= 0:
            m = f"non-positive overflow_guard: {self.overflow_guard}"
            raise ValueError(m)


DEFAULT_POLICY = EvalPolicy()


def log_gamma(x: Real) -> Real:
    "Return ln Γ(x) for x > 0."

    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError(f"non-positive argument: {x}")
    return special.gammaln(x)


def _log_bessel_i_series(nu: Real, z: Real, n_terms: int) -> Real:
    "Ascending series of log I_ν(z), z > 0, real ν > -1."

    nu = np.asarray(nu, dtype=float)
    z = np.asarray(z, dtype=float)
    k = np.arange(n_terms).reshape((-1,) + (1,) * np.broadcast(nu, z).ndim)
    terms = (
        (2 * k + nu) * np.log(z / 2)
        - special.gammaln(k + 1)
        - special.gammaln(k + nu + 1)
    )
    return special.logsumexp(terms, axis=0)


def bessel_i_log(
    nu: Real, z: Real, policy: EvalPolicy = DEFAULT_POLICY
) -> Real:
    """Return log I_ν(z), the log of the modified Bessel function.

    ν ≥ 0 and z ≥ 0; log I_ν(0) is 0 for ν = 0 and -inf otherwise.
    The exponentially scaled e^{-z} I_ν(z) is computed first, so that
    no overflow occurs for z up to 1e6 and beyond; when it underflows
    (large order, small argument) the ascending series is used instead.
    """

    nu = np.asarray(nu, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(nu < 0):
        raise ValueError(f"negative order: {nu}")
    if np.any(z < 0):
        raise ValueError(f"negative argument: {z}")

    nu, z = np.broadcast_arrays(nu, z)
    with np.errstate(divide="ignore"):
        result = np.log(special.ive(nu, z)) + z
    bad = (z > 0) & ~np.isfinite(result)
    if np.any(bad):
        series = _log_bessel_i_series(
            nu, np.where(bad, z, 1.0), policy.max_terms
        )
        result = np.where(bad, series, result)
    return result[()] if result.ndim == 0 else result


def bessel_i_log_complex(
    nu: np.ndarray, z: Real, policy: EvalPolicy = DEFAULT_POLICY
) -> np.ndarray:
    """Return log I_ν(z) for complex order ν and real z ≥ 0.

    The ascending series Σ (z/2)^{2k+ν} / (k! Γ(k+ν+1)) is summed in
    log space with the complex log-gamma function; Re ν > -1 is
    required. nu and z are broadcast against each other, but
    the log-gamma factors are evaluated on the shape of nu only.
    The result is a complex logarithm: its imaginary part is the phase
    of I_ν(z) up to multiples of 2π.
    """

    nu = np.asarray(nu, dtype=complex)
    z = np.asarray(z, dtype=float)
    if np.any(nu.real <= -1):
        raise ValueError(f"order real part not > -1: {nu}")
    if np.any(z < 0):
        raise ValueError(f"negative argument: {z}")

    z_max = float(np.max(z, initial=0.0))
    n_terms = int(np.ceil(z_max / 2 + 10 * np.sqrt(z_max) + 30))
    if n_terms > policy.max_terms:
        logger.debug("series truncated at %d terms", policy.max_terms)
        n_terms = policy.max_terms

    ndim = np.broadcast(nu, z).ndim
    k = np.arange(n_terms).reshape((-1,) + (1,) * ndim)
    nu_k = nu.reshape((1,) * (ndim - nu.ndim) + nu.shape)
    log_gamma_k = special.gammaln(k + 1) + special.loggamma(k + nu_k + 1)
    zz = np.where(z > 0, z, 1.0)
    terms = (2 * k + nu) * np.log(zz / 2) - log_gamma_k
    shift = np.max(terms.real, axis=0)
    result = shift + np.log(np.sum(np.exp(terms - shift), axis=0))
    return np.where(z > 0, result, complex(-np.inf, 0.0))


def hyp1f1(a: Real, c: Real, z: Real) -> Real:
    "Return Kummer's confluent hypergeometric function ₁F₁(a; c; z)."

    c = np.asarray(c, dtype=float)
    if np.any((c <= 0) & (c == np.floor(c))):
        raise ValueError(f"non-positive integer c: {c}")
    return special.hyp1f1(a, c, z)


def whittaker_m(k: Real, m: Real, z: Real) -> Real:
    """Return the Whittaker function M_{k,m}(z), z ≥ 0.

    M_{k,m}(z) = exp(-z/2) z^{m+1/2} ₁F₁(m-k+1/2; 1+2m; z),
    with the elementary prefactor evaluated in log space.
    """

    k = np.asarray(k, dtype=float)
    m = np.asarray(m, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError(f"negative argument: {z}")
    c = 1 + 2 * m
    if np.any((c <= 0) & (c == np.floor(c))):
        raise ValueError(f"1+2m is a non-positive integer: {c}")

    zz = np.where(z > 0, z, 1.0)
    log_prefactor = -zz / 2 + (m + 0.5) * np.log(zz)
    value = np.exp(log_prefactor) * hyp1f1((m + 0.5) - k, c, zz)
    return np.where(z > 0, value, 0.0)


def _check_ncx2(x: Real, df: float, lam: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError(f"negative argument: {x}")
    if df <= 0:
        raise ValueError(f"non-positive degrees of freedom: {df}")
    if lam < 0:
        raise ValueError(f"negative noncentrality: {lam}")
    return x


def _poisson_window(
    x: np.ndarray, df: float, lam: float, policy: EvalPolicy
) -> Tuple[np.ndarray, np.ndarray]:
    """Indices j and Poisson(λ/2) log-weights covering the mixture.

    The window spans from the Poisson mode to the components whose
    mean df + 2j matches the extreme values of x, plus ten standard
    deviations of slack on both sides.
    """

    half = lam / 2
    j_mode = int(np.floor(half))
    x_min = float(np.min(x, initial=np.inf)) if x.size else 0.0
    x_max = float(np.max(x, initial=0.0))
    j_x_min = int(max(0.0, (x_min - df) / 2))
    j_x_max = int(max(0.0, (x_max - df) / 2))
    width = int(np.ceil(10 * np.sqrt(half + x_max / 2) + 20))
    j_lo = max(0, min(j_mode, j_x_min) - width)
    j_hi = max(j_mode, j_x_max) + width
    if j_hi - j_lo + 1 > policy.max_terms:
        logger.warning(
            "noncentral chi-squared mixture truncated at %d terms",
            policy.max_terms,
        )
        center = (j_lo + j_hi) // 2
        j_lo = max(0, center - policy.max_terms // 2)
        j_hi = j_lo + policy.max_terms - 1
    j = np.arange(j_lo, j_hi + 1)
    log_w = -half + special.xlogy(j, half) - special.gammaln(j + 1)
    return j, log_w


def _log_chi2(x: np.ndarray, k: Real) -> np.ndarray:
    return (
        special.xlogy(k / 2 - 1, x) - x / 2 - (k / 2) * LOG2
        - special.gammaln(k / 2)
    )


def ncx2_logpdf(
    x: Real, df: float, lam: float, policy: EvalPolicy = DEFAULT_POLICY
) -> Real:
    """Return the log density of the noncentral chi-squared law χ'²(df, λ).

    Poisson mixture of central chi-squared densities with df + 2j
    degrees of freedom, j ~ Poisson(λ/2), summed in log space.
    """

    x = _check_ncx2(x, df, lam)
    if lam == 0:
        with np.errstate(divide="ignore"):
            return _log_chi2(x, df)

    j, log_w = _poisson_window(x, df, lam, policy)
    xx = x[..., None]
    with np.errstate(divide="ignore"):
        terms = log_w + _log_chi2(xx, df + 2 * j)
    return special.logsumexp(terms, axis=-1)


def ncx2_pdf(
    x: Real, df: float, lam: float, policy: EvalPolicy = DEFAULT_POLICY
) -> Real:
    "Return the density of the noncentral chi-squared law χ'²(df, λ)."

    return np.exp(ncx2_logpdf(x, df, lam, policy))


def ncx2_cdf(
    x: Real, df: float, lam: float, policy: EvalPolicy = DEFAULT_POLICY
) -> Real:
    """Return the distribution function of χ'²(df, λ).

    Poisson mixture of regularized lower incomplete gamma functions,
    i.e. the term-by-term integral of ncx2_pdf.
    """

    x = _check_ncx2(x, df, lam)
    if lam == 0:
        return special.gammainc(df / 2, x / 2)
    j, log_w = _poisson_window(x, df, lam, policy)
    cdf = special.gammainc(df / 2 + j, x[..., None] / 2)
    return np.sum(np.exp(log_w) * cdf, axis=-1)

