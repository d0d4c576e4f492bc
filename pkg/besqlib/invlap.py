#!/usr/bin/env python3

# Copyright (C) 2020 The besqlib developers
#
# This file is part of besqlib. It is subject to the license terms in the
# LICENSE file found in the top-level directory of this distribution.
#
# No part of besqlib including this file, may be copied, modified, propagated,
# or distributed except according to the terms contained in the LICENSE file.

"""Numerical inversion of Laplace transforms.

* fixed Talbot contour (Abate and Valkó 2004)
  https://doi.org/10.1002/nme.995
* Fourier series with Euler summation (Abate and Whitt 1995)
  https://doi.org/10.1287/ijoc.7.1.36

The transform F is called once per evaluation time with the complex
array of nodes p (shape (K,)); it returns values of shape (K, ...),
the trailing axes being any batch of transforms inverted together.
With log_space=True F returns log F(p), and the exponential factors
are fused with it before exponentiation.
"""

from math import comb

import numpy as np

from .alias import Transform

# default contour parameters
TALBOT_R_FACTOR = 0.4  # r = 2M/5
EULER_A = 18.4  # discretization error about e^{-A}
EULER_M = 11  # binomial averaging terms


def _evaluate(
    F: Transform,
    p: np.ndarray,
    log_shift: np.ndarray,
    log_space: bool,
) -> np.ndarray:
    "Return exp(log_shift)·F(p), broadcasting the shift on the first axis."

    values = np.asarray(F(p))
    shift = log_shift.reshape((-1,) + (1,) * (values.ndim - 1))
    if log_space:
        return np.exp(shift + values)
    return np.exp(shift) * values


def talbot(
    F: Transform,
    t: float,
    nodes: int = 32,
    r_factor: float = TALBOT_R_FACTOR,
    log_space: bool = False,
) -> np.ndarray:
    """Fixed Talbot inversion of F at time t > 0.

    Contour p(θ) = (r/t) θ (cot θ + i), θ = kπ/M, k = 0..M-1, r = r_factor·M.
    """

    if t <= 0:
        raise ValueError(f"non-positive time: {t}")
    if nodes < 8:
        raise ValueError(f"too few nodes: {nodes}")

    M = nodes
    r = r_factor * M
    theta = np.pi * np.arange(1, M) / M
    cot = 1 / np.tan(theta)
    p = np.empty(M, dtype=complex)
    p[0] = r / t
    p[1:] = r * theta * (cot + 1j) / t
    sigma = np.zeros(M)
    sigma[1:] = theta + (theta * cot - 1) * cot

    terms = _evaluate(F, p, t * p, log_space)
    weights = (1 + 1j * sigma).reshape((-1,) + (1,) * (terms.ndim - 1))
    terms = (weights * terms).real
    terms[0] *= 0.5
    return r / (M * t) * np.sum(terms, axis=0)


def euler_abate_whitt(
    F: Transform,
    t: float,
    nodes: int = 15 + EULER_M,
    A: float = EULER_A,
    log_space: bool = False,
) -> np.ndarray:
    """Fourier-series inversion with Euler summation of F at time t > 0.

    nodes = n + m: n terms are summed directly, the last m + 1 partial
    sums are averaged with binomial weights 2^{-m} C(m, j).
    """

    if t <= 0:
        raise ValueError(f"non-positive time: {t}")
    if nodes < 8 + EULER_M:
        raise ValueError(f"too few nodes: {nodes}")

    m = EULER_M
    n = nodes - m
    k = np.arange(n + m + 1)
    p = (A + 2j * np.pi * k) / (2 * t)
    log_shift = np.full(k.size, A / 2, dtype=complex)
    terms = _evaluate(F, p, log_shift, log_space).real / t
    terms[0] *= 0.5
    signs = np.where(k % 2 == 0, 1.0, -1.0)
    terms = signs.reshape((-1,) + (1,) * (terms.ndim - 1)) * terms
    partial = np.cumsum(terms, axis=0)[n:]
    binom = np.array([comb(m, j) for j in range(m + 1)]) / 2 ** m
    return np.tensordot(binom, partial, axes=(0, 0))


INVERTERS = {"talbot": talbot, "euler_abate_whitt": euler_abate_whitt}
