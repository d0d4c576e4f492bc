#!/usr/bin/env python3

# Copyright (C) 2020 The besqlib developers
#
# This file is part of besqlib. It is subject to the license terms in the
# LICENSE file found in the top-level directory of this distribution.
#
# No part of besqlib including this file, may be copied, modified, propagated,
# or distributed except according to the terms contained in the LICENSE file.

"Tests for `besqlib.utils` module."

import math

import numpy as np
import pytest

from besqlib.utils import (
    batch_means_se,
    cholesky_pd,
    ensure_finite,
    ensure_non_negative,
    ensure_positive,
    ensure_psd,
    ensure_symmetric,
    increasing_grid,
    min_eigenvalue,
    normal_quantile,
    psd_project,
    quad_positive,
    sqrtm_psd,
    trapezoid_weights,
)


def test_ensure() -> None:
    ensure_positive(1.0)
    ensure_non_negative(0.0)
    ensure_finite([1.0, 2.0])
    with pytest.raises(ValueError, match="non-positive s0: "):
        ensure_positive(0.0, "s0")
    with pytest.raises(ValueError, match="negative time: "):
        ensure_non_negative([1.0, -1.0], "time")
    with pytest.raises(ValueError, match="non-finite x: "):
        ensure_finite(np.nan, "x")


def test_increasing_grid() -> None:
    g = increasing_grid([0, 1, 2.5])
    assert g.dtype == float
    assert np.array_equal(increasing_grid(3.0), [3.0])

    with pytest.raises(ValueError, match="times not strictly increasing: "):
        increasing_grid([0, 1, 1], "times")
    with pytest.raises(ValueError, match="non-positive grid start: "):
        increasing_grid([0, 1], positive=True)
    with pytest.raises(ValueError, match="negative grid start: "):
        increasing_grid([-1, 1])
    with pytest.raises(ValueError, match="non-finite grid: "):
        increasing_grid([0, np.inf])
    with pytest.raises(ValueError, match="must be a non-empty 1-d sequence"):
        increasing_grid([])


def test_matrices() -> None:
    m = np.array([[2.0, 1.0], [1.0, -1.0]])
    assert np.allclose(ensure_symmetric(m, "m"), m)
    with pytest.raises(ValueError, match="m is not symmetric"):
        ensure_symmetric(np.array([[1.0, 2.0], [0.0, 1.0]]), "m")
    with pytest.raises(ValueError, match="m is not a square matrix: "):
        ensure_symmetric(np.ones((2, 3)), "m")

    with pytest.raises(ValueError, match="m is not positive semidefinite: "):
        ensure_psd(m, "m")
    # tiny negative eigenvalues are clipped
    p = ensure_psd(np.array([[1.0, 1.0], [1.0, 1.0 - 1e-15]]), "p")
    assert min_eigenvalue(p) > -1e-14

    projected = psd_project(m)
    assert min_eigenvalue(projected) > -1e-12
    projected = psd_project(m, floor=0.1)
    assert min_eigenvalue(projected) == pytest.approx(0.1)

    s = np.array([[4.0, 1.0], [1.0, 3.0]])
    root = sqrtm_psd(s)
    assert np.allclose(root @ root, s)
    assert np.allclose(root, root.T)

    low = cholesky_pd(s, "s")
    assert np.allclose(low @ low.T, s)
    with pytest.raises(ValueError, match="s is not positive definite"):
        cholesky_pd(np.array([[1.0, 2.0], [2.0, 1.0]]), "s")

    stack = np.stack([m, s])
    assert min_eigenvalue(stack).shape == (2,)


def test_trapezoid_weights() -> None:
    g = np.array([0.0, 0.5, 2.0, 2.5])
    w = trapezoid_weights(g)
    assert np.allclose(w, [0.25, 1.0, 1.0, 0.25])
    assert w.sum() == pytest.approx(2.5)
    # exact on linear functions
    assert np.dot(w, 3 * g + 1) == pytest.approx(1.5 * 2.5 ** 2 + 2.5)
    assert np.array_equal(trapezoid_weights([1.0]), [0.0])


def test_quad_positive() -> None:
    # normal density far from the origin
    mu, sd = 500.0, 2.0

    def fn(x: float) -> float:
        return math.exp(-0.5 * ((x - mu) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))

    assert quad_positive(fn, mu, sd) == pytest.approx(1.0, rel=1e-9)

    # exponential law, starting from a positive lower bound
    total = quad_positive(lambda x: math.exp(-x), 1.0, 1.0, lower=2.0)
    assert total == pytest.approx(math.exp(-2.0), rel=1e-9)


def test_normal_quantile() -> None:
    assert normal_quantile(0.99) == pytest.approx(2.5758293035489, rel=1e-10)
    assert normal_quantile(0.95) == pytest.approx(1.9599639845401, rel=1e-10)
    with pytest.raises(ValueError, match="confidence level not in"):
        normal_quantile(1.0)


def test_batch_means_se() -> None:
    assert batch_means_se(np.ones(1000)) == 0.0
    assert batch_means_se([1.0]) == 0.0

    x = np.arange(10.0)
    assert batch_means_se(x) == pytest.approx(np.std(x, ddof=1) / np.sqrt(10))

    # batch means of iid draws are close to the plain standard error
    rng = np.random.default_rng(0)
    x = rng.standard_normal(100_000)
    plain = np.std(x, ddof=1) / np.sqrt(x.size)
    assert batch_means_se(x) == pytest.approx(plain, rel=0.25)
