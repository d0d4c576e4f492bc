#!/usr/bin/env python3

# Copyright (C) 2020 The besqlib developers
#
# This file is part of besqlib. It is subject to the license terms in the
# LICENSE file found in the top-level directory of this distribution.
#
# No part of besqlib including this file, may be copied, modified, propagated,
# or distributed except according to the terms contained in the LICENSE file.

"""Assorted validation, linear algebra and quadrature utilities.

Every kernel of the package validates its input through these
helpers, so that error messages are uniform across modules.
"""

from typing import Callable

import numpy as np
from scipy import integrate, linalg, stats

from .alias import Grid, Matrix, Real, Vector


def ensure_positive(value: Real, var_name: str = "value") -> None:
    if np.any(np.asarray(value) <= 0):
        raise ValueError(f"non-positive {var_name}: {value}")


def ensure_non_negative(value: Real, var_name: str = "value") -> None:
    if np.any(np.asarray(value) < 0):
        raise ValueError(f"negative {var_name}: {value}")


def increasing_grid(
    grid: Grid, var_name: str = "grid", positive: bool = False
) -> Vector:
    """Return the grid as a 1-d float array, ensuring it is increasing.

    With positive=True the grid must also lie in (0, ∞),
    otherwise in [0, ∞).
    """

    g = np.atleast_1d(np.asarray(grid, dtype=float))
    if g.ndim != 1 or g.size == 0:
        raise ValueError(f"{var_name} must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(g)):
        raise ValueError(f"non-finite {var_name}: {g}")
    if np.any(np.diff(g) <= 0):
        raise ValueError(f"{var_name} not strictly increasing: {g}")
    if positive and g[0] <= 0:
        raise ValueError(f"non-positive {var_name} start: {g[0]}")
    if g[0] < 0:
        raise ValueError(f"negative {var_name} start: {g[0]}")
    return g


def symmetrize(m: Matrix) -> Matrix:
    "Return (M + Mᵀ)/2, acting on the last two axes."

    m = np.asarray(m, dtype=float)
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def ensure_symmetric(m: Matrix, var_name: str, tol: float = 1e-12) -> Matrix:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{var_name} is not a square matrix: {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
    if np.max(np.abs(m - m.T), initial=0.0) > tol * scale:
        raise ValueError(f"{var_name} is not symmetric")
    return symmetrize(m)


def ensure_psd(m: Matrix, var_name: str, tol: float = 1e-12) -> Matrix:
    """Return the symmetric PSD matrix with eigenvalues clipped at 0.

    Eigenvalues below -tol·max(1, |λ|max) raise ValueError.
    """

    m = ensure_symmetric(m, var_name, tol)
    w, v = linalg.eigh(m)
    scale = max(1.0, float(np.max(np.abs(w), initial=0.0)))
    if w[0] < -tol * scale:
        raise ValueError(f"{var_name} is not positive semidefinite: {w[0]}")
    if w[0] < 0:
        m = (v * np.clip(w, 0.0, None)) @ v.T
    return symmetrize(m)


def cholesky_pd(m: Matrix, var_name: str) -> Matrix:
    "Return the lower Cholesky factor, ValueError if not positive-definite."

    m = ensure_symmetric(m, var_name)
    try:
        return linalg.cholesky(m, lower=True)
    except linalg.LinAlgError:
        raise ValueError(f"{var_name} is not positive definite")


def psd_project(m: Matrix, floor: float = 0.0) -> Matrix:
    """Project a (stack of) symmetric matrices onto the PSD cone.

    Eigenvalues below floor are clipped to floor.
    """

    w, v = np.linalg.eigh(symmetrize(m))
    w = np.clip(w, floor, None)
    return symmetrize((v * w[..., None, :]) @ np.swapaxes(v, -1, -2))


def sqrtm_psd(m: Matrix) -> Matrix:
    "Symmetric square root of a (stack of) PSD matrices."

    w, v = np.linalg.eigh(symmetrize(m))
    w = np.sqrt(np.clip(w, 0.0, None))
    return (v * w[..., None, :]) @ np.swapaxes(v, -1, -2)


def min_eigenvalue(m: Matrix) -> Real:
    return np.linalg.eigvalsh(symmetrize(m))[..., 0]


def trapezoid_weights(grid: Grid) -> Vector:
    "Quadrature weights of the trapezoidal rule on a nonuniform grid."

    g = increasing_grid(grid)
    w = np.zeros_like(g)
    if g.size == 1:
        return w
    h = np.diff(g)
    w[:-1] += h / 2
    w[1:] += h / 2
    return w


def quad_positive(
    fn: Callable[[float], float],
    center: float,
    scale: float,
    width: float = 12.0,
    epsrel: float = 1e-11,
    epsabs: float = 0.0,
    limit: int = 200,
    lower: float = 0.0,
) -> float:
    """Integrate fn over (lower, ∞), lower ≥ 0.

    The half-line is split at center ± width·scale, so that adaptive
    quadrature does not miss a peak far away from the origin.
    """

    lo = max(center - width * scale, lower)
    hi = max(center + width * scale, lo)
    kw = dict(epsrel=epsrel, epsabs=epsabs, limit=limit)
    total = integrate.quad(fn, lo, hi, **kw)[0] if hi > lo else 0.0
    if lo > lower:
        total += integrate.quad(fn, lower, lo, **kw)[0]
    total += integrate.quad(fn, hi, np.inf, **kw)[0]
    return total


def normal_quantile(level: float) -> float:
    "Two-sided standard normal quantile for a confidence level."

    if not 0 < level < 1:
        raise ValueError(f"confidence level not in (0, 1): {level}")
    return float(stats.norm.ppf(0.5 + level / 2))


def batch_means_se(samples: Vector, n_batches: int = 100) -> float:
    """Standard error of the mean by batch means.

    Samples are split in path order into n_batches contiguous batches;
    with fewer than 2·n_batches samples the plain sample standard error
    is returned.
    """

    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < 2:
        return 0.0
    if n < 2 * n_batches:
        return float(np.std(x, ddof=1) / np.sqrt(n))
    means = np.array([b.mean() for b in np.array_split(x, n_batches)])
    return float(np.std(means, ddof=1) / np.sqrt(n_batches))


def ensure_finite(value: Real, var_name: str = "value") -> None:
    if not np.all(np.isfinite(np.asarray(value))):
        raise ValueError(f"non-finite {var_name}: {value}")
