#!/usr/bin/env python3

# Copyright (C) 2020 The besqlib developers
#
# This file is part of besqlib. It is subject to the license terms in the
# LICENSE file found in the top-level directory of this distribution.
#
# No part of besqlib including this file, may be copied, modified, propagated,
# or distributed except according to the terms contained in the LICENSE file.

"""Reproducible random streams and exact samplers.

An RngStream is a (seed, stream_id) pair driving a Philox
counter-based bit generator: the stream id enters the SeedSequence
spawn key, so that path batch b of a run with seed s always draws
from RngStream(s, b), whatever the number of workers.

Samplers take an optional size and are vectorized over their
parameters, following numpy.random.Generator conventions.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np

from .alias import Matrix, Real
from .utils import cholesky_pd, ensure_non_negative, ensure_positive

Size = Optional[Union[int, Tuple[int, ...]]]

UINT64 = 2 ** 64


class RngStream:
    """Single-owner random stream identified by (seed, stream_id).

    Streams spawned from a stream extend its SeedSequence spawn key,
    so they never collide with top-level streams of the same seed.
    """

    def __init__(
        self, seed: int, stream_id: int = 0, parent: Tuple[int, ...] = ()
    ) -> None:
        if not 0 <= seed < UINT64:
            raise ValueError(f"seed not a 64-bit unsigned integer: {seed}")
        if not 0 <= stream_id < UINT64:
            m = f"stream_id not a 64-bit unsigned integer: {stream_id}"
            raise ValueError(m)
        self.seed = seed
        self.stream_id = stream_id
        self.key = tuple(parent) + (stream_id,)
        seq = np.random.SeedSequence(seed, spawn_key=self.key)
        self.generator = np.random.Generator(np.random.Philox(seq))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, key={self.key})"

    def spawn(self, index: int) -> "RngStream":
        "Deterministic child stream, independent of this one."

        return RngStream(self.seed, index, self.key)


def level_stream_id(level: int, index: int) -> int:
    "Stream id of chunk index of a given level (level in the high bits)."

    if level < 0 or index < 0:
        raise ValueError(f"negative level or index: {level}, {index}")
    if level >= 2 ** 24 or index >= 2 ** 40:
        raise ValueError(f"level or chunk index too large: {level}, {index}")
    return (level << 40) | index


def batch_streams(
    seed: int, n_paths: int, batch_size: int
) -> List[Tuple[RngStream, int]]:
    """Streams and sizes of the consecutive path batches.

    Batch b always draws from RngStream(seed, b); the last batch may
    be shorter.
    """

    if n_paths < 1:
        raise ValueError(f"n_paths < 1: {n_paths}")
    if batch_size < 1:
        raise ValueError(f"batch_size < 1: {batch_size}")
    q, r = divmod(n_paths, batch_size)
    sizes = [batch_size] * q + ([r] if r else [])
    return [(RngStream(seed, b), size) for b, size in enumerate(sizes)]


def sample_normal(stream: RngStream, size: Size = None) -> Real:
    return stream.generator.standard_normal(size)


def normal_pairs(
    stream: RngStream, shape: Tuple[int, ...], antithetic: bool = False
) -> np.ndarray:
    """Standard normals of the given shape, first axis indexing paths.

    With antithetic pairing the second half of the paths uses the
    negated normals of the first half (an odd count leaves one
    unpaired path at the end).
    """

    if not antithetic:
        return stream.generator.standard_normal(shape)
    n = shape[0]
    half = stream.generator.standard_normal((n // 2,) + tuple(shape[1:]))
    parts = [half, -half]
    if n % 2:
        extra = stream.generator.standard_normal((1,) + tuple(shape[1:]))
        parts.append(extra)
    return np.concatenate(parts, axis=0)


def sample_gamma(
    stream: RngStream, shape: Real, scale: Real = 1.0, size: Size = None
) -> Real:
    """Gamma(shape, scale) draws.

    numpy uses the Marsaglia-Tsang squeeze/rejection method, with the
    U^{1/shape} boost for shape < 1.
    """

    ensure_positive(shape, "shape")
    ensure_positive(scale, "scale")
    return stream.generator.gamma(shape, scale, size)


def sample_poisson(stream: RngStream, mean: Real, size: Size = None) -> Real:
    ensure_non_negative(mean, "mean")
    return stream.generator.poisson(mean, size)


def sample_chi2(stream: RngStream, df: Real, size: Size = None) -> Real:
    ensure_positive(df, "degrees of freedom")
    return 2.0 * stream.generator.gamma(np.asarray(df) / 2, 1.0, size)


def sample_ncx2(
    stream: RngStream,
    df: float,
    lam: Real,
    size: Size = None,
    branch: str = "auto",
) -> Real:
    """Exact draws from the noncentral chi-squared law χ'²(df, λ).

    For df > 1: χ²_{df-1} + (Z + √λ)²; for df ≤ 1: J ~ Poisson(λ/2),
    then χ²_{df+2J}. The branch argument ("auto", "normal", "poisson")
    forces either construction; "normal" requires df > 1.
    lam may be an array (one noncentrality per path).
    """

    if df <= 0:
        raise ValueError(f"non-positive degrees of freedom: {df}")
    ensure_non_negative(lam, "noncentrality")
    if branch == "auto":
        branch = "normal" if df > 1 else "poisson"
    if size is None and np.ndim(lam) > 0:
        size = np.shape(lam)

    g = stream.generator
    if branch == "normal":
        if df <= 1:
            raise ValueError(f"normal branch requires df > 1: {df}")
        z = g.standard_normal(size)
        central = 2.0 * g.gamma((df - 1) / 2, 1.0, size)
        return central + (z + np.sqrt(lam)) ** 2
    if branch == "poisson":
        j = g.poisson(np.asarray(lam) / 2, size)
        return 2.0 * g.gamma(df / 2 + j, 1.0, size)
    raise ValueError(f"unknown branch: {branch}")


@dataclass(frozen=True)
class MatrixNormalParams:
    """Matrix variate normal N_{p,n}(M, Σ ⊗ Ψ).

    vec(Xᵀ) is multivariate normal with mean vec(Mᵀ) and covariance
    Σ ⊗ Ψ; Psi defaults to the identity.
    """

    M: Matrix
    Sigma: Matrix
    Psi: Optional[Matrix] = None
    l_sigma: Matrix = field(init=False, repr=False, compare=False)
    l_psi: Matrix = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        M = np.atleast_2d(np.asarray(self.M, dtype=float))
        p, n = M.shape
        sigma = np.asarray(self.Sigma, dtype=float)
        if sigma.shape != (p, p):
            raise ValueError(f"Sigma shape {sigma.shape} instead of {(p, p)}")
        psi = np.eye(n) if self.Psi is None else self.Psi
        psi = np.asarray(psi, dtype=float)
        if psi.shape != (n, n):
            raise ValueError(f"Psi shape {psi.shape} instead of {(n, n)}")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "Sigma", sigma)
        object.__setattr__(self, "Psi", psi)
        object.__setattr__(self, "l_sigma", cholesky_pd(sigma, "Sigma"))
        object.__setattr__(self, "l_psi", cholesky_pd(psi, "Psi"))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.M.shape


def sample_matrix_normal(
    stream: RngStream,
    params: MatrixNormalParams,
    size: Optional[int] = None,
    antithetic: bool = False,
) -> np.ndarray:
    """Draw X = M + Lσ G Lψᵀ, G a p×n matrix of standard normals.

    With size the result has shape (size, p, n).
    """

    p, n = params.shape
    if size is None:
        g = stream.generator.standard_normal((p, n))
    else:
        g = normal_pairs(stream, (size, p, n), antithetic)
    return params.M + params.l_sigma @ g @ params.l_psi.T
