#!/usr/bin/env python3

# Copyright (C) 2020 The besqlib developers
#
# This file is part of besqlib. It is subject to the license terms in the
# LICENSE file found in the top-level directory of this distribution.
#
# No part of besqlib including this file, may be copied, modified, propagated,
# or distributed except according to the terms contained in the LICENSE file.

"""Wishart processes, the matrix analogue of BESQ.

WIS_d(x, α, b, a) solves

  dX = (α aᵀa + bX + Xbᵀ) dt + √X dW a + aᵀ dWᵀ √X,  X_0 = x,

with W a d×d Brownian motion. For integer α = β it is the sum of
squares V = Σ_k X_k X_kᵀ of β independent vector Ornstein-Uhlenbeck
processes dX_k = A X_k dt + Qᵀ dW_k, with (b, a) = (A, Q); for A = 0
and Q = I it is BᵀB, B an n×d Brownian matrix started at a square root
of x. Noncentral Wishart laws are sampled through squared matrix
normals: X ~ N_{p,n}(M, Σ ⊗ I_n) gives XXᵀ ~ W_p(n, Σ, Σ⁻¹MMᵀ).

Exact simulation for non-integer α is not provided: the Euler scheme,
with eigenvalue clipping after every step, is the fallback.

The bivariate minimal market model couples two discounted GOPs as the
diagonal of XXᵀ, X a 2×4 matrix normal whose row covariance is
built from the two transformed times.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg

from .alias import Grid, Matrix
from .errors import NumericalError
from .processes import MmmParams, phi_time
from .randkit import (
    MatrixNormalParams,
    RngStream,
    normal_pairs,
    sample_matrix_normal,
)
from .utils import (
    cholesky_pd,
    ensure_non_negative,
    ensure_positive,
    ensure_psd,
    increasing_grid,
    psd_project,
    sqrtm_psd,
    symmetrize,
)

logger = logging.getLogger(__name__)


def _square(m: Matrix, var_name: str, d: Optional[int] = None) -> Matrix:
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{var_name} is not a square matrix: {m.shape}")
    if d is not None and m.shape[0] != d:
        raise ValueError(f"{var_name} shape {m.shape} instead of {(d, d)}")
    return m


@dataclass(frozen=True)
class WishartParams:
    "WIS_d(x0, alpha, b, a); a and b default to the identity and zero."

    alpha: float
    x0: Matrix
    a: Optional[Matrix] = None
    b: Optional[Matrix] = None

    def __post_init__(self) -> None:
        ensure_non_negative(self.alpha, "alpha")
        x0 = ensure_psd(_square(self.x0, "x0"), "x0")
        d = x0.shape[0]
        a = np.eye(d) if self.a is None else _square(self.a, "a", d)
        b = np.zeros((d, d)) if self.b is None else _square(self.b, "b", d)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def d(self) -> int:
        return self.x0.shape[0]


def existence_class(p: WishartParams) -> str:
    """Return "strong", "weak" or "none".

    A unique weak solution exists for α ≥ d - 1; it is strong when
    moreover x0 is positive definite and α ≥ d + 1.
    """

    w = np.linalg.eigvalsh(p.x0)
    if w[0] > 0 and p.alpha >= p.d + 1:
        return "strong"
    if p.alpha >= p.d - 1:
        return "weak"
    return "none"


def psd_factor(S: Matrix, rows: int, tol: float = 1e-12) -> np.ndarray:
    """Return a rows×p matrix C with CᵀC = S.

    Row i is √λ_i times the i-th eigenvector of S (largest first),
    eigenvalues below tol·max(1, λ_max) count as zero and the
    remaining rows are zero.
    """

    S = ensure_psd(_square(S, "S"), "S", tol)
    w, v = linalg.eigh(S)
    w, v = w[::-1], v[:, ::-1]
    rank = int(np.sum(w > tol * max(1.0, w[0])))
    if rows < rank:
        raise ValueError(f"rows < rank: {rows} < {rank}")
    C = np.zeros((rows, S.shape[0]))
    C[:rank] = np.sqrt(w[:rank])[:, None] * v[:, :rank].T
    return C


def wishart_bm_transition(
    stream: RngStream,
    x: Matrix,
    n: int,
    dt: float,
    size: Optional[int] = None,
    antithetic: bool = False,
) -> np.ndarray:
    """Exact step of WIS_d(x, n, 0, I_d) over dt.

    G = C + √dt Z with C = psd_factor(x, n) and Z an n×d standard
    normal matrix; GᵀG is returned (shape (size, d, d) with size).
    """

    if n < 1 or int(n) != n:
        raise ValueError(f"n not a positive integer: {n}")
    ensure_positive(dt, "time step")
    C = psd_factor(x, int(n))
    if size is None:
        Z = stream.generator.standard_normal(C.shape)
    else:
        Z = normal_pairs(stream, (size,) + C.shape, antithetic)
    G = C + np.sqrt(dt) * Z
    return np.swapaxes(G, -1, -2) @ G


@dataclass(frozen=True)
class NoncentralWishartParams:
    """W_p(n, Σ, Θ) with integer n.

    The mean matrix M (p×n, MMᵀ = ΣΘ) of the squared matrix normal is
    factored at construction; ΣΘ must be PSD after symmetrization,
    negative eigenvalues down to -1e-8 being clipped.
    """

    n: int
    Sigma: Matrix
    Theta: Optional[Matrix] = None
    M: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.n < 1 or int(self.n) != self.n:
            raise ValueError(f"n not a positive integer: {self.n}")
        sigma = _square(self.Sigma, "Sigma")
        cholesky_pd(sigma, "Sigma")
        p = sigma.shape[0]
        theta = np.zeros((p, p)) if self.Theta is None else self.Theta
        theta = ensure_psd(_square(theta, "Theta", p), "Theta", 1e-10)
        try:
            C = psd_factor(symmetrize(sigma @ theta), int(self.n), 1e-8)
        except ValueError as e:
            raise ValueError(f"Sigma·Theta cannot be factored: {e}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "Sigma", symmetrize(sigma))
        object.__setattr__(self, "Theta", theta)
        object.__setattr__(self, "M", C.T)

    @property
    def p(self) -> int:
        return self.Sigma.shape[0]

    def mean(self) -> Matrix:
        "E[XXᵀ] = nΣ + MMᵀ."
        return self.n * self.Sigma + self.M @ self.M.T


def sample_noncentral_wishart(
    stream: RngStream,
    p: NoncentralWishartParams,
    size: Optional[int] = None,
    antithetic: bool = False,
) -> np.ndarray:
    "Draw XXᵀ with X ~ N_{p,n}(M, Σ ⊗ I_n)."

    X = sample_matrix_normal(stream, MatrixNormalParams(p.M, p.Sigma), size, antithetic)
    return X @ np.swapaxes(X, -1, -2)


def ou_covariance(A: Matrix, Q: Matrix, dt: float) -> Tuple[Matrix, Matrix]:
    """Transition matrix e^{A·dt} and covariance of the vector OU step.

    ∫₀^dt e^{As} QᵀQ e^{Aᵀs} ds from the exponential of the block matrix
    [[-A, QᵀQ], [0, Aᵀ]]·dt (Van Loan 1978):
    with blocks F12 and F22 the transition is F22ᵀ and the covariance
    F22ᵀ·F12.
    """

    A = _square(A, "A")
    d = A.shape[0]
    Q = _square(Q, "Q", d)
    ensure_positive(dt, "time step")
    H = np.zeros((2 * d, 2 * d))
    H[:d, :d] = -A
    H[:d, d:] = Q.T @ Q
    H[d:, d:] = A.T
    F = linalg.expm(H * dt)
    transition = F[d:, d:].T
    return transition, symmetrize(transition @ F[:d, d:])


def _cov_factor(cov: Matrix) -> Matrix:
    "L with LLᵀ = cov; eigenvalues down to -1e-12 are clipped."

    try:
        return linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError:
        w, v = linalg.eigh(cov)
        scale = max(1.0, float(np.max(np.abs(w))))
        if w[0] < -1e-12 * scale:
            raise NumericalError(f"covariance not positive semidefinite: {w[0]}")
        if w[0] < 0:
            logger.warning("clipping covariance eigenvalue %.3e", w[0])
        return v * np.sqrt(np.clip(w, 0.0, None))


def ou_exact_step(
    stream: RngStream, A: Matrix, Q: Matrix, x: np.ndarray, dt: float
) -> np.ndarray:
    """Exact step of dX = AX dt + Qᵀ dW.

    x has shape (..., d): every leading index is an independent path.
    """

    transition, cov = ou_covariance(A, Q, dt)
    x = np.asarray(x, dtype=float)
    L = _cov_factor(cov)
    z = stream.generator.standard_normal(x.shape)
    return x @ transition.T + z @ L.T


def _path_shape(n_paths: Optional[int], n_times: int, d: int) -> Tuple[int, ...]:
    if n_paths is None:
        return (n_times, d, d)
    if n_paths < 1:
        raise ValueError(f"n_paths < 1: {n_paths}")
    return (n_paths, n_times, d, d)


def wishart_ou_path(
    stream: RngStream,
    beta: int,
    A: Matrix,
    Q: Matrix,
    x0: Matrix,
    times: Grid,
    n_paths: Optional[int] = None,
) -> np.ndarray:
    """V_t = Σ_{k=1}^{β} X_{k,t} X_{k,t}ᵀ at the grid times.

    The β vectors start at the rows of psd_factor(x0, β); the result
    has shape (n_paths, len(times), d, d), or (len(times), d, d)
    without n_paths. A grid starting at 0 reports x0 first.
    """

    if beta < 1 or int(beta) != beta:
        raise ValueError(f"beta not a positive integer: {beta}")
    times = increasing_grid(times, "times")
    X = psd_factor(x0, int(beta))
    d = X.shape[1]
    if n_paths is not None:
        X = np.broadcast_to(X, (n_paths,) + X.shape).copy()
    out = np.empty(_path_shape(n_paths, times.size, d))
    prev = 0.0
    for i, t in enumerate(times):
        if t > prev:
            X = ou_exact_step(stream, A, Q, X, t - prev)
        out[..., i, :, :] = np.swapaxes(X, -1, -2) @ X
        prev = t
    return out


def wishart_exact_path(
    stream: RngStream,
    p: WishartParams,
    times: Grid,
    n_paths: Optional[int] = None,
) -> np.ndarray:
    "Exact WIS_d(x0, α, b, a) path for integer α, as OU squares."

    if p.alpha < 1 or int(p.alpha) != p.alpha:
        m = f"exact simulation needs a positive integer alpha: {p.alpha}"
        raise ValueError(m)
    return wishart_ou_path(stream, int(p.alpha), p.b, p.a, p.x0, times, n_paths)


def wishart_euler_step(
    stream: RngStream, p: WishartParams, x: np.ndarray, dt: float
) -> np.ndarray:
    """Euler step of the Wishart SDE, projected back onto the PSD cone.

    x has shape (..., d, d); √X is the symmetric eigen square root.
    """

    ensure_positive(dt, "time step")
    x = np.asarray(x, dtype=float)
    a, b = p.a, p.b
    dW = np.sqrt(dt) * stream.generator.standard_normal(x.shape)
    root = sqrtm_psd(x)
    drift = p.alpha * a.T @ a + b @ x + x @ b.T
    noise = root @ dW @ a
    y = symmetrize(x + drift * dt + noise + np.swapaxes(noise, -1, -2))
    w = np.linalg.eigvalsh(y)[..., 0]
    repaired = int(np.sum(w < 0))
    if repaired:
        logger.warning("%d matrices projected onto the PSD cone", repaired)
        y = psd_project(y)
    return y


def wishart_euler_path(
    stream: RngStream,
    p: WishartParams,
    times: Grid,
    n_paths: Optional[int] = None,
    substeps: int = 1,
) -> np.ndarray:
    "Euler path of any WIS_d, with substeps steps between grid times."

    if substeps < 1:
        raise ValueError(f"substeps < 1: {substeps}")
    times = increasing_grid(times, "times")
    shape = _path_shape(n_paths, times.size, p.d)
    out = np.empty(shape)
    x = np.broadcast_to(p.x0, shape[:-3] + (p.d, p.d)).copy()
    prev = 0.0
    for i, t in enumerate(times):
        if t > prev:
            dt = (t - prev) / substeps
            for _ in range(substeps):
                x = wishart_euler_step(stream, p, x, dt)
        out[..., i, :, :] = x
        prev = t
    return out


def paths_to_long_rows(
    paths: np.ndarray, times: Grid
) -> List[Tuple[int, float, int, int, float]]:
    "Rows (path_id, time, i, j, value) of a (n_paths, n_times, d, d) array."

    times = increasing_grid(times, "times")
    paths = np.asarray(paths, dtype=float)
    if paths.ndim == 3:
        paths = paths[None]
    if paths.ndim != 4 or paths.shape[1] != times.size:
        raise ValueError(f"paths shape {paths.shape} does not match the grid")
    n_paths, n_times, d, _ = paths.shape
    return [
        (k, float(times[t]), i, j, float(paths[k, t, i, j]))
        for k in range(n_paths)
        for t in range(n_times)
        for i in range(d)
        for j in range(d)
    ]


@dataclass(frozen=True)
class BivariateMmmParams:
    """Two minimal market models coupled by the correlation rho.

    Per-currency tuples (first, second); w is the 4×2 offset matrix
    whose column sums of squares are the initial discounted GOPs, by
    default √sbar0 in the first row and zeros elsewhere.
    """

    r: Tuple[float, float]
    alpha0: Tuple[float, float]
    eta: Tuple[float, float]
    sbar0: Tuple[float, float]
    rho: float
    w: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        for name in ("r", "alpha0", "eta", "sbar0"):
            value = tuple(float(v) for v in getattr(self, name))
            if len(value) != 2:
                raise ValueError(f"{name} needs two values: {value}")
            object.__setattr__(self, name, value)
        ensure_positive(self.alpha0, "alpha0")
        ensure_positive(self.eta, "eta")
        ensure_positive(self.sbar0, "sbar0")
        if not -1 < self.rho < 1:
            raise ValueError(f"rho not in (-1, 1): {self.rho}")
        if self.w is None:
            w = np.zeros((4, 2))
            w[0] = np.sqrt(self.sbar0)
        else:
            w = np.asarray(self.w, dtype=float)
            if w.shape != (4, 2):
                raise ValueError(f"w shape {w.shape} instead of (4, 2)")
            sums = np.sum(w ** 2, axis=0)
            if np.max(np.abs(sums - self.sbar0)) > 1e-12 * max(self.sbar0):
                raise ValueError(f"w column sums of squares {sums} != sbar0")
        object.__setattr__(self, "w", w)

    def marginal(self, k: int) -> MmmParams:
        "The one-dimensional model of currency k."
        return MmmParams(self.sbar0[k], self.alpha0[k], self.eta[k], self.r[k])


def bivariate_mean(p: BivariateMmmParams) -> np.ndarray:
    "The 2×4 mean matrix M = wᵀ."
    return p.w.T.copy()


def bivariate_sigma(p: BivariateMmmParams, T: float) -> Matrix:
    """Row covariance Σ at T.

    Σ11 = φ¹(T), Σ22 = φ²(T), Σ12 = (ρ/4)∫₀^T √(α¹_s α²_s) ds.
    """

    ensure_positive(T, "maturity")
    phi = [float(phi_time(p.marginal(k), T)) for k in (0, 1)]
    half = (p.eta[0] + p.eta[1]) / 2
    integral = np.expm1(half * T) / half
    cross = p.rho / 4 * np.sqrt(p.alpha0[0] * p.alpha0[1]) * integral
    return np.array([[phi[0], cross], [cross, phi[1]]])


def bivariate_terminal_sample(
    stream: RngStream,
    p: BivariateMmmParams,
    T: float,
    size: Optional[int] = None,
    antithetic: bool = False,
) -> np.ndarray:
    """Discounted GOPs (s̄_1(T), s̄_2(T)), the diagonal of XXᵀ.

    Shape (2,) or (size, 2); the GOPs are e^{r_k T}·s̄_k.
    """

    sigma = bivariate_sigma(p, T)
    mn = MatrixNormalParams(bivariate_mean(p), sigma)
    X = sample_matrix_normal(stream, mn, size, antithetic)
    return np.sum(X ** 2, axis=-1)
