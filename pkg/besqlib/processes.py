#!/usr/bin/env python3

# Copyright (C) 2020 The besqlib developers
#
# This file is part of besqlib. It is subject to the license terms in the
# LICENSE file found in the top-level directory of this distribution.
#
# No part of besqlib including this file, may be copied, modified, propagated,
# or distributed except according to the terms contained in the LICENSE file.

"""One-dimensional processes.

* squared Bessel process BESQ(δ): dX = δ dt + 2√X dW
* square-root process: dY = (a - bY) dt + σ√Y dW
* minimal market model (MMM): the discounted growth optimal portfolio
  (GOP) s̄ is a BESQ(4) process run on the transformed time
  φ(t) = φ(0) + α₀(e^{ηt} - 1)/(4η),
  the GOP is S_t = e^{rt} s̄_t, and Y = s̄/α is the square-root process
  dY = (1 - ηY) dt + √Y dW of dimension four, so that the GOP volatility
  is 1/√Y (leverage effect)

Transitions of BESQ and square-root processes are scaled noncentral
chi-squared laws: both are sampled exactly, the Euler scheme is kept
as the discretization used by multilevel Monte Carlo.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .alias import Grid, Real
from .randkit import RngStream, sample_ncx2
from .specfun import bessel_i_log, log_gamma, ncx2_pdf
from .utils import ensure_non_negative, ensure_positive, increasing_grid

logger = logging.getLogger(__name__)

# below this |b·dt| (or η·t) the series limits are used
SMALL_RATE = 1e-8


@dataclass(frozen=True)
class MmmParams:
    """Minimal market model parameters.

    s0 is the initial GOP (the savings account starts at 1, so it is
    also the initial discounted GOP), alpha0 the scaling parameter,
    eta the net growth rate, r the constant short rate and phi0 the
    origin of the transformed time.
    """

    s0: float
    alpha0: float
    eta: float
    r: float = 0.0
    phi0: float = 0.0

    def __post_init__(self) -> None:
        ensure_positive(self.s0, "s0")
        ensure_positive(self.alpha0, "alpha0")
        ensure_positive(self.eta, "eta")

    @property
    def y0(self) -> float:
        "Initial value of the square-root process Y = s̄/α."
        return self.s0 / self.alpha0

    def alpha(self, t: Real) -> Real:
        return self.alpha0 * np.exp(self.eta * np.asarray(t, dtype=float))

    def savings(self, t: Real) -> Real:
        return np.exp(self.r * np.asarray(t, dtype=float))

    def square_root(self) -> "SquareRootParams":
        "The square-root process Y: (a, b, σ) = (1, η, 1)."
        return SquareRootParams(1.0, self.eta, 1.0, self.y0)


@dataclass(frozen=True)
class BesqParams:
    delta: float
    x0: float

    def __post_init__(self) -> None:
        ensure_non_negative(self.delta, "delta")
        ensure_non_negative(self.x0, "x0")

    @property
    def nu(self) -> float:
        return self.delta / 2 - 1

    @property
    def samplable(self) -> bool:
        return self.delta > 0 or self.x0 > 0


@dataclass(frozen=True)
class SquareRootParams:
    "dY = (a - bY) dt + σ√Y dW, Y(0) = y0."

    a: float
    b: float
    sigma: float
    y0: float

    def __post_init__(self) -> None:
        ensure_non_negative(self.a, "a")
        ensure_positive(self.sigma, "sigma")
        ensure_positive(self.y0, "y0")

    @property
    def dimension(self) -> float:
        return 4 * self.a / self.sigma ** 2


def phi_time(p: MmmParams, t: Real) -> Real:
    "Transformed time φ(t) = φ(0) + α₀(e^{ηt} - 1)/(4η)."

    t = np.asarray(t, dtype=float)
    ensure_non_negative(t, "time")
    et = p.eta * t
    small = et < SMALL_RATE
    growth = np.where(small, t * (1 + et / 2), np.expm1(et) / p.eta)
    return p.phi0 + p.alpha0 * growth / 4


def _gamma_log_density(t: float, y: np.ndarray, delta: float) -> np.ndarray:
    return (
        -(delta / 2) * np.log(2 * t)
        + (delta / 2 - 1) * np.log(y)
        - y / (2 * t)
        - log_gamma(delta / 2)
    )


def besq_log_density(t: float, x: float, y: Real, delta: float) -> Real:
    """Log transition density of BESQ(δ) from x to y over time t.

    p(t,x,y) = (1/2t) (y/x)^{ν/2} I_ν(√(xy)/t) exp(-(x+y)/2t),
    ν = δ/2 - 1, for x > 0 and δ ≥ 2; the forward orientation (y/x) is
    the one integrating to one in y. For 0 < δ < 2 the scaled
    noncentral chi-squared mixture is used, and for x = 0 the gamma law
    of X_t = t·χ²_δ.
    """

    ensure_positive(t, "time")
    ensure_non_negative(x, "start")
    ensure_positive(delta, "dimension")
    y = np.asarray(y, dtype=float)
    ensure_positive(y, "end")

    if x == 0:
        return _gamma_log_density(t, y, delta)
    if delta < 2:
        return np.log(ncx2_pdf(y / t, delta, x / t)) - np.log(t)
    nu = delta / 2 - 1
    return (
        -np.log(2 * t)
        + (nu / 2) * (np.log(y) - np.log(x))
        + bessel_i_log(nu, np.sqrt(x * y) / t)
        - (x + y) / (2 * t)
    )


def besq_density(t: float, x: float, y: Real, delta: float) -> Real:
    "Transition density of BESQ(δ) from x to y over time t."

    return np.exp(besq_log_density(t, x, y, delta))


def besq_laplace(x: Real, t: Real, lam: Real, delta: float) -> Real:
    "E_x[exp(-λ X_t)] = exp(-λx/(1+2λt)) (1+2λt)^{-δ/2}."

    ensure_non_negative(x, "start")
    ensure_positive(t, "time")
    ensure_non_negative(lam, "lambda")
    ensure_positive(delta, "dimension")
    q = 1 + 2 * np.asarray(lam, dtype=float) * t
    return np.exp(-lam * np.asarray(x, dtype=float) / q) * q ** (-delta / 2)


def besq_inverse_moment(x: Real, t: Real) -> Real:
    """E_x[1/X_t] for BESQ(4), namely (1 - exp(-x/2t))/x.

    It is smaller than 1/x: 1/X is a strict local martingale.
    """

    ensure_positive(x, "start")
    ensure_positive(t, "time")
    x = np.asarray(x, dtype=float)
    return -np.expm1(-x / (2 * np.asarray(t, dtype=float))) / x


def besq_sample_transition(
    stream: RngStream,
    x: Real,
    delta: float,
    dt: float,
    size: Optional[int] = None,
) -> Real:
    "Exact BESQ(δ) step: X_{t+dt} = dt·χ'²(δ, x/dt)."

    ensure_non_negative(x, "start")
    ensure_positive(dt, "time step")
    return dt * sample_ncx2(stream, delta, np.asarray(x) / dt, size)


def cir_scale(p: SquareRootParams, dt: float) -> Tuple[float, float]:
    """Scale c and decay e^{-b·dt} of the square-root transition.

    Y_{t+dt} = c·χ'²(4a/σ², y·e^{-b·dt}/c), c = σ²(1 - e^{-b·dt})/(4b).
    """

    ensure_positive(dt, "time step")
    bdt = p.b * dt
    if abs(bdt) < SMALL_RATE:
        c = p.sigma ** 2 * dt * (1 - bdt / 2) / 4
    else:
        c = p.sigma ** 2 * -np.expm1(-bdt) / (4 * p.b)
    return c, float(np.exp(-bdt))


def cir_mean(p: SquareRootParams, y: Real, dt: float) -> Real:
    "E[Y_{t+dt} | Y_t = y] = y e^{-b·dt} + (a/b)(1 - e^{-b·dt})."

    bdt = p.b * dt
    if abs(bdt) < SMALL_RATE:
        drift = p.a * dt
    else:
        drift = p.a * -np.expm1(-bdt) / p.b
    return np.asarray(y, dtype=float) * np.exp(-bdt) + drift


def cir_transition_density(
    p: SquareRootParams, y0: float, y: Real, dt: float
) -> Real:
    "Exact transition density of the square-root process."

    ensure_non_negative(y0, "start")
    y = np.asarray(y, dtype=float)
    ensure_non_negative(y, "end")
    c, decay = cir_scale(p, dt)
    return ncx2_pdf(y / c, p.dimension, y0 * decay / c) / c


def cir_sample_transition(
    stream: RngStream,
    p: SquareRootParams,
    y: Real,
    dt: float,
    size: Optional[int] = None,
) -> Real:
    "Exact square-root step, a scaled noncentral chi-squared draw."

    ensure_non_negative(y, "start")
    c, decay = cir_scale(p, dt)
    lam = np.asarray(y, dtype=float) * decay / c
    return c * sample_ncx2(stream, p.dimension, lam, size)


def cir_euler_step(
    stream: Optional[RngStream],
    p: SquareRootParams,
    y: Real,
    dt: float,
    dw: Optional[Real] = None,
) -> Real:
    """Full-truncation Euler step.

    y + (a - b·y⁺) dt + σ√(y⁺) dW, y⁺ = max(y, 0); the returned state
    may be negative. Brownian increments dw may be supplied (coupled
    levels), otherwise they are drawn from the stream.
    """

    ensure_positive(dt, "time step")
    y = np.asarray(y, dtype=float)
    if dw is None:
        if stream is None:
            raise ValueError("either a stream or increments are needed")
        dw = np.sqrt(dt) * stream.generator.standard_normal(y.shape)
    yp = np.maximum(y, 0.0)
    return y + (p.a - p.b * yp) * dt + p.sigma * np.sqrt(yp) * dw


def _discounted_gop(
    stream: RngStream, p: MmmParams, times: np.ndarray, size: Optional[int]
) -> np.ndarray:
    phis = phi_time(p, times)
    shape = (len(times),) if size is None else (size, len(times))
    out = np.empty(shape)
    x = np.full(() if size is None else size, p.s0, dtype=float)
    prev = p.phi0
    for i, phi in enumerate(phis):
        dphi = phi - prev
        if dphi > 0:
            x = besq_sample_transition(stream, x, 4.0, dphi, size)
        out[..., i] = x
        prev = phi
    return out


def mmm_gop_path(
    stream: RngStream, p: MmmParams, times: Grid, size: Optional[int] = None
) -> np.ndarray:
    """GOP values S_t = e^{rt} s̄_t at the grid times.

    s̄ is simulated by exact BESQ(4) steps over the transformed time
    increments, starting from s̄ = s0 at calendar time 0.
    The result has shape (len(times),) or (size, len(times)).
    """

    times = increasing_grid(times, "times")
    return p.savings(times) * _discounted_gop(stream, p, times, size)


def mmm_terminal_sample(
    stream: RngStream,
    p: MmmParams,
    T: float,
    size: Optional[int] = None,
    n_steps: int = 1,
) -> Real:
    "Discounted GOP s̄_T, by n_steps exact steps on an even calendar grid."

    ensure_positive(T, "maturity")
    if n_steps < 1:
        raise ValueError(f"n_steps < 1: {n_steps}")
    times = np.linspace(0.0, T, n_steps + 1)[1:]
    return _discounted_gop(stream, p, times, size)[..., -1]


def mmm_y_path(
    stream: RngStream, p: MmmParams, times: Grid, size: Optional[int] = None
) -> np.ndarray:
    "The square-root process Y_t = s̄_t/α_t at the grid times."

    times = increasing_grid(times, "times")
    return _discounted_gop(stream, p, times, size) / p.alpha(times)
