#!/usr/bin/env python3

# Copyright (C) 2020 The besqlib developers
#
# This file is part of besqlib. It is subject to the license terms in the
# LICENSE file found in the top-level directory of this distribution.
#
# No part of besqlib including this file, may be copied, modified, propagated,
# or distributed except according to the terms contained in the LICENSE file.

"""Lie symmetries of one-dimensional Cauchy problems.

The problem u_t = b x^γ u_xx + f(x) u_x - g(x) u, γ ≠ 2, has nontrivial
symmetries if and only if h(x) = x^{1-γ} f(x) solves one of three
Ricatti equations

  b x h' - b h + h²/2 + 2b x^{2-γ} g = 2bA x^{2-γ} + B                   (1)
                                     = A x^{4-2γ}/(2(2-γ)²)
                                       + B x^{2-γ}/(2-γ) + C             (2)
                                     = A x^{4-2γ}/(2(2-γ)²)
                                       + B x^{3-3γ/2}/(3-3γ/2)
                                       + C x^{2-γ}/(2-γ) - κ             (3)

with κ = γ(γ-4)b²/8; for (1) the symmetry is explicit, and evaluated on
u ≡ 1 it gives Laplace transforms of the fundamental solution.

Craddock and Lennox 2009, https://doi.org/10.1016/j.jde.2009.01.011

Applied to the square-root process dY = (1 - ηY) dt + √Y dW with the
potential g(y) = μ/y it gives the joint law of (Y_T, ∫ dt/Y_t): the
kernel p(T, x, y; μ) equals the transition density of Y with the Bessel
order 1 replaced by ν = √(1 + 8μ), so that the joint density is the
inverse Laplace transform in μ of that kernel.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import integrate, stats

from . import serialize
from .alias import Grid, RealFunction, Solution, Vector
from .errors import InversionError, SymmetryError
from .invlap import EULER_A, EULER_M, INVERTERS, TALBOT_R_FACTOR
from .processes import SquareRootParams, cir_sample_transition, cir_scale
from .randkit import RngStream
from .specfun import (
    bessel_i_log,
    bessel_i_log_complex,
    log_gamma,
    whittaker_m,
)
from .utils import (
    ensure_positive,
    increasing_grid,
    quad_positive,
    trapezoid_weights,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DriftProblem:
    """The Cauchy problem u_t = b x^γ u_xx + f u_x - g u on (0, ∞).

    g defaults to zero; without f_prime the derivative of f is taken
    by central differences with step 1e-6·max(1, x).
    """

    gamma: float
    b: float
    f: RealFunction
    g: Optional[RealFunction] = None
    f_prime: Optional[RealFunction] = None

    def __post_init__(self) -> None:
        if self.gamma == 2:
            raise SymmetryError("gamma = 2 is not covered by the drift equations")
        ensure_positive(self.b, "b")

    def potential(self, x: float) -> float:
        return 0.0 if self.g is None else self.g(x)

    def derivative(self, x: float) -> float:
        if self.f_prime is not None:
            return self.f_prime(x)
        h = 1e-6 * max(1.0, x)
        return (self.f(x + h) - self.f(x - h)) / (2 * h)

    def h(self, x: float) -> float:
        return x ** (1 - self.gamma) * self.f(x)

    def h_prime(self, x: float) -> float:
        g = self.gamma
        return (1 - g) * x ** (-g) * self.f(x) + x ** (1 - g) * self.derivative(x)


def besq_problem(delta: float) -> DriftProblem:
    "BESQ(δ): u_t = 2x u_xx + δ u_x."

    if delta < 0:
        raise ValueError(f"negative dimension: {delta}")
    return DriftProblem(1.0, 2.0, lambda x: delta, f_prime=lambda x: 0.0)


def square_root_problem(eta: float, mu: float = 0.0) -> DriftProblem:
    "Square-root process of dimension four with potential μ/x."

    return DriftProblem(
        1.0,
        0.5,
        lambda x: 1 - eta * x,
        (lambda x: mu / x),
        lambda x: -eta,
    )


def drift_lhs(p: DriftProblem, x: float) -> float:
    "b x h' - b h + h²/2 + 2b x^{2-γ} g(x)."

    h = p.h(x)
    return (
        p.b * x * p.h_prime(x)
        - p.b * h
        + h * h / 2
        + 2 * p.b * x ** (2 - p.gamma) * p.potential(x)
    )


def _rhs_basis(case: int, p: DriftProblem, x: Vector) -> Tuple[np.ndarray, Vector]:
    "Right side as basis matrix (one column per constant) plus offset."

    g = p.gamma
    e = 2 - g
    ones = np.ones_like(x)
    if case == 1:
        return np.column_stack([2 * p.b * x ** e, ones]), 0 * x
    if case == 2:
        basis = [x ** (2 * e) / (2 * e ** 2), x ** e / e, ones]
        return np.column_stack(basis), 0 * x
    if case == 3:
        kappa = g * (g - 4) * p.b ** 2 / 8
        basis = [x ** (2 * e) / (2 * e ** 2), x ** (1.5 * e) / (1.5 * e), x ** e / e]
        return np.column_stack(basis), -kappa * ones
    raise ValueError(f"invalid case: {case}")


def ricatti_residual(
    case: int, p: DriftProblem, consts: Tuple[float, ...], x: float
) -> float:
    "Left side minus right side of drift equation `case` at x > 0."

    ensure_positive(x, "x")
    basis, offset = _rhs_basis(case, p, np.array([float(x)]))
    consts = np.asarray(consts, dtype=float)[: basis.shape[1]]
    if consts.size != basis.shape[1]:
        m = f"case {case} needs {basis.shape[1]} constants, got {consts.size}"
        raise ValueError(m)
    return float(drift_lhs(p, x) - (basis @ consts + offset)[0])


@dataclass(frozen=True)
class DriftClass:
    "Outcome of classify_drift; case is None when no equation holds."

    case: Optional[int]
    constants: Tuple[float, ...]
    residual: float
    tolerance: float


def classify_drift(p: DriftProblem, x_grid: Grid) -> DriftClass:
    """Fit the constants of each drift equation by linear least squares.

    The first case whose residual sup-norm on the grid is below
    1e-6·(1 + sup|lhs|) is reported.
    """

    x = increasing_grid(x_grid, "x_grid", positive=True)
    if x.size < 8:
        raise ValueError(f"x_grid has fewer than 8 points: {x.size}")
    lhs = np.array([drift_lhs(p, xi) for xi in x])
    tol = 1e-6 * (1 + np.max(np.abs(lhs)))
    best = DriftClass(None, (), np.inf, tol)
    for case in (1, 2, 3):
        basis, offset = _rhs_basis(case, p, x)
        consts = np.linalg.lstsq(basis, lhs - offset, rcond=None)[0]
        residual = float(np.max(np.abs(lhs - offset - basis @ consts)))
        logger.debug("case %d residual %.3e", case, residual)
        if residual < tol:
            return DriftClass(case, tuple(float(c) for c in consts), residual, tol)
        if residual < best.residual:
            best = DriftClass(None, tuple(float(c) for c in consts), residual, tol)
    return best


def antiderivative(p: DriftProblem, x_ref: float = 1.0) -> RealFunction:
    "F(x) = ∫_{x_ref}^x f(s)/s^γ ds by adaptive quadrature."

    def F(x: float) -> float:
        fn = lambda s: p.f(s) / s ** p.gamma  # noqa: E731
        return integrate.quad(fn, x_ref, x, epsabs=1e-13, epsrel=1e-12)[0]

    return F


@dataclass(frozen=True)
class SymmetryCase1:
    "Constants of drift equation (1) and an antiderivative F' = f/x^γ."

    A: float
    B: float
    F: Optional[RealFunction] = None


def case1_symmetry(
    p: DriftProblem,
    s: SymmetryCase1,
    u: Solution,
    eps: float,
    x: float,
    t: float,
) -> float:
    """The symmetry Ū_ε of drift equation (1) applied to the solution u.

    Ū_ε(x,t) = q^{-(1-γ)/(2-γ)}
               · exp(-4ε(x^{2-γ} + Ab(2-γ)²t²) / (b(2-γ)² q))
               · exp((F(x̃) - F(x)) / 2b) · u(x̃, t/q)
    with q = 1 + 4εt and x̃ = x / q^{2/(2-γ)}.
    """

    q = 1 + 4 * eps * t
    if q <= 0:
        raise ValueError(f"1 + 4·eps·t not positive: {q}")
    ensure_positive(x, "x")
    F = antiderivative(p) if s.F is None else s.F
    e = 2 - p.gamma
    xs = x / q ** (2 / e)
    factor = q ** (-(1 - p.gamma) / e)
    num = -4 * eps * (x ** e + s.A * p.b * e ** 2 * t ** 2)
    factor *= np.exp(num / (p.b * e ** 2 * q))
    factor *= np.exp((F(xs) - F(x)) / (2 * p.b))
    return float(factor * u(xs, t / q))


def pde_residual(
    p: DriftProblem, u: Solution, x: float, t: float, h: float = 1e-4
) -> float:
    "u_t - b x^γ u_xx - f u_x + g u by central differences (relative step h)."

    hx = h * x
    ht = h * max(t, 1e-2)
    u0 = u(x, t)
    u_t = (u(x, t + ht) - u(x, t - ht)) / (2 * ht)
    u_x = (u(x + hx, t) - u(x - hx, t)) / (2 * hx)
    u_xx = (u(x + hx, t) - 2 * u0 + u(x - hx, t)) / hx ** 2
    return u_t - p.b * x ** p.gamma * u_xx - p.f(x) * u_x + p.potential(x) * u0


def heat_mgf_check(
    g: float, a: float, x: float, t: float, nodes: int = 64
) -> Tuple[float, float]:
    """Gaussian moment generating function, by quadrature and closed form.

    ∫ e^{ay} N(x, g²t)(y) dy by Gauss-Hermite quadrature, against
    exp(a²g²t/2 + ax).
    """

    ensure_positive(g, "g")
    ensure_positive(t, "t")
    z, w = np.polynomial.hermite.hermgauss(nodes)
    y = x + np.sqrt(2 * t) * g * z
    lhs = float(np.sum(w * np.exp(a * y)) / np.sqrt(np.pi))
    rhs = float(np.exp(a * a * g * g * t / 2 + a * x))
    return lhs, rhs


# the square-root process dY = (1 - ηY) dt + √Y dW of the joint law
def _check_joint(x: float, T: float, eta: float) -> None:
    ensure_positive(x, "x")
    ensure_positive(T, "T")
    ensure_positive(eta, "eta")


def _kernel_log_prefactor(
    x: float, T: float, y: np.ndarray, eta: float
) -> np.ndarray:
    half = eta * T / 2
    return (
        np.log(eta / np.sinh(half))
        + 0.5 * (np.log(y) - np.log(x))
        + eta * (T + x - y - (x + y) / np.tanh(half))
    )


def _kernel_bessel_argument(
    x: float, T: float, y: np.ndarray, eta: float
) -> np.ndarray:
    return 2 * eta * np.sqrt(x * y) / np.sinh(eta * T / 2)


def joint_kernel_mu(x: float, T: float, y: Vector, mu: float, eta: float) -> Vector:
    """Kernel p(T, x, y; μ), the λ-inverse of the joint transform.

    η/sinh(ηT/2) (y/x)^{1/2} exp(η(T + x - y - (x+y) coth(ηT/2)))
    · I_ν(2η√(xy)/sinh(ηT/2)), ν = 2√(1/4 + 2μ).
    At μ = 0 it is the transition density of the square-root process.
    """

    _check_joint(x, T, eta)
    if mu < 0:
        raise ValueError(f"negative mu: {mu}")
    y = np.asarray(y, dtype=float)
    ensure_positive(y, "y")
    nu = 2 * np.sqrt(0.25 + 2 * mu)
    log_k = _kernel_log_prefactor(x, T, y, eta)
    log_k = log_k + bessel_i_log(nu, _kernel_bessel_argument(x, T, y, eta))
    return np.exp(log_k)


def _cir_law(x: float, T: float, eta: float) -> Tuple[float, float]:
    "Mean and standard deviation of Y_T."

    c, decay = cir_scale(SquareRootParams(1.0, eta, 1.0, x), T)
    lam = x * decay / c
    return c * (4 + lam), c * np.sqrt(2 * (4 + 2 * lam))


def joint_laplace(
    x: float, T: float, lam: float, mu: float, eta: float
) -> float:
    """E[exp(-λ Y_T - μ ∫ dt/Y_t)] by quadrature of the kernel in y."""

    _check_joint(x, T, eta)
    if lam < 0:
        raise ValueError(f"negative lambda: {lam}")
    center, scale = _cir_law(x, T, eta)

    def integrand(y: float) -> float:
        if y <= 0:
            return 0.0
        return float(np.exp(-lam * y) * joint_kernel_mu(x, T, y, mu, eta))

    return quad_positive(integrand, center, scale)


def joint_laplace_closed_form(
    x: float, T: float, lam: float, mu: float, eta: float
) -> float:
    """The joint transform in terms of the Whittaker function.

    Γ(3/2 + ν/2)/Γ(ν + 1) · exp(η(T + x - x coth(ηT/2)) + β²/2α)
    · M_{-1, ν/2}(β²/α) / (xα),
    α = η(1 + coth(ηT/2)) + λ, β = η√x/sinh(ηT/2), ν = 2√(1/4 + 2μ).
    The Whittaker first index follows from the Laplace integral of
    y^{1/2} e^{-αy} I_ν(2β√y).
    """

    _check_joint(x, T, eta)
    if lam < 0:
        raise ValueError(f"negative lambda: {lam}")
    if mu < 0:
        raise ValueError(f"negative mu: {mu}")
    half = eta * T / 2
    nu = 2 * np.sqrt(0.25 + 2 * mu)
    alpha = eta * (1 + 1 / np.tanh(half)) + lam
    beta = eta * np.sqrt(x) / np.sinh(half)
    z = beta ** 2 / alpha
    log_value = (
        log_gamma(1.5 + nu / 2)
        - log_gamma(nu + 1)
        + eta * (T + x - x / np.tanh(half))
        + z / 2
        - np.log(x * alpha)
    )
    return float(np.exp(log_value) * whittaker_m(-1.0, nu / 2, z))


@dataclass(frozen=True)
class InversionConfig:
    """Numerical Laplace inversion settings.

    nodes defaults to 11 + 128 (euler_abate_whitt) or 32 (talbot);
    scaling is the Euler discretization parameter A or the Talbot r/M
    ratio. The Talbot contour crosses into Re μ < 0, where the joint
    kernel grows like exp(π|ν|/2): it suits smooth transforms but not
    the joint density at small v, which is inverted on the Bromwich
    line by default. With check=True every value is also computed with
    more nodes, and a relative disagreement above check_tol raises
    InversionError.
    """

    method: str = "euler_abate_whitt"
    nodes: Optional[int] = None
    scaling: Optional[float] = None
    rel_tol: float = 1e-8
    check: bool = True
    check_tol: float = 1e-4

    def __post_init__(self) -> None:
        if self.method not in INVERTERS:
            raise ValueError(f"unknown inversion method: {self.method}")
        if self.nodes is None:
            nodes = 32 if self.method == "talbot" else EULER_M + 128
            object.__setattr__(self, "nodes", nodes)
        if self.scaling is None:
            scaling = TALBOT_R_FACTOR if self.method == "talbot" else EULER_A
            object.__setattr__(self, "scaling", scaling)
        low = 8 if self.method == "talbot" else 8 + EULER_M
        if self.nodes < low:
            raise ValueError(f"nodes < {low}: {self.nodes}")
        ensure_positive(self.scaling, "scaling")
        ensure_positive(self.rel_tol, "rel_tol")

    def invert(self, F: Callable, t: float, extra_nodes: int = 0) -> np.ndarray:
        "Invert the log-space transform F at time t."

        inverter = INVERTERS[self.method]
        nodes = self.nodes + extra_nodes
        return inverter(F, t, nodes, self.scaling, log_space=True)


@dataclass(frozen=True)
class JointDensityGrid:
    """Joint density of (Y_T, V_T = ∫ dt/Y_t) on a tensor grid.

    values[i, j] is the density at (y_grid[i], v_grid[j]); trapezoidal
    weights of both axes are kept for quadrature.
    """

    y_grid: Vector
    v_grid: Vector
    values: np.ndarray
    T: float
    x: float
    eta: float
    weights_y: Vector = field(init=False, repr=False, compare=False)
    weights_v: Vector = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        y = increasing_grid(self.y_grid, "y_grid", positive=True)
        v = increasing_grid(self.v_grid, "v_grid", positive=True)
        values = np.asarray(self.values, dtype=float)
        if values.shape != (y.size, v.size):
            m = f"values shape {values.shape} instead of {(y.size, v.size)}"
            raise ValueError(m)
        if np.any(values < 0):
            raise ValueError("negative density values")
        object.__setattr__(self, "y_grid", y)
        object.__setattr__(self, "v_grid", v)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights_y", trapezoid_weights(y))
        object.__setattr__(self, "weights_v", trapezoid_weights(v))

    def expectation(self, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> float:
        "∫∫ fn(y, v) density dy dv on the grid."

        y, v = np.meshgrid(self.y_grid, self.v_grid, indexing="ij")
        w = np.outer(self.weights_y, self.weights_v)
        return float(np.sum(fn(y, v) * self.values * w))

    def total_mass(self) -> float:
        return float(self.weights_y @ self.values @ self.weights_v)

    def y_marginal(self) -> Vector:
        return self.values @ self.weights_v

    def v_marginal(self) -> Vector:
        return self.weights_y @ self.values

    def to_csv(self, filename: str) -> None:
        serialize.grid_to_csv(
            filename, self.y_grid, self.v_grid, self.values,
            self.weights_y, self.weights_v,
        )

    def to_json(self, filename: str) -> None:
        header = {"T": self.T, "x": self.x, "eta": self.eta}
        serialize.grid_to_json(filename, header, self.y_grid, self.v_grid, self.values)

    @classmethod
    def from_json(cls, filename: str) -> "JointDensityGrid":
        header, y, v, values = serialize.grid_from_json(filename)
        return cls(y, v, values, header["T"], header["x"], header["eta"])


def _joint_log_transform(x: float, T: float, y: Vector, eta: float) -> Callable:
    "μ ↦ log p(T, x, y; μ) on complex nodes, for all grid levels y."

    log_pref = _kernel_log_prefactor(x, T, y, eta)
    z = _kernel_bessel_argument(x, T, y, eta)

    def F(mu: np.ndarray) -> np.ndarray:
        nu = np.sqrt(1 + 8 * mu)[:, None]
        return log_pref + bessel_i_log_complex(nu, z)

    return F


def invert_joint_density(
    x: float,
    T: float,
    eta: float,
    cfg: InversionConfig,
    y_grid: Grid,
    v_grid: Grid,
) -> JointDensityGrid:
    """Joint density of (Y_T, ∫ dt/Y_t) on the grid.

    For each v the map μ ↦ p(T, x, y; μ) is inverted at v for all y at
    once; small negatives (inversion noise) are clipped.
    """

    _check_joint(x, T, eta)
    y = increasing_grid(y_grid, "y_grid", positive=True)
    v = increasing_grid(v_grid, "v_grid", positive=True)
    logger.info(
        "inverting %d x %d grid with %s, %d nodes",
        y.size, v.size, cfg.method, cfg.nodes,
    )
    F = _joint_log_transform(x, T, y, eta)
    values = np.empty((y.size, v.size))
    for j, vj in enumerate(v):
        values[:, j] = cfg.invert(F, vj)

    top = float(np.max(np.abs(values)))
    if not np.isfinite(top):
        raise InversionError("non-finite inversion values", float("inf"))
    if cfg.check:
        check = np.empty_like(values)
        for j, vj in enumerate(v):
            check[:, j] = cfg.invert(F, vj, extra_nodes=8)
        gap = float(np.max(np.abs(values - check)))
        disagreement = gap / max(top, np.finfo(float).tiny)
        if not np.isfinite(disagreement):
            disagreement = float("inf")
        logger.info("inversion self-consistency %.3e", disagreement)
        if disagreement > cfg.check_tol:
            m = f"inversions disagree by {disagreement:.3e} (relative)"
            raise InversionError(m, disagreement)

    most_negative = float(np.min(values))
    if most_negative < -1e-6 * top:
        logger.warning("clipping density values down to %.3e", most_negative)
    values = np.clip(values, 0.0, None)
    return JointDensityGrid(y, v, values, T, x, eta)


def default_grids(
    x: float,
    T: float,
    eta: float,
    ny: int = 48,
    nv: int = 48,
    seed: int = 0,
    n_pilot: int = 4000,
    n_steps: int = 200,
) -> Tuple[Vector, Vector]:
    """Grids covering the effective support of (Y_T, ∫ dt/Y_t).

    The y grid spans the 1e-7 and 1 - 1e-7 quantiles of the exact law of
    Y_T; the v grid extends the range of a pilot simulation (exact
    square-root steps, trapezoidal integral) by 40% below and 60% above.
    """

    _check_joint(x, T, eta)
    if ny < 2 or nv < 2:
        raise ValueError(f"grids need two points: ny = {ny}, nv = {nv}")
    p = SquareRootParams(1.0, eta, 1.0, x)
    c, decay = cir_scale(p, T)
    law = stats.ncx2(4.0, x * decay / c)
    y_lo, y_hi = c * law.ppf(1e-7), c * law.ppf(1 - 1e-7)
    y_grid = np.linspace(max(y_lo, 1e-8 * y_hi), y_hi, ny)

    stream = RngStream(seed)
    dt = T / n_steps
    y = np.full(n_pilot, x)
    inv = 0.5 / y
    for _ in range(n_steps):
        y = cir_sample_transition(stream, p, y, dt)
        inv = inv + 1 / np.maximum(y, 1e-300)
        inv_last = 1 / np.maximum(y, 1e-300)
    integral = dt * (inv - 0.5 * inv_last)
    v_grid = np.linspace(0.6 * np.min(integral), 1.6 * np.max(integral), nv)
    return y_grid, v_grid
