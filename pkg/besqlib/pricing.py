#!/usr/bin/env python3

# Copyright (C) 2020 The besqlib developers
#
# This file is part of besqlib. It is subject to the license terms in the
# LICENSE file found in the top-level directory of this distribution.
#
# No part of besqlib including this file, may be copied, modified, propagated,
# or distributed except according to the terms contained in the LICENSE file.

"""Real-world pricing under the benchmark approach.

With the growth optimal portfolio S as numéraire a claim H paid at T is
worth

  V_0 = S_0 E[H / S_T]

under the real-world measure; no equivalent risk-neutral measure is
needed, which matters in the minimal market model, where the
benchmarked savings account is a strict supermartingale.

Monte Carlo estimates are built from exact terminal draws in
reproducible path batches (batch b draws from RngStream(seed, b)),
with batch-means standard errors and a heavy-tail diagnostic on the
benchmarked payoffs. Volatility options need the joint law of
(Y_T, ∫dt/Y_t): they are priced by quadrature against the inverted
joint density or by multilevel Monte Carlo.
"""

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, Optional, Union

import numpy as np
from scipy import integrate, stats

from .errors import CoverageError, IntegrabilityWarning
from .liesym import (
    InversionConfig,
    JointDensityGrid,
    default_grids,
    invert_joint_density,
)
from .processes import (
    MmmParams,
    besq_density,
    mmm_terminal_sample,
    mmm_y_path,
    phi_time,
)
from .randkit import RngStream, batch_streams
from .utils import (
    batch_means_se,
    ensure_non_negative,
    ensure_positive,
    normal_quantile,
    quad_positive,
)
from .wishart import BivariateMmmParams, bivariate_terminal_sample

logger = logging.getLogger(__name__)

Model = Union[MmmParams, BivariateMmmParams]

PAYOFF_KINDS = (
    "eu_call_on_index",
    "eu_put_on_index",
    "vol_put",
    "vol_call",
    "fx_call",
    "zcb",
    "custom_terminal",
)
VOL_KINDS = ("vol_put", "vol_call")
METHODS = ("exact_mc", "quadrature", "mlmc")

# share of the top 0.1% benchmarked samples above which a warning is issued
TAIL_SHARE_LIMIT = 0.2


@dataclass(frozen=True)
class Estimate:
    value: float
    std_error: float
    ci_low: float
    ci_high: float
    n_samples: int
    seed: Optional[int]
    method: str
    diagnostics: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method: {self.method}")
        ensure_non_negative(self.std_error, "std_error")
        if not self.ci_low <= self.value <= self.ci_high:
            m = f"value {self.value} outside [{self.ci_low}, {self.ci_high}]"
            raise ValueError(m)

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["ci"] = [d.pop("ci_low"), d.pop("ci_high")]
        d["n"] = d.pop("n_samples")
        return d


def exact_estimate(value: float, method: str = "quadrature", **diagnostics) -> Estimate:
    "A deterministic value, with zero standard error."

    return Estimate(value, 0.0, value, value, 0, None, method, diagnostics)


@dataclass(frozen=True)
class PayoffSpec:
    """Claim H paid at maturity.

    Index payoffs are functions of the GOP S_T; volatility payoffs of
    √((1/T)∫dt/Y_t) ("integral" monitoring); fx_call of the ratio of
    the two GOPs of a bivariate model. custom_terminal evaluates fn on
    the array of GOP values (shape (n,) or (n, 2)).
    """

    kind: str
    strike: float = 0.0
    maturity: float = 1.0
    monitoring: str = "terminal"
    fn: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self) -> None:
        if self.kind not in PAYOFF_KINDS:
            raise ValueError(f"unknown payoff kind: {self.kind}")
        ensure_non_negative(self.strike, "strike")
        ensure_positive(self.maturity, "maturity")
        if self.monitoring not in ("terminal", "integral"):
            raise ValueError(f"unknown monitoring: {self.monitoring}")
        if self.kind in VOL_KINDS:
            object.__setattr__(self, "monitoring", "integral")
        if self.kind == "custom_terminal" and self.fn is None:
            raise ValueError("custom_terminal payoff without fn")


def index_payoff(spec: PayoffSpec, s: np.ndarray) -> np.ndarray:
    "H(S_T) for the terminal payoffs on a single index."

    K = spec.strike
    if spec.kind == "eu_call_on_index":
        return np.maximum(s - K, 0.0)
    if spec.kind == "eu_put_on_index":
        return np.maximum(K - s, 0.0)
    if spec.kind == "zcb":
        return np.ones_like(s)
    if spec.kind == "custom_terminal":
        return np.asarray(spec.fn(s), dtype=float)
    raise ValueError(f"not a terminal index payoff: {spec.kind}")


def vol_payoff(spec: PayoffSpec, v: np.ndarray) -> np.ndarray:
    "Volatility payoff of V = ∫₀^T dt/Y_t."

    vol = np.sqrt(np.asarray(v, dtype=float) / spec.maturity)
    if spec.kind == "vol_put":
        return np.maximum(spec.strike - vol, 0.0)
    if spec.kind == "vol_call":
        return np.maximum(vol - spec.strike, 0.0)
    raise ValueError(f"not a volatility payoff: {spec.kind}")


def benchmark_ratio(p: MmmParams, T: float, y: np.ndarray) -> np.ndarray:
    "S_0/S_T = Y_0 e^{-(r+η)T}/Y_T, since S_T = e^{rT} α_T Y_T."

    return p.y0 * np.exp(-(p.r + p.eta) * T) / y


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo settings.

    n_steps exact steps to maturity for terminal payoffs, vol_steps
    for the trapezoidal ∫dt/Y; workers > 1 evaluates path batches in
    a thread pool, results being merged in batch order.
    """

    n_paths: int = 100_000
    seed: int = 0
    batch_size: int = 10_000
    ci_level: float = 0.99
    antithetic: bool = False
    n_batches_se: int = 100
    workers: int = 1
    n_steps: int = 1
    vol_steps: int = 200

    def __post_init__(self) -> None:
        for name in ("n_paths", "batch_size", "n_batches_se", "workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} < 1: {getattr(self, name)}")
        for name in ("n_steps", "vol_steps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} < 1: {getattr(self, name)}")
        if not 0 < self.ci_level < 1:
            raise ValueError(f"ci_level not in (0, 1): {self.ci_level}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError(f"seed not a 64-bit unsigned integer: {self.seed}")


def tail_share(samples: np.ndarray) -> float:
    "Share of Σ|x| carried by the largest 0.1% of |x| (at least one sample)."

    x = np.abs(np.asarray(samples, dtype=float))
    total = float(np.sum(x))
    if total == 0:
        return 0.0
    k = max(1, x.size // 1000)
    return float(np.sum(np.partition(x, x.size - k)[-k:]) / total)


def estimate_from_samples(
    samples: np.ndarray,
    scale: float,
    cfg: McConfig,
    method: str = "exact_mc",
) -> Estimate:
    """Estimate scale·E[samples] from benchmarked payoff samples.

    The samples must be in path order for the batch-means standard
    error. A warning is issued when the top 0.1% of the samples carry
    more than 20% of the estimate.
    """

    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("no samples")
    value = scale * float(np.mean(x))
    se = abs(scale) * batch_means_se(x, cfg.n_batches_se)
    half = normal_quantile(cfg.ci_level) * se
    share = tail_share(x)
    if x.size >= 1000 and share > TAIL_SHARE_LIMIT:
        m = f"top 0.1% of the samples carry {share:.1%} of the estimate"
        logger.warning(m)
        warnings.warn(m, IntegrabilityWarning)
    diagnostics = {"tail_share": share}
    return Estimate(
        value, se, value - half, value + half, x.size, cfg.seed, method, diagnostics
    )


def run_batches(
    fn: Callable[[RngStream, int], np.ndarray], cfg: McConfig
) -> np.ndarray:
    """Concatenate fn(stream, size) over the path batches, in batch order.

    The result does not depend on the number of workers.
    """

    batches = batch_streams(cfg.seed, cfg.n_paths, cfg.batch_size)
    logger.info(
        "%d paths in %d batches, seed %d", cfg.n_paths, len(batches), cfg.seed
    )
    if cfg.workers == 1:
        parts = [fn(stream, size) for stream, size in batches]
    else:
        with ThreadPoolExecutor(cfg.workers) as pool:
            parts = list(pool.map(lambda b: fn(*b), batches))
    return np.concatenate(parts, axis=0)


def _mmm_ratios(p: MmmParams, payoff: PayoffSpec, cfg: McConfig) -> np.ndarray:
    T = payoff.maturity

    def batch(stream: RngStream, size: int) -> np.ndarray:
        sbar = mmm_terminal_sample(stream, p, T, size, cfg.n_steps)
        s = p.savings(T) * sbar
        return index_payoff(payoff, s) / s

    return run_batches(batch, cfg)


def fx_payoff(p: BivariateMmmParams, payoff: PayoffSpec, s: np.ndarray) -> np.ndarray:
    "H(S^1_T, S^2_T); fx_call is (S^1/S^2 - K)⁺, zcb pays one unit."

    if payoff.kind == "fx_call":
        return np.maximum(s[:, 0] / s[:, 1] - payoff.strike, 0.0)
    if payoff.kind == "zcb":
        return np.ones(len(s))
    if payoff.kind == "custom_terminal":
        return np.asarray(payoff.fn(s), dtype=float)
    raise ValueError(f"payoff {payoff.kind} not available for bivariate models")


def _bivariate_ratios(
    p: BivariateMmmParams, payoff: PayoffSpec, cfg: McConfig
) -> np.ndarray:
    T = payoff.maturity
    growth = np.exp(np.array(p.r) * T)

    def batch(stream: RngStream, size: int) -> np.ndarray:
        sbar = bivariate_terminal_sample(stream, p, T, size, cfg.antithetic)
        s = growth * sbar
        return fx_payoff(p, payoff, s) / s[:, 0]

    return run_batches(batch, cfg)


def real_world_price(model: Model, payoff: PayoffSpec, mc: McConfig) -> Estimate:
    """S_0·E[H/S_T] from exact terminal samples.

    Bivariate models are priced in the first currency, with S^1 as
    numéraire.
    """

    if payoff.kind in VOL_KINDS:
        m = f"{payoff.kind} needs the path integral: use price_vol_put/price_vol_call"
        raise ValueError(m)
    if isinstance(model, BivariateMmmParams):
        ratios = _bivariate_ratios(model, payoff, mc)
        s0 = model.sbar0[0]
    elif isinstance(model, MmmParams):
        if payoff.kind == "fx_call":
            raise ValueError("fx_call needs a bivariate model")
        ratios = _mmm_ratios(model, payoff, mc)
        s0 = model.s0
    else:
        raise TypeError(f"unknown model type: {type(model).__name__}")
    return estimate_from_samples(ratios, s0, mc)


def price_fx_call(
    model: BivariateMmmParams, K: float, T: float, mc: McConfig
) -> Estimate:
    return real_world_price(model, PayoffSpec("fx_call", K, T), mc)


def benchmarked_savings(model: MmmParams, T: float, mc: McConfig) -> Estimate:
    """S_0·E[S⁰_T/S_T], the benchmarked savings account at T.

    It is a strict supermartingale: the value falls below one.
    """

    growth = float(model.savings(T))
    spec = PayoffSpec("custom_terminal", 0.0, T, fn=lambda s: np.full_like(s, growth))
    return real_world_price(model, spec, mc)


def _besq4_law(p: MmmParams, T: float):
    "Transformed horizon φ(T) - φ(0), mean and standard deviation of s̄_T."

    dphi = float(phi_time(p, T) - p.phi0)
    return dphi, p.s0 + 4 * dphi, np.sqrt(8 * dphi ** 2 + 4 * p.s0 * dphi)


def _discounted_gop_expectation(
    p: MmmParams, T: float, fn: Callable[[float], float], lower: float = 0.0
) -> float:
    "E[fn(s̄_T); s̄_T > lower] by quadrature of the BESQ(4) density."

    dphi, center, scale = _besq4_law(p, T)

    def integrand(y: float) -> float:
        return fn(y) * float(besq_density(dphi, p.s0, y, 4.0))

    return quad_positive(integrand, center, scale, lower=lower)


def price_quadrature(model: MmmParams, payoff: PayoffSpec) -> Estimate:
    "S_0·E[H/S_T] for terminal index payoffs, by density quadrature."

    T = payoff.maturity
    growth = float(model.savings(T))

    def ratio(y: float) -> float:
        s = growth * y
        return float(index_payoff(payoff, np.array([s]))[0]) / s

    value = model.s0 * _discounted_gop_expectation(model, T, ratio)
    return exact_estimate(value)


def zcb_quadrature(model: MmmParams, T: float) -> float:
    "Price of the zero-coupon bond paying 1 at T."

    return price_quadrature(model, PayoffSpec("zcb", 0.0, T)).value


def fx_call_k0_quadrature(model: BivariateMmmParams, T: float) -> float:
    "S^1_0·E[1/S^2_T], the fx call at zero strike; it does not depend on rho."

    second = model.marginal(1)
    e = _discounted_gop_expectation(second, T, lambda y: 1 / y)
    return model.sbar0[0] * e / float(second.savings(T))


def fx_call_quadrature_independent(
    model: BivariateMmmParams, K: float, T: float
) -> float:
    """S^1_0·E[(S^1_T/S^2_T - K)⁺/S^1_T] for independent GOPs (rho = 0).

    Nested quadrature over the two BESQ(4) marginals: for given s̄_2
    the payoff is positive for s̄_1 > K e^{(r_2 - r_1)T} s̄_2.
    """

    if model.rho != 0:
        raise ValueError(f"nonzero rho: {model.rho}")
    ensure_non_negative(K, "strike")
    first, second = model.marginal(0), model.marginal(1)
    g1, g2 = float(first.savings(T)), float(second.savings(T))

    def inner(y2: float) -> float:
        if K == 0:
            return 1 / (g2 * y2)
        fn = lambda y1: 1 / (g2 * y2) - K / (g1 * y1)  # noqa: E731
        return _discounted_gop_expectation(first, T, fn, lower=K * g2 * y2 / g1)

    e = _discounted_gop_expectation(second, T, inner)
    return model.sbar0[0] * e


def _check_grid(model: MmmParams, T: float, grid: JointDensityGrid) -> None:
    for name, value, expected in (
        ("x", grid.x, model.y0),
        ("T", grid.T, T),
        ("eta", grid.eta, model.eta),
    ):
        if abs(value - expected) > 1e-12 * max(1.0, abs(expected)):
            raise ValueError(f"grid {name} {value} does not match model {expected}")


def joint_density_for(
    model: MmmParams, T: float, inversion: Optional[InversionConfig] = None
) -> JointDensityGrid:
    "Joint density of (Y_T, ∫dt/Y_t) on the default grids."

    cfg = InversionConfig() if inversion is None else inversion
    y_grid, v_grid = default_grids(model.y0, T, model.eta)
    return invert_joint_density(model.y0, T, model.eta, cfg, y_grid, v_grid)


def _price_vol(
    model: MmmParams,
    payoff: PayoffSpec,
    grid: Optional[JointDensityGrid],
    mc: Optional[Any],
    method: str,
) -> Estimate:
    T = payoff.maturity
    if method == "mlmc":
        # mlmc builds on the payoff types of this module
        from .mlmc import MlmcConfig, mlmc_run

        cfg = MlmcConfig(eps=5e-4) if mc is None else mc
        return mlmc_run(model, payoff, cfg)[0]
    if method != "quadrature":
        raise ValueError(f"unknown method for volatility options: {method}")
    if grid is None:
        grid = joint_density_for(model, T)
    _check_grid(model, T, grid)
    mass = grid.total_mass()
    if mass < 0.99:
        raise CoverageError(f"grid carries probability mass {mass:.4f} < 0.99", mass)
    if mass < 0.999:
        logger.warning("grid carries probability mass %.5f", mass)

    # S_0/S_T already carries S_0
    def fn(y: np.ndarray, v: np.ndarray) -> np.ndarray:
        return vol_payoff(payoff, v) * benchmark_ratio(model, T, y)

    return exact_estimate(grid.expectation(fn), mass=mass)


def price_vol_put(
    model: MmmParams,
    K: float,
    T: float,
    grid: Optional[JointDensityGrid] = None,
    mc: Optional[Any] = None,
    method: str = "quadrature",
) -> Estimate:
    """S_0·E[(K - √((1/T)∫dt/Y_t))⁺ / S_T].

    quadrature integrates against the joint density grid (inverted on
    the default grids when not given); mlmc delegates to mlmc_run with
    mc as its MlmcConfig.
    """

    return _price_vol(model, PayoffSpec("vol_put", K, T), grid, mc, method)


def price_vol_call(
    model: MmmParams,
    K: float,
    T: float,
    grid: Optional[JointDensityGrid] = None,
    mc: Optional[Any] = None,
    method: str = "quadrature",
) -> Estimate:
    "Call on volatility, the parity partner of price_vol_put."

    return _price_vol(model, PayoffSpec("vol_call", K, T), grid, mc, method)


def vol_inputs(
    stream: RngStream, model: MmmParams, T: float, size: int, n_steps: int
) -> np.ndarray:
    """Exact draws of (Y_T, ∫₀^T dt/Y_t), shape (size, 2).

    Y is sampled exactly on an even grid; the integral is trapezoidal.
    """

    times = np.linspace(0.0, T, n_steps + 1)
    y = mmm_y_path(stream, model, times, size)
    v = integrate.trapezoid(1 / y, times, axis=-1)
    return np.column_stack([y[:, -1], v])


def parity_gap(
    model: MmmParams, K: float, T: float, mc: McConfig, common: bool = True
) -> Estimate:
    """Estimate of E[(call - put - forward)/S_T]·S_0 for volatility options.

    With common random numbers the gap vanishes pathwise; otherwise the
    three legs use independent child streams of every batch.
    """

    def batch(stream: RngStream, size: int) -> np.ndarray:
        if common:
            y, v = vol_inputs(stream, model, T, size, mc.vol_steps).T
            a = np.sqrt(v / T) - K
            legs = np.maximum(a, 0.0) - np.maximum(-a, 0.0) - a
            return legs * benchmark_ratio(model, T, y) / model.s0
        gap = np.zeros(size)
        for leg, sign in enumerate((1.0, -1.0, -1.0)):
            y, v = vol_inputs(stream.spawn(leg), model, T, size, mc.vol_steps).T
            a = np.sqrt(v / T) - K
            h = (np.maximum(a, 0.0), np.maximum(-a, 0.0), a)[leg]
            gap += sign * h * benchmark_ratio(model, T, y) / model.s0
        return gap

    return estimate_from_samples(run_batches(batch, mc), model.s0, mc)


def ks_pvalue_terminal(model: MmmParams, T: float, samples: np.ndarray) -> float:
    """KS p-value of discounted GOP draws against the exact law.

    s̄_T = Δφ·χ'²(4, s0/Δφ).
    """

    dphi = _besq4_law(model, T)[0]
    law = stats.ncx2(4.0, model.s0 / dphi, scale=dphi)
    return float(stats.kstest(samples, law.cdf).pvalue)
