#!/usr/bin/env python3

# Copyright (C) 2020 The besqlib developers
#
# This file is part of besqlib. It is subject to the license terms in the
# LICENSE file found in the top-level directory of this distribution.
#
# No part of besqlib including this file, may be copied, modified, propagated,
# or distributed except according to the terms contained in the LICENSE file.

"""Command line interface.

  besqlib [-v] simulate|price|density|check-symmetry|validate|schema ...

A run is configured by a JSON document (--config) with the sections
listed in SCHEMA; values are resolved as dataclass defaults, then the
preset, then the config file, then command line flags. Exit codes:
0 success, 2 configuration error, 3 numerical failure; any other
exception is a defect and propagates.
"""

import argparse
import json
import logging
import sys
from contextlib import contextmanager
from os import makedirs, path
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__, liesym, pricing, processes, serialize, wishart
from .errors import ConfigError, NumericalError
from .mlmc import MlmcConfig, mlmc_run
from .presets import PRESETS, build_model, preset
from .randkit import RngStream, batch_streams
from .utils import quad_positive

logger = logging.getLogger(__name__)

NUM = (int, float)
LIST = (list,)
NUM_OR_LIST = (int, float, list)

SCHEMA: Dict[str, Dict[str, tuple]] = {
    "model": {
        "preset": (str,),
        "model": (str,),
        "s0": NUM,
        "alpha0": NUM_OR_LIST,
        "eta": NUM_OR_LIST,
        "r": NUM_OR_LIST,
        "phi0": NUM,
        "sbar0": LIST,
        "rho": NUM,
        "w": LIST,
        "d": (int,),
        "alpha": NUM,
        "a": LIST,
        "b": LIST,
        "x0": LIST,
    },
    "payoff": {
        "kind": (str,),
        "strike": NUM,
        "maturity": NUM,
        "monitoring": (str,),
        "method": (str,),
    },
    "mc": {
        "n_paths": (int,),
        "seed": (int,),
        "batch_size": (int,),
        "ci_level": NUM,
        "antithetic": (bool,),
        "n_batches_se": (int,),
        "workers": (int,),
        "n_steps": (int,),
        "vol_steps": (int,),
    },
    "mlmc": {
        "eps": NUM,
        "L_max": (int,),
        "n0": (int,),
        "pilot_n": (int,),
        "batch_size": (int,),
        "floor": NUM,
        "ci_level": NUM,
    },
    "inversion": {
        "method": (str,),
        "nodes": (int,),
        "scaling": NUM,
        "rel_tol": NUM,
        "check": (bool,),
        "check_tol": NUM,
        "ny": (int,),
        "nv": (int,),
    },
    "simulation": {"T": NUM, "steps": (int,), "scheme": (str,)},
    "symmetry": {"drift": (str,), "delta": NUM, "eta": NUM, "mu": NUM},
    "output": {"dir": (str,), "format": (str,)},
}

# command line names of the payoff kinds
PAYOFF_ALIASES = {
    "index_call": "eu_call_on_index",
    "index_put": "eu_put_on_index",
    "gop": "custom_terminal",
}


def schema_document() -> Dict[str, Dict[str, List[str]]]:
    return {
        section: {key: [t.__name__ for t in types] for key, types in keys.items()}
        for section, keys in SCHEMA.items()
    }


def _check_type(value: Any, types: tuple, location: str) -> None:
    ok = isinstance(value, types) and not (
        isinstance(value, bool) and bool not in types
    )
    if not ok:
        names = "|".join(t.__name__ for t in types)
        m = f"expected {names}, got {type(value).__name__}"
        raise ConfigError(m, location)


def validate_config(doc: Any) -> Dict[str, Dict[str, Any]]:
    "Check a RunConfig document against SCHEMA."

    if not isinstance(doc, dict):
        raise ConfigError("the configuration must be a JSON object", "")
    for section, body in doc.items():
        if section not in SCHEMA:
            raise ConfigError("unknown section", section)
        if not isinstance(body, dict):
            raise ConfigError("a section must be a JSON object", section)
        for key, value in body.items():
            location = f"{section}.{key}"
            if key not in SCHEMA[section]:
                raise ConfigError("unknown key", location)
            _check_type(value, SCHEMA[section][key], location)
    return {section: dict(doc.get(section, {})) for section in SCHEMA}


def load_config(filename: Optional[str]) -> Dict[str, Dict[str, Any]]:
    if filename is None:
        return validate_config({})
    try:
        with open(filename, "r") as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        m = f"malformed JSON at line {e.lineno} column {e.colno}: {e.msg}"
        raise ConfigError(m, filename)
    except OSError as e:
        raise ConfigError(f"cannot read: {e.strerror}", filename)
    return validate_config(doc)


def _set(cfg: Dict[str, Dict[str, Any]], location: str, value: Any) -> None:
    if value is not None:
        section, key = location.split(".")
        cfg[section][key] = value


def resolve_config(args: argparse.Namespace) -> Dict[str, Dict[str, Any]]:
    "Config file values overridden by the command line flags."

    cfg = load_config(args.config)
    for location, attr in (
        ("mc.seed", "seed"),
        ("mc.n_paths", "paths"),
        ("payoff.method", "method"),
        ("output.dir", "out"),
        ("output.format", "format"),
        ("model.preset", "preset"),
    ):
        _set(cfg, location, getattr(args, attr, None))
    validate_config(cfg)
    return cfg


# preset of each model family, used when only the family is given
FAMILY_PRESETS = {"mmm": "stylized", "bivariate": "bivariate", "wishart": "wishart"}


def model_section(
    cfg: Dict[str, Dict[str, Any]], default_preset: str
) -> Dict[str, Any]:
    "The model section with its preset expanded underneath."

    section = dict(cfg["model"])
    name = section.pop("preset", None)
    kind = section.get("model")
    if name is None:
        name = FAMILY_PRESETS.get(kind, default_preset)
    base = preset(name)
    if kind is not None and base.get("model") != kind:
        base = {}
    base.update(section)
    return base


@contextmanager
def _parameters(location: str) -> Iterator[None]:
    "Report invalid values met while building from the config as ConfigError."

    try:
        yield
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e), location) from e


def _build(section: Dict[str, Any], cls: Callable, location: str) -> Any:
    with _parameters(location):
        return cls(**section)


def _grids(
    cfg: Dict[str, Dict[str, Any]], model: processes.MmmParams, T: float
) -> Tuple[np.ndarray, np.ndarray]:
    inv = cfg["inversion"]
    with _parameters("inversion"):
        return liesym.default_grids(
            model.y0, T, model.eta, inv.get("ny", 48), inv.get("nv", 48),
            cfg["mc"].get("seed", 0),
        )


def _out_dir(cfg: Dict[str, Dict[str, Any]]) -> str:
    out = cfg["output"].get("dir", ".")
    makedirs(out, exist_ok=True)
    return out


def _format(cfg: Dict[str, Dict[str, Any]]) -> str:
    fmt = cfg["output"].get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown format: {fmt}", "output.format")
    return fmt


def _emit(report: Dict[str, Any]) -> None:
    print(json.dumps(serialize.jsonable(report), indent=2, sort_keys=True))


def _wishart_model(section: Dict[str, Any]) -> wishart.WishartParams:
    d = section.get("d")
    if d is not None and np.shape(section.get("x0", [])) != (d, d):
        section = dict(section, a=np.eye(d).tolist(), x0=np.eye(d).tolist())
        section["b"] = np.zeros((d, d)).tolist()
    p = build_model(section)
    if wishart.existence_class(p) == "none":
        m = (
            f"alpha = {p.alpha} < d - 1 = {p.d - 1}: "
            "a weak solution needs alpha >= d - 1"
        )
        raise ConfigError(m, "model.alpha")
    return p


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    _set(cfg, "model.model", args.model)
    _set(cfg, "model.alpha", args.alpha)
    _set(cfg, "model.d", args.d)
    _set(cfg, "simulation.T", args.T)
    _set(cfg, "simulation.steps", args.steps)
    sim = cfg["simulation"]
    T = sim.get("T", 1.0)
    steps = sim.get("steps", 10)
    if T <= 0 or steps < 1:
        raise ConfigError(f"invalid grid: T = {T}, steps = {steps}", "simulation")
    times = np.linspace(0.0, T, steps + 1)
    mc = _build(cfg["mc"], pricing.McConfig, "mc")
    section = model_section(cfg, "stylized")
    kind = section.get("model", "mmm")
    header = serialize.provenance(mc.seed, model=kind, batch_size=mc.batch_size)

    batches = batch_streams(mc.seed, mc.n_paths, mc.batch_size)
    if kind == "wishart":
        p = _wishart_model(section)
        scheme = sim.get("scheme", "exact" if float(p.alpha).is_integer() else "euler")
        if scheme == "exact":
            fn = lambda s, n: wishart.wishart_exact_path(s, p, times, n)  # noqa: E731
        elif scheme == "euler":
            fn = lambda s, n: wishart.wishart_euler_path(s, p, times, n)  # noqa: E731
        else:
            raise ConfigError(f"unknown scheme: {scheme}", "simulation.scheme")
        paths = np.concatenate([fn(s, n) for s, n in batches])
        mean = paths.mean(axis=0)
        summary = {"mean_terminal": mean[-1], "existence": wishart.existence_class(p)}
        rows = wishart.paths_to_long_rows(paths, times)
    elif kind == "bivariate":
        p = build_model(section)
        paths = np.concatenate(
            [
                wishart.bivariate_terminal_sample(s, p, T, n, mc.antithetic)
                for s, n in batches
            ]
        )
        gop = paths * np.exp(np.array(p.r) * T)
        summary = {"mean_terminal": gop.mean(axis=0)}
        rows = [
            (k, T, i, i, float(gop[k, i]))
            for k in range(gop.shape[0])
            for i in range(2)
        ]
        times = np.array([T])
        paths = gop[:, None, :]
    else:
        p = build_model(section)
        paths = np.concatenate(
            [processes.mmm_gop_path(s, p, times, n) for s, n in batches]
        )
        se = paths.std(axis=0, ddof=1) / np.sqrt(paths.shape[0])
        summary = {"mean": paths.mean(axis=0), "std_error": se}
        rows = None

    out = _out_dir(cfg)
    if _format(cfg) == "json":
        doc = {"provenance": header, "times": times, "paths": paths}
        serialize.write_json(path.join(out, "paths.json"), doc)
    elif rows is None:
        serialize.paths_csv(path.join(out, "paths.csv"), times, paths, header)
    else:
        serialize.matrix_paths_csv(path.join(out, "paths.csv"), rows, header)
    _emit({"model": kind, "n_paths": mc.n_paths, "times": times, **summary})
    return 0


def _payoff(cfg: Dict[str, Dict[str, Any]]) -> pricing.PayoffSpec:
    section = dict(cfg["payoff"])
    section.pop("method", None)
    kind = section.get("kind", "index_call")
    section["kind"] = PAYOFF_ALIASES.get(kind, kind)
    if section["kind"] == "custom_terminal":
        # the numéraire itself, priced at S_0
        section["fn"] = lambda s: s if np.ndim(s) == 1 else s[:, 0]
    return _build(section, pricing.PayoffSpec, "payoff")


def _inversion(cfg: Dict[str, Dict[str, Any]]) -> liesym.InversionConfig:
    section = {k: v for k, v in cfg["inversion"].items() if k not in ("ny", "nv")}
    return _build(section, liesym.InversionConfig, "inversion")


def _mlmc_config(cfg: Dict[str, Dict[str, Any]]) -> MlmcConfig:
    section = dict(cfg["mlmc"])
    section.setdefault("eps", 5e-4)
    return _build(section, MlmcConfig, "mlmc")


def cmd_price(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    _set(cfg, "payoff.kind", args.payoff)
    _set(cfg, "payoff.strike", args.strike)
    _set(cfg, "payoff.maturity", args.T)
    _set(cfg, "model.rho", args.rho)
    _set(cfg, "mlmc.eps", args.eps)
    payoff = _payoff(cfg)
    mc = _build(cfg["mc"], pricing.McConfig, "mc")
    default = "bivariate" if payoff.kind == "fx_call" else "stylized"
    section = model_section(cfg, default)
    model = build_model(section)
    method = cfg["payoff"].get("method")
    T, K = payoff.maturity, payoff.strike

    if payoff.kind in pricing.VOL_KINDS:
        if not isinstance(model, processes.MmmParams):
            raise ConfigError("volatility options need the mmm model", "model.model")
        method = method or "quadrature"
        price = pricing.price_vol_call
        if payoff.kind == "vol_put":
            price = pricing.price_vol_put
        if method == "quadrature":
            y_grid, v_grid = _grids(cfg, model, T)
            grid = liesym.invert_joint_density(
                model.y0, T, model.eta, _inversion(cfg), y_grid, v_grid
            )
            estimate = price(model, K, T, grid)
        elif method == "mlmc":
            estimate, stats = mlmc_run(model, payoff, _mlmc_config(cfg), mc.seed)
            header = serialize.provenance(mc.seed)
            filename = path.join(_out_dir(cfg), "levels.csv")
            serialize.level_stats_csv(filename, stats, header)
        else:
            raise ConfigError(f"unknown method: {method}", "payoff.method")
    elif method in (None, "mc"):
        estimate = pricing.real_world_price(model, payoff, mc)
    elif method == "quadrature":
        if not isinstance(model, processes.MmmParams):
            raise ConfigError("quadrature needs the mmm model", "payoff.method")
        estimate = pricing.price_quadrature(model, payoff)
    else:
        raise ConfigError(f"unknown method: {method}", "payoff.method")

    out = _out_dir(cfg)
    label = f"{payoff.kind}:K={K}:T={T}"
    serialize.estimate_json(
        path.join(out, "estimate.json"), estimate, section, cfg["payoff"]
    )
    serialize.append_ledger_row(path.join(out, "ledger.csv"), label, estimate)
    _emit(estimate.to_dict())
    return 0


def cmd_density(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    _set(cfg, "payoff.maturity", args.T)
    _set(cfg, "inversion.nodes", args.nodes)
    model = build_model(model_section(cfg, "stylized"))
    if not isinstance(model, processes.MmmParams):
        raise ConfigError("density needs the mmm model", "model.model")
    T = cfg["payoff"].get("maturity", 1.0)
    if T <= 0:
        raise ConfigError(f"non-positive maturity: {T}", "payoff.maturity")
    y_grid, v_grid = _grids(cfg, model, T)
    grid = liesym.invert_joint_density(
        model.y0, T, model.eta, _inversion(cfg), y_grid, v_grid
    )
    out = _out_dir(cfg)
    if _format(cfg) == "json":
        grid.to_json(path.join(out, "density.json"))
    else:
        grid.to_csv(path.join(out, "density.csv"))
    _emit({"total_mass": grid.total_mass(), "ny": len(y_grid), "nv": len(v_grid)})
    return 0


DRIFTS = {
    "besq": lambda s: liesym.besq_problem(s.get("delta", 4.0)),
    "square_root": lambda s: liesym.square_root_problem(
        s.get("eta", 0.05), s.get("mu", 0.0)
    ),
    "linear": lambda s: liesym.DriftProblem(1.0, 1.0, lambda x: x),
    "exp": lambda s: liesym.DriftProblem(1.0, 1.0, np.exp),
}


def cmd_check_symmetry(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    _set(cfg, "symmetry.drift", args.drift)
    _set(cfg, "symmetry.delta", args.delta)
    _set(cfg, "symmetry.eta", args.eta)
    _set(cfg, "symmetry.mu", args.mu)
    section = cfg["symmetry"]
    drift = section.get("drift", "besq")
    if drift not in DRIFTS:
        raise ConfigError(f"unknown drift: {drift}", "symmetry.drift")
    with _parameters("symmetry"):
        problem = DRIFTS[drift](section)
    result = liesym.classify_drift(problem, np.linspace(0.25, 4.0, 32))
    _emit(
        {
            "drift": drift,
            "case": result.case,
            "constants": result.constants if result.case else None,
            "residual": result.residual,
            "tolerance": result.tolerance,
        }
    )
    return 0


def _check(name: str, value: float, expected: float, tol: float) -> Dict[str, Any]:
    passed = bool(abs(value - expected) <= tol)
    return {
        "name": name,
        "value": value,
        "expected": expected,
        "tolerance": tol,
        "passed": passed,
    }


def _normalization_checks() -> List[Dict[str, Any]]:
    mass = quad_positive(
        lambda y: float(processes.besq_density(0.5, 1.0, y, 4.0)), 3.0, 2.0
    )
    y = np.linspace(0.05, 10.0, 200)
    sr = processes.SquareRootParams(1.0, 0.1, 1.0, 1.0)
    exact = processes.cir_transition_density(sr, 1.0, y, 1.0)
    kernel = liesym.joint_kernel_mu(1.0, 1.0, y, 0.0, 0.1)
    sup_rel = float(np.max(np.abs(kernel / exact - 1)))
    return [
        _check("besq_density mass", mass, 1.0, 1e-8),
        _check("kernel mass", liesym.joint_laplace(1.0, 1.0, 0.0, 0.0, 0.1), 1.0, 1e-6),
        _check("kernel vs transition density", sup_rel, 0.0, 1e-6),
    ]


def _symmetry_checks() -> List[Dict[str, Any]]:
    grid = np.linspace(0.25, 4.0, 32)
    besq = liesym.classify_drift(liesym.besq_problem(4.0), grid)
    lhs, rhs = liesym.heat_mgf_check(1.0, 0.5, 0.0, 2.0)
    return [
        _check("besq(4) drift case", float(besq.case or 0), 1.0, 0.0),
        _check("gaussian mgf", lhs, rhs, 1e-10 * rhs),
    ]


def _cross_method_checks() -> List[Dict[str, Any]]:
    checks = []
    for lam, mu in ((0.5, 0.5), (1.0, 0.0), (0.0, 2.0)):
        kernel = liesym.joint_laplace(1.0, 1.0, lam, mu, 0.1)
        closed = liesym.joint_laplace_closed_form(1.0, 1.0, lam, mu, 0.1)
        checks.append(_check(f"joint transform ({lam}, {mu})", kernel, closed, 1e-7))
    return checks


def _moment_checks(seed: int) -> List[Dict[str, Any]]:
    stream = RngStream(seed)
    n = 100_000
    x = processes.besq_sample_transition(stream, 1.0, 4.0, 0.5, n)
    se = float(np.std(x, ddof=1) / np.sqrt(n))
    model = build_model(preset("stylized"))
    mc = pricing.McConfig(n_paths=n, seed=seed)
    savings = pricing.benchmarked_savings(model, 5.0, mc)
    dphi = float(processes.phi_time(model, 5.0))
    expected = model.s0 * float(processes.besq_inverse_moment(model.s0, dphi))
    return [
        _check("besq(4) mean", float(np.mean(x)), 3.0, 3 * se),
        _check("benchmarked savings", savings.value, expected, 3 * savings.std_error),
    ]


def _fx_oracle_checks(strike: float, seed: int) -> List[Dict[str, Any]]:
    section = preset("bivariate")
    section["rho"] = 0.0
    model = build_model(section)
    value = pricing.fx_call_quadrature_independent(model, strike, 1.0)
    mc = pricing.price_fx_call(model, strike, 1.0, pricing.McConfig(seed=seed))
    k0 = pricing.fx_call_k0_quadrature(model, 1.0)
    zero = pricing.fx_call_quadrature_independent(model, 0.0, 1.0)
    return [
        _check(f"fx call K={strike}", mc.value, value, 3 * mc.std_error),
        _check("fx call K=0 vs marginal", zero, k0, 1e-8),
    ]


def cmd_validate(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    seed = cfg["mc"].get("seed", 0)
    if args.strike < 0:
        raise ConfigError(f"negative strike: {args.strike}", "strike")
    suites: Dict[str, Callable[[], List[Dict[str, Any]]]] = {
        "normalization": _normalization_checks,
        "symmetry": _symmetry_checks,
        "cross-method": _cross_method_checks,
        "moments": lambda: _moment_checks(seed),
        "fx-oracle": lambda: _fx_oracle_checks(args.strike, seed),
    }
    if args.suite != "all" and args.suite not in suites:
        raise ConfigError(f"unknown suite: {args.suite}", "suite")
    names = list(suites) if args.suite == "all" else [args.suite]
    checks = [c for name in names for c in suites[name]()]
    failures = [c["name"] for c in checks if not c["passed"]]
    _emit({"suite": args.suite, "checks": checks, "failures": failures})
    return 3 if failures else 0


def cmd_schema(args: argparse.Namespace) -> int:
    _emit({"sections": schema_document(), "presets": sorted(PRESETS)})
    return 0


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="JSON run configuration")
    p.add_argument("--preset", metavar="NAME", help="named parameter set")
    p.add_argument("--seed", type=int, metavar="U64")
    p.add_argument("--paths", type=int, metavar="N")
    p.add_argument("--method", metavar="M")
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--format", choices=("csv", "json"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="besqlib", description="Squared Bessel processes and real-world pricing."
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v info, -vv debug"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate paths")
    _common(p)
    p.add_argument("--model", choices=("mmm", "bivariate", "wishart"))
    p.add_argument("--alpha", type=float)
    p.add_argument("--d", type=int)
    p.add_argument("--T", type=float)
    p.add_argument("--steps", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("price", help="real-world price of a claim")
    _common(p)
    kinds = sorted(set(pricing.PAYOFF_KINDS) | set(PAYOFF_ALIASES))
    p.add_argument("--payoff", choices=kinds)
    p.add_argument("--strike", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--eps", type=float)
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("density", help="joint density of (Y_T, ∫dt/Y)")
    _common(p)
    p.add_argument("--T", type=float)
    p.add_argument("--nodes", type=int)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("check-symmetry", help="classify a drift")
    _common(p)
    p.add_argument("--drift", choices=sorted(DRIFTS))
    p.add_argument("--delta", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--mu", type=float)
    p.set_defaults(func=cmd_check_symmetry)

    p = sub.add_parser("validate", help="run oracle checks")
    _common(p)
    p.add_argument("suite", nargs="?", default="all")
    p.add_argument("--strike", type=float, default=1.0)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("schema", help="print the configuration schema")
    p.set_defaults(func=cmd_schema)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        return args.func(args)
    except ConfigError as e:
        logger.error("configuration error: %s", e)
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NumericalError as e:
        logger.error("numerical failure: %s", e)
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3
