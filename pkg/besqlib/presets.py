#!/usr/bin/env python3

# Copyright (C) 2020 The besqlib developers
#
# This file is part of besqlib. It is subject to the license terms in the
# LICENSE file found in the top-level directory of this distribution.
#
# No part of besqlib including this file, may be copied, modified, propagated,
# or distributed except according to the terms contained in the LICENSE file.

"""Named parameter sets.

* stylized: minimal market model, s0 = 1, α₀ = 0.05, η = 0.05, r = 0.03
  (Y_0 = s0/α₀ = 20 = 1/η, the stationary mean of Y)
* bivariate: two minimal market models, η = 0.04/0.06, r = 0.02/0.04,
  correlation 0.3
* wishart: WIS_2(I, 4, 0, I)

These are desk-scale fixtures, not calibrated values.
"""

import json
from os import path
from typing import Any, Dict, Union

import numpy as np

from .errors import ConfigError
from .processes import MmmParams
from .wishart import BivariateMmmParams, WishartParams

datadir = path.join(path.dirname(__file__), "data")

filename = path.join(datadir, "presets.json")
with open(filename, "r") as f:
    PRESETS: Dict[str, Dict[str, Any]] = json.load(f)

ModelParams = Union[MmmParams, BivariateMmmParams, WishartParams]

MODEL_KEYS = {
    "mmm": ("s0", "alpha0", "eta", "r", "phi0"),
    "bivariate": ("r", "alpha0", "eta", "sbar0", "rho", "w"),
    "wishart": ("d", "alpha", "a", "b", "x0"),
}


def preset(name: str) -> Dict[str, Any]:
    "A copy of the named preset section."

    if name not in PRESETS:
        raise ConfigError(f"unknown preset: {name}", "preset")
    return json.loads(json.dumps(PRESETS[name]))


def build_model(section: Dict[str, Any], location: str = "model") -> ModelParams:
    """Model parameters from a model section.

    The "model" key selects the family; parameter errors are reported
    as ConfigError at the section location.
    """

    kind = section.get("model", "mmm")
    if kind not in MODEL_KEYS:
        raise ConfigError(f"unknown model: {kind}", f"{location}.model")
    for key in section:
        if key != "model" and key not in MODEL_KEYS[kind]:
            raise ConfigError(f"unknown key for {kind}", f"{location}.{key}")
    kw = {k: v for k, v in section.items() if k != "model"}
    try:
        if kind == "mmm":
            return MmmParams(**kw)
        if kind == "bivariate":
            if kw.get("w") is not None:
                kw["w"] = np.array(kw["w"], dtype=float)
            return BivariateMmmParams(**kw)
        d = kw.pop("d", None)
        kw = {k: np.array(v, dtype=float) if k != "alpha" else v for k, v in kw.items()}
        p = WishartParams(**kw)
        if d is not None and d != p.d:
            raise ValueError(f"d = {d} but x0 is {p.d}×{p.d}")
        return p
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e), location)
