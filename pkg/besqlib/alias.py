#!/usr/bin/env python3

# Copyright (C) 2020 The besqlib developers
#
# This file is part of besqlib. It is subject to the license terms in the
# LICENSE file found in the top-level directory of this distribution.
#
# No part of besqlib including this file, may be copied, modified, propagated,
# or distributed except according to the terms contained in the LICENSE file.

"""Aliases

mypy aliases, documenting also coding input conventions.
"""

from typing import Callable, Sequence, Union

import numpy as np

# real scalar or numpy array of reals
#
# most kernels are vectorized: they accept an array and
# broadcast; scalars in give numpy scalars out
#
# use np.asarray(x, dtype=float) to normalize the input
Real = Union[float, np.ndarray]

# symmetric matrix, d×d, stored as a float ndarray
#
# symmetry is checked within 1e-12 by the parameter classes,
# then enforced with utils.symmetrize
Matrix = np.ndarray

# 1-d float ndarray (a d-vector or a grid)
Vector = np.ndarray

# increasing time (or level) grid; a list is accepted and
# converted with utils.increasing_grid
Grid = Union[Sequence[float], np.ndarray]

# function on (0, ∞): drift f, potential g, antiderivative F, ...
# it must accept a float; vectorized callables are welcome
RealFunction = Callable[[float], float]

# solution handle u(x, t) of the Cauchy problem
Solution = Callable[[float, float], float]

# Laplace transform F(p) on a complex array of nodes,
# or log F(p) when inverted in log space
Transform = Callable[[np.ndarray], np.ndarray]
