#!/usr/bin/env python3

# Copyright (C) 2020 The besqlib developers
#
# This file is part of besqlib. It is subject to the license terms in the
# LICENSE file found in the top-level directory of this distribution.
#
# No part of besqlib including this file, may be copied, modified, propagated,
# or distributed except according to the terms contained in the LICENSE file.

"""Exceptions and warnings.

Invalid arguments raise ValueError (or one of the subclasses below);
failures of a numerical procedure on valid arguments raise
NumericalError subclasses, which are RuntimeError.
The command line maps the former to exit code 2, the latter to 3.
"""

from typing import Any, List, Optional


class ConfigError(ValueError):
    "Invalid configuration, with the dotted location of the offending key."

    def __init__(self, msg: str, location: Optional[str] = None) -> None:
        self.location = location
        if location:
            msg = f"{location}: {msg}"
        super().__init__(msg)


class SymmetryError(ValueError):
    "The Lie symmetry machinery does not apply (gamma == 2)."


class NumericalError(RuntimeError):
    "A numerical procedure failed on valid input."


class InversionError(NumericalError):
    "Two Laplace inversions of the same transform disagree."

    def __init__(self, msg: str, disagreement: float) -> None:
        self.disagreement = disagreement
        super().__init__(msg)


class CoverageError(NumericalError):
    "A density grid does not carry enough probability mass."

    def __init__(self, msg: str, mass: float) -> None:
        self.mass = mass
        super().__init__(msg)


class ConvergenceError(NumericalError):
    "Multilevel Monte Carlo reached the maximum level without converging."

    def __init__(self, msg: str, diagnostics: List[Any]) -> None:
        self.diagnostics = diagnostics
        super().__init__(msg)


class IntegrabilityWarning(UserWarning):
    "A few samples dominate a Monte Carlo estimate."
