#!/usr/bin/env python3

# Copyright (C) 2020 The besqlib developers
#
# This file is part of besqlib. It is subject to the license terms in the
# LICENSE file found in the top-level directory of this distribution.
#
# No part of besqlib including this file, may be copied, modified, propagated,
# or distributed except according to the terms contained in the LICENSE file.

"__init__ module for the besqlib package."

name = "besqlib"

__version__ = "2020.11"
__author__ = "The besqlib developers"
__author_email__ = "devs@besqlib.org"
__copyright__ = "Copyright (C) 2020 The besqlib developers"
__license__ = "MIT License"
