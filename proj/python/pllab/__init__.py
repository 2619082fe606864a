# Copyright 2026 The pllab Authors
# SPDX-License-Identifier: Apache-2.0
"""Desk-scale video LLM lab: adaptive structure pooling, LoRA fusion, diagnostics."""

from ._pllab import *  # noqa: F401,F403
from ._pllab import __doc__  # noqa: F401
