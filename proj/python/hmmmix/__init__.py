# Copyright 2026 The hmmmix Authors
# SPDX-License-Identifier: Apache-2.0
"""HMMs whose hidden states emit Gaussian mixtures.

Models are plain dicts (the same layout as ``model.json`` written by the CLI).
"""

from ._core import (
    ConfigError,
    EmptyStateError,
    HmmmixError,
    InferenceError,
    ParseError,
    __version__,
    correct_rate,
    criteria,
    fit,
    forward_backward,
    merge,
    mse,
    posterior,
    read_table,
    simulate,
    stationary_distribution,
)

__all__ = [
    "ConfigError",
    "EmptyStateError",
    "HmmmixError",
    "InferenceError",
    "ParseError",
    "__version__",
    "correct_rate",
    "criteria",
    "fit",
    "forward_backward",
    "merge",
    "mse",
    "posterior",
    "read_table",
    "simulate",
    "stationary_distribution",
]
