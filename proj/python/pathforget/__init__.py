# Copyright (c) 2026, pathforget authors
# SPDX-License-Identifier: Apache-2.0
"""Per-parameter attribution of forgetting along a training trajectory."""

from ._core import (
    REPORT_SCHEMA_VERSION,
    SNAPSHOT_VERSION,
    ConsistencyError,
    DimensionError,
    FetchError,
    FormatError,
    IntegrityError,
    IoError,
    PathforgetError,
    UsageError,
    ValidationError,
    attribute_quadratic,
    block_layout,
    check_gradients,
    check_quadratic,
    check_quadrature_convergence,
    cli,
    load_snapshot,
    mean_std,
    parameter_count,
    quadrature_nodes,
    render_svg,
    summarize,
    to_csv,
)

__version__ = "0.1.0"

__all__ = [
    "REPORT_SCHEMA_VERSION",
    "SNAPSHOT_VERSION",
    "ConsistencyError",
    "DimensionError",
    "FetchError",
    "FormatError",
    "IntegrityError",
    "IoError",
    "PathforgetError",
    "UsageError",
    "ValidationError",
    "attribute_quadratic",
    "block_layout",
    "check_gradients",
    "check_quadratic",
    "check_quadrature_convergence",
    "cli",
    "load_snapshot",
    "mean_std",
    "parameter_count",
    "quadrature_nodes",
    "render_svg",
    "summarize",
    "to_csv",
]
