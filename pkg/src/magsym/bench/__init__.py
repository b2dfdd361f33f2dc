"""Benchmark harness: sweeps, stability and order analysis, CSV output."""

from .analysis import (
    BEST_Q_EPS,
    BEST_Q_OMEGAS,
    BestQEntry,
    OrderEstimate,
    StabilityReport,
    best_q_table,
    convergence_order,
    fit_order,
    format_best_q,
    reciprocal_pairing,
    stability_analysis,
)
from .csvio import HEADER, ResultRow, data_section, format_real, read_csv, write_csv
from .runners import DEFAULT_OMEGA_GRID, error_vs_omega, run_cell, run_fundamental, run_vector
from .spec import ExperimentSpec, SpecError, parse_real, parse_real_list

__all__ = [
    "BEST_Q_EPS",
    "BEST_Q_OMEGAS",
    "BestQEntry",
    "DEFAULT_OMEGA_GRID",
    "ExperimentSpec",
    "HEADER",
    "OrderEstimate",
    "ResultRow",
    "SpecError",
    "StabilityReport",
    "best_q_table",
    "convergence_order",
    "data_section",
    "error_vs_omega",
    "fit_order",
    "format_best_q",
    "format_real",
    "parse_real",
    "parse_real_list",
    "read_csv",
    "reciprocal_pairing",
    "run_cell",
    "run_fundamental",
    "run_vector",
    "stability_analysis",
    "write_csv",
]
