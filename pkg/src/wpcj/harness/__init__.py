"""Experiment runner, result files, complexity model and brute-force oracles."""

from .complexity import (
    ComplexityModel,
    ScalingResult,
    benchmark_scaling,
    complexity_estimate,
    loglog_fit,
    printed_closed_form,
)
from .experiment import (
    CSV_HEADER,
    FIGURE_PRESETS,
    SCHEME_NAMES,
    SCHEME_RUNNERS,
    ExperimentSpec,
    ResultRecord,
    Sweep,
    dbm_to_watts,
    emit_csv,
    figure_spec,
    format_csv,
    parse_csv,
    run_experiment,
    run_trial,
    watts_to_dbm,
)
from .oracle import oracle_srm, oracle_tpm

__all__ = [
    "CSV_HEADER", "ComplexityModel", "ExperimentSpec", "FIGURE_PRESETS", "ResultRecord", "SCHEME_NAMES",
    "SCHEME_RUNNERS", "ScalingResult", "Sweep", "benchmark_scaling", "complexity_estimate", "dbm_to_watts",
    "emit_csv", "figure_spec", "format_csv", "loglog_fit", "oracle_srm", "oracle_tpm", "parse_csv",
    "printed_closed_form", "run_experiment", "run_trial", "watts_to_dbm",
]
