"""Experiment harness: problem builders, traces, audits and rate estimation."""
from .experiment import (
    SOLVER_NAMES,
    AuditReport,
    ExperimentSpec,
    audit_problem,
    build_problem,
    load_spec,
    run_experiment,
)
from .outputs import emit_outputs, read_trace_csv, write_manifest, write_trace_csv
from .problems import lambda_max, make_loss, quadratic_lasso, restricted_optimum
from .rates import RateEstimate, estimate_rate

__all__ = [
    "SOLVER_NAMES",
    "AuditReport",
    "ExperimentSpec",
    "audit_problem",
    "build_problem",
    "load_spec",
    "run_experiment",
    "emit_outputs",
    "read_trace_csv",
    "write_manifest",
    "write_trace_csv",
    "lambda_max",
    "make_loss",
    "quadratic_lasso",
    "restricted_optimum",
    "RateEstimate",
    "estimate_rate",
]
