"""Experiment orchestration: configs, evaluation, sweeps, ablations, reports."""

from .config import AblationSpec, RunConfig, SweepGrid, config_from_dict, load_config
from .evaluate import EvalContext, EvalRecord, Executor, evaluate, mean_metric, task_metric
from .experiments import (
    ablate,
    cie_report,
    extract_fv,
    extract_fvs,
    extract_icv,
    location_sets,
    middle_layers,
    sweep_icv,
)
from .report import emit_report, read_records, summarize

__all__ = [
    "AblationSpec", "EvalContext", "EvalRecord", "Executor", "RunConfig", "SweepGrid", "ablate",
    "cie_report", "config_from_dict", "emit_report", "evaluate", "extract_fv", "extract_fvs",
    "extract_icv", "load_config", "location_sets", "mean_metric", "middle_layers", "read_records",
    "summarize", "sweep_icv", "task_metric",
]
