"""Characterize AMR plotfile output and replay it through a geometric-growth proxy kernel."""

from .config import RunConfig, dump_count, load_inputs, parse_inputs, render
from .generator import GenerationReport, GeneratorSpec, command_line, generate, payload
from .model import (
    FitResult,
    ModelParams,
    fit_growth_grid,
    fit_loglinear,
    part_size_model,
    predict_cumulative,
    predict_dump_size,
    translate,
)
from .oracle import LevelSpec, OracleProfile, synthesize_run
from .report import CompareReport, compare
from .scan import SizeRecord, SizeTable, aggregate, cumulative_series, scan_plotfile_tree

__version__ = "0.1.0"

__all__ = [
    "CompareReport", "FitResult", "GenerationReport", "GeneratorSpec", "LevelSpec",
    "ModelParams", "OracleProfile", "RunConfig", "SizeRecord", "SizeTable", "aggregate",
    "command_line", "compare", "cumulative_series", "dump_count", "fit_growth_grid",
    "fit_loglinear", "generate", "load_inputs", "parse_inputs", "part_size_model", "payload",
    "predict_cumulative", "predict_dump_size", "render", "scan_plotfile_tree",
    "synthesize_run", "translate",
]
