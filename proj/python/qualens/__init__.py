"""Hierarchical quality model evaluation and grade prediction."""

from ._core import (
    Dataset,
    Direction,
    Error,
    IoError,
    ParseError,
    QualityModel,
    ValidationError,
    build_dataset,
    calibrate,
    evaluate,
    evaluate_csv,
    exact_baseline_mar,
    load_model,
    mar,
    normalize_measure,
    parse_model,
    random_baseline,
    read_dataset,
    sa,
    sweep,
    synth,
    to_grade,
)

__all__ = [
    "Dataset",
    "Direction",
    "Error",
    "IoError",
    "ParseError",
    "QualityModel",
    "ValidationError",
    "build_dataset",
    "calibrate",
    "evaluate",
    "evaluate_csv",
    "exact_baseline_mar",
    "load_model",
    "mar",
    "normalize_measure",
    "parse_model",
    "random_baseline",
    "read_dataset",
    "sa",
    "sweep",
    "synth",
    "to_grade",
]
