"""Delay distribution estimation for outbreak line lists."""

from importlib import resources

from ._core import (
    Adjustments,
    Distribution,
    EpidelayError,
    Fit,
    Linelist,
    Report,
    ValidationError,
    __version__,
    compare,
    decide_adjustments,
    fit,
    fit_from_json,
    params_from_summary,
    parse_linelist,
    read_linelist,
    report,
    report_from_json,
    simulate,
)


def report_schema_path():
    return str(resources.files(__name__) / "report.schema.json")


__all__ = [
    "Adjustments",
    "Distribution",
    "EpidelayError",
    "Fit",
    "Linelist",
    "Report",
    "ValidationError",
    "__version__",
    "compare",
    "decide_adjustments",
    "fit",
    "fit_from_json",
    "params_from_summary",
    "parse_linelist",
    "read_linelist",
    "report",
    "report_from_json",
    "report_schema_path",
    "simulate",
]
