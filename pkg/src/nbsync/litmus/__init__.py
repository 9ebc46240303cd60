"""Litmus text format, runner and reports."""

from .parser import ParseError, format_program, parse, parse_file
from .runner import EXHAUSTIVE, STRESS, ClauseVerdict, Report, run, stress

__all__ = [
    "ParseError", "parse", "parse_file", "format_program",
    "run", "stress", "Report", "ClauseVerdict", "EXHAUSTIVE", "STRESS",
]
