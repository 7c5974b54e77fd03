"""Figure rendering for persisted CSV reports.

This package never recomputes statistics; it only displays what the CSV
files contain, so the numerical pipeline stays the single source of truth.
"""

from .render import FigureError, FigureJob, load_report_csv, load_trajectory_csv, render

__all__ = ["FigureError", "FigureJob", "load_report_csv", "load_trajectory_csv",
           "render"]

__version__ = "0.1.0"
