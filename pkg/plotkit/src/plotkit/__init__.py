"""Render publication figures from the simulator's CSV output files.

The package touches only the file formats (coeffs.csv, ttcf.csv,
spectrum.csv); it never imports the simulator itself.
"""
from .readers import PlotDataError, read_coeffs, read_spectrum, read_trace
from .figures import render_coefficients, render_correlation

__all__ = [
    "PlotDataError",
    "read_coeffs",
    "read_spectrum",
    "read_trace",
    "render_coefficients",
    "render_correlation",
]
