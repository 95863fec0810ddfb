"""Readers for the three CSV table layouts the simulator writes.

Each reader validates the header and rejects empty tables so figure code
downstream can assume well-formed arrays.
"""
import csv
import os

import numpy as np

TRACE_HEADER = ["t", "re", "im"]
SPECTRUM_HEADER = ["omega", "magnitude", "phase"]
COEFFS_HEADER = ["t", "re_f1", "im_f1", "re_f2", "im_f2",
                 "re_f3", "im_f3", "re_f4", "im_f4"]


class PlotDataError(Exception):
    """Missing, empty, or malformed input table."""


def _load(path, header):
    if not os.path.exists(path):
        raise PlotDataError(f"{path}: file not found")
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        try:
            got = next(r)
        except StopIteration:
            raise PlotDataError(f"{path}: empty file") from None
        if got != header:
            raise PlotDataError(
                f"{path}: expected header {','.join(header)}, got {','.join(got)}")
        try:
            rows = [[float(x) for x in row] for row in r]
        except ValueError as exc:
            raise PlotDataError(f"{path}: non-numeric cell ({exc})") from None
    if not rows:
        raise PlotDataError(f"{path}: no data rows")
    rows = np.asarray(rows, dtype=float)
    if rows.shape[1] != len(header):
        raise PlotDataError(f"{path}: row width {rows.shape[1]} != {len(header)}")
    return rows


def read_trace(path):
    """(t, complex values) from a t,re,im table."""
    rows = _load(path, TRACE_HEADER)
    return rows[:, 0], rows[:, 1] + 1j * rows[:, 2]


def read_spectrum(path):
    """(omega, magnitude) from an omega,magnitude,phase table."""
    rows = _load(path, SPECTRUM_HEADER)
    return rows[:, 0], rows[:, 1]


def read_coeffs(path):
    """(t, (4, n) complex array) from a coefficient table."""
    rows = _load(path, COEFFS_HEADER)
    F = np.stack([rows[:, 1 + 2 * j] + 1j * rows[:, 2 + 2 * j] for j in range(4)])
    return rows[:, 0], F
