"""CSV persistence for traces, spectra, and coefficient tables.

All floats are printed with %.17g, which round-trips IEEE doubles exactly;
files are written to a temp name and renamed so readers never see partials.
"""
import csv
import json
import os

import numpy as np

from .observables import CorrelationTrace, SpectrumTrace

FMT = "%.17g"


def _atomic_writer(path):
    tmp = f"{path}.tmp"
    return tmp, lambda: os.replace(tmp, path)


def _check_uniform(x, what):
    if len(x) > 1:
        steps = np.diff(x)
        if np.abs(steps - steps[0]).max() > 1e-9 * max(abs(steps[0]), 1e-30):
            raise ValueError(f"{what} grid in file is not uniform")
        return float(steps[0])
    return 0.0


def write_trace_csv(path, trace):
    tmp, commit = _atomic_writer(path)
    t = trace.grid()
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "re", "im"])
        for k, v in enumerate(trace.values):
            w.writerow([FMT % t[k], FMT % v.real, FMT % v.imag])
    commit()


def read_trace_csv(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != ["t", "re", "im"]:
            raise ValueError(f"{path}: expected header t,re,im, got {header}")
        rows = np.array([[float(x) for x in row] for row in r])
    if rows.size == 0:
        raise ValueError(f"{path}: no data rows")
    dt = _check_uniform(rows[:, 0], "time")
    return CorrelationTrace(dt=dt, values=rows[:, 1] + 1j * rows[:, 2])


def write_spectrum_csv(path, s):
    tmp, commit = _atomic_writer(path)
    mag = np.abs(s.S)
    phase = np.angle(s.S)
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["omega", "magnitude", "phase"])
        for k in range(len(s.omega)):
            w.writerow([FMT % s.omega[k], FMT % mag[k], FMT % phase[k]])
    commit()


def read_spectrum_csv(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != ["omega", "magnitude", "phase"]:
            raise ValueError(f"{path}: expected header omega,magnitude,phase, got {header}")
        rows = np.array([[float(x) for x in row] for row in r])
    if rows.size == 0:
        raise ValueError(f"{path}: no data rows")
    _check_uniform(rows[:, 0], "frequency")
    S = rows[:, 1] * np.exp(1j * rows[:, 2])
    return SpectrumTrace(omega=rows[:, 0], S=S, window="unspecified", pad_factor=1)


def write_coeffs_csv(path, c):
    """Full-step-grid table of the four coefficient functions."""
    tmp, commit = _atomic_writer(path)
    t = c.grid()
    cols = [c.F1, c.F2, c.F3, c.F4]
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "re_f1", "im_f1", "re_f2", "im_f2",
                    "re_f3", "im_f3", "re_f4", "im_f4"])
        for k in range(len(t)):
            row = [FMT % t[k]]
            for f in cols:
                row += [FMT % f[k].real, FMT % f[k].imag]
            w.writerow(row)
    commit()


def read_coeffs_csv(path):
    """{"t": grid, "F": (4, n+1) complex} from a coefficient table."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        want = ["t", "re_f1", "im_f1", "re_f2", "im_f2",
                "re_f3", "im_f3", "re_f4", "im_f4"]
        if header != want:
            raise ValueError(f"{path}: expected header {','.join(want)}, got {header}")
        rows = np.array([[float(x) for x in row] for row in r])
    if rows.size == 0:
        raise ValueError(f"{path}: no data rows")
    _check_uniform(rows[:, 0], "time")
    F = np.stack([rows[:, 1 + 2 * j] + 1j * rows[:, 2 + 2 * j] for j in range(4)])
    return {"t": rows[:, 0], "F": F}


def write_manifest(path, payload):
    tmp, commit = _atomic_writer(path)
    with open(tmp, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    commit()


def read_manifest(path):
    with open(path) as fh:
        return json.load(fh)
