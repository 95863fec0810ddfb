"""Correlation traces tr(A P(t)) and their spectral density functions.

The spectrum here is the DFT of the finite-window transient trace, not a
steady-state integral over the time difference; peak locations, relative
magnitudes, and peak counts are the meaningful outputs, absolute
normalization is not.
"""
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks, peak_widths

from .errors import DimensionError
from .hilbert import mode_operators

WINDOWS = ("none", "hann")


def resolve_observable(A, p):
    """Map an operator tag to its matrix on the product space of p.

    Tags: Xc = a+ + a, Nc = a+ a, Xm = b+ + b, b, bdag, identity.
    Arrays pass through unchanged.
    """
    if isinstance(A, str):
        a, b = mode_operators(p)
        table = {"Xc": a + a.conj().T, "Nc": a.conj().T @ a,
                 "Xm": b + b.conj().T, "b": b, "bdag": b.conj().T,
                 "identity": np.eye(b.shape[0], dtype=complex)}
        if A not in table:
            raise KeyError(f"unknown operator tag {A!r}; expected one of {sorted(table)}")
        return table[A]
    return np.asarray(A, complex)


@dataclass
class CorrelationTrace:
    """TTCF(t_k) on the uniform grid t_k = k dt."""
    dt: float
    values: np.ndarray
    a_label: str = ""
    b_label: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, complex)
        if self.values.ndim != 1 or len(self.values) < 1:
            raise ValueError("trace must be a nonempty 1-d series")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("trace contains non-finite entries")

    @property
    def n_steps(self):
        return len(self.values) - 1

    def grid(self):
        return np.arange(len(self.values)) * self.dt


@dataclass
class SpectrumTrace:
    """Spectral values on the symmetric angular-frequency grid after padding."""
    omega: np.ndarray
    S: np.ndarray
    window: str = "hann"
    pad_factor: int = 4

    def __post_init__(self):
        if len(self.omega) != len(self.S):
            raise ValueError("omega and S lengths differ")

    def magnitude(self):
        return np.abs(self.S)


def ttcf_trace(P, A, dt, p=None, a_label="", b_label=""):
    """Pointwise trace of A against a stacked operator series P of shape (nt, D, D)."""
    P = np.asarray(P, complex)
    if isinstance(A, str):
        if p is None:
            raise DimensionError("observable given by tag needs SystemParams to build it")
        a_label = a_label or A
        A = resolve_observable(A, p)
    A = np.asarray(A, complex)
    if P.ndim != 3 or P.shape[1] != P.shape[2]:
        raise DimensionError(f"P series must be (nt, D, D), got {P.shape}")
    if A.shape != P.shape[1:]:
        raise DimensionError(f"observable shape {A.shape} does not match P {P.shape[1:]}")
    vals = np.einsum("de,ted->t", A, P)
    return CorrelationTrace(dt=dt, values=vals, a_label=a_label, b_label=b_label)


def spectrum(trace, window="hann", pad_factor=4):
    """Windowed zero-padded DFT of the trace, both frequency signs.

    S(omega_j) = dt * sum_k w_k x_k exp(-i omega_j t_k) with
    omega_j = 2 pi j / (N_pad dt), j symmetric about zero. With this
    normalization Parseval holds exactly:
    sum |w x|^2 dt = sum |S|^2 domega / (2 pi).
    """
    if window not in WINDOWS:
        raise ValueError(f"window must be one of {WINDOWS}, got {window!r}")
    pad_factor = int(pad_factor)
    if pad_factor < 1:
        raise ValueError(f"pad_factor must be >= 1, got {pad_factor}")
    x = trace.values
    n = len(x)
    if n < 8:
        raise ValueError(f"trace too short for a spectrum: {n} < 8 points")
    w = np.hanning(n) if window == "hann" else np.ones(n)
    n_pad = pad_factor * n
    S = trace.dt * np.fft.fftshift(np.fft.fft(w * x, n=n_pad))
    omega = 2.0 * np.pi * np.fft.fftshift(np.fft.fftfreq(n_pad, d=trace.dt))
    return SpectrumTrace(omega=omega, S=S, window=window, pad_factor=pad_factor)


def peak_census(s, rel_threshold):
    """Local maxima of |S| above rel_threshold * max|S|, strongest first.

    Returns a list of (omega, magnitude) pairs; empty for an all-zero spectrum.
    """
    if not (0.0 < rel_threshold < 1.0):
        raise ValueError(f"rel_threshold must lie in (0, 1), got {rel_threshold}")
    mag = np.abs(s.S)
    top = mag.max()
    if top == 0.0:
        return []
    idx, _ = find_peaks(mag, height=rel_threshold * top)
    order = np.argsort(mag[idx])[::-1]
    return [(float(s.omega[i]), float(mag[i])) for i in idx[order]]


def dominant_peak_fwhm(s):
    """(omega, fwhm) of the strongest interior local maximum of |S|."""
    mag = np.abs(s.S)
    idx, _ = find_peaks(mag)
    if len(idx) == 0:
        raise ValueError("spectrum has no interior local maximum")
    best = idx[np.argmax(mag[idx])]
    widths, _, _, _ = peak_widths(mag, [best], rel_height=0.5)
    domega = s.omega[1] - s.omega[0]
    return float(s.omega[best]), float(widths[0] * domega)
