"""The two standard figures: coefficient functions and trace-plus-spectrum."""
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

COEFF_LABELS = ("f1", "f2", "f3", "f4")


def _save(fig, path, dpi):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    fig.savefig(path, dpi=dpi)
    plt.close(fig)


def render_coefficients(t, F, save, dpi=150, t_range=None):
    """Two stacked panels, real and imaginary parts of the four coefficients."""
    fig, (ax_re, ax_im) = plt.subplots(2, 1, figsize=(7.0, 5.4), sharex=True)
    for j, label in enumerate(COEFF_LABELS):
        ax_re.plot(t, F[j].real, label=label)
        ax_im.plot(t, F[j].imag, label=label)
    ax_re.set_ylabel("Re f")
    ax_im.set_ylabel("Im f")
    ax_im.set_xlabel("t")
    ax_re.legend(loc="best", ncols=4, fontsize=9)
    for ax in (ax_re, ax_im):
        ax.grid(alpha=0.3)
        if t_range is not None:
            ax.set_xlim(t_range)
    fig.tight_layout()
    _save(fig, save, dpi)


def render_correlation(t, vals, omega, mag, save, dpi=150,
                       t_range=None, omega_range=None):
    """Side-by-side panels: (A) correlation trace, (B) spectrum magnitude."""
    fig, (ax_a, ax_b) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    ax_a.plot(t, vals.real, label="Re C")
    ax_a.plot(t, vals.imag, label="Im C", alpha=0.8)
    ax_a.set_xlabel("t")
    ax_a.set_ylabel("C(t)")
    ax_a.legend(loc="best", fontsize=9)
    ax_a.text(0.02, 0.95, "(A)", transform=ax_a.transAxes, va="top")
    if t_range is not None:
        ax_a.set_xlim(t_range)
    ax_b.plot(omega, mag, color="tab:red")
    ax_b.set_xlabel("omega")
    ax_b.set_ylabel("|S(omega)|")
    ax_b.text(0.02, 0.95, "(B)", transform=ax_b.transAxes, va="top")
    if omega_range is not None:
        ax_b.set_xlim(omega_range)
    for ax in (ax_a, ax_b):
        ax.grid(alpha=0.3)
    fig.tight_layout()
    _save(fig, save, dpi)
