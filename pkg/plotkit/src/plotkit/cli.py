"""Command line entry: `plotkit plot --spec figures.json`.

The JSON file named by --spec lists the figures to render:

    {"dpi": 150,
     "figures": [
       {"kind": "coefficients", "coeffs": "run/coeffs.csv", "save": "figs/c.png",
        "t_range": [0, 10]},
       {"kind": "correlation", "ttcf": "run/ttcf.csv",
        "spectrum": "run/spectrum.csv", "save": "figs/x.pdf",
        "omega_range": [-10, 10]}]}

The save extension picks the format (png or pdf). "t_range" and
"omega_range" are optional axis windows. All input tables are read and
validated before the first figure is saved, so a bad input never leaves
partial outputs behind.
"""
import argparse
import json
import os
import sys

from .figures import render_coefficients, render_correlation
from .readers import PlotDataError, read_coeffs, read_spectrum, read_trace

REQUIRED_KEYS = {
    "coefficients": ("coeffs",),
    "correlation": ("ttcf", "spectrum"),
}
RANGE_KEYS = {
    "coefficients": ("t_range",),
    "correlation": ("t_range", "omega_range"),
}
FORMATS = (".png", ".pdf")


def _load_spec(path):
    if not os.path.exists(path):
        raise PlotDataError(f"{path}: file not found")
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise PlotDataError(f"{path}: invalid JSON ({exc})") from None
    figures = doc.get("figures")
    if not isinstance(figures, list) or not figures:
        raise PlotDataError(f"{path}: 'figures' must be a nonempty list")
    dpi = doc.get("dpi", 150)
    if not isinstance(dpi, (int, float)) or dpi <= 0:
        raise PlotDataError(f"{path}: 'dpi' must be a positive number")
    for k, fig in enumerate(figures):
        kind = fig.get("kind")
        if kind not in REQUIRED_KEYS:
            raise PlotDataError(
                f"{path}: figures[{k}] has unknown kind {kind!r}; "
                f"expected one of {sorted(REQUIRED_KEYS)}")
        for key in REQUIRED_KEYS[kind] + ("save",):
            if not isinstance(fig.get(key), str) or not fig[key]:
                raise PlotDataError(f"{path}: figures[{k}] needs a string '{key}'")
        if not fig["save"].endswith(FORMATS):
            raise PlotDataError(
                f"{path}: figures[{k}] save path must end in one of {FORMATS}")
        for key in RANGE_KEYS[kind]:
            rng = fig.get(key)
            if rng is None:
                continue
            if (not isinstance(rng, list) or len(rng) != 2
                    or not all(isinstance(v, (int, float)) for v in rng)
                    or not rng[0] < rng[1]):
                raise PlotDataError(
                    f"{path}: figures[{k}] '{key}' must be [lo, hi] with lo < hi")
    return figures, float(dpi)


def _prepare(fig):
    """Read every input table for one figure entry; defer rendering."""
    if fig["kind"] == "coefficients":
        t, F = read_coeffs(fig["coeffs"])
        return lambda dpi: render_coefficients(t, F, fig["save"], dpi,
                                               t_range=fig.get("t_range"))
    t, vals = read_trace(fig["ttcf"])
    omega, mag = read_spectrum(fig["spectrum"])
    return lambda dpi: render_correlation(t, vals, omega, mag, fig["save"], dpi,
                                          t_range=fig.get("t_range"),
                                          omega_range=fig.get("omega_range"))


def cmd_plot(args):
    figures, dpi = _load_spec(args.spec)
    renders = [_prepare(fig) for fig in figures]
    for fig, render in zip(figures, renders):
        render(dpi)
        print(f"wrote {fig['save']}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="plotkit",
                                     description="Render figures from run CSVs.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_plot = sub.add_parser("plot", help="render the figures listed in a JSON spec")
    p_plot.add_argument("--spec", required=True, help="path to the figure spec JSON")
    p_plot.set_defaults(func=cmd_plot)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PlotDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
