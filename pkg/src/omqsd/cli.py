"""Command-line entry point.

Subcommands share one flat JSON config schema; --config, --out, and --seed
override file keys. Keys a subcommand does not use are accepted with a
logged notice so one config file can drive the whole pipeline.
"""
import argparse
import os
import sys

import numpy as np

from .config import RunConfig, from_dict, load_config
from .errors import OmqsdError

# keys each subcommand actually reads; the rest trigger a notice when set
_RELEVANT = {
    "coeffs": {"omega0", "Omega", "lam", "Gamma", "gamma", "dim_c", "dim_m",
               "dt", "T", "coeff_variant", "out_dir"},
    "simulate": None,  # uses everything
    "spectrum": {"window", "pad_factor", "out_dir"},
    "oracle": {"omega0", "Omega", "lam", "Gamma", "gamma", "dim_c", "dim_m",
               "dim_p", "dt", "T", "method", "hamiltonian_form", "alpha0",
               "mech_kind", "mech_n", "mech_beta", "mech_r", "mech_theta",
               "observable_a", "operator_b", "window", "pad_factor",
               "leak_tol", "out_dir", "coeff_variant"},
    "compare": {"out_dir"},
    "noise-test": {"Gamma", "gamma", "dt", "T", "n_traj", "master_seed",
                   "out_dir"},
}


def _notice(msg):
    print(f"notice: {msg}", file=sys.stderr)


def _load(args, command):
    if args.config:
        cfg = load_config(args.config)
        explicit = getattr(cfg, "explicit_keys", set())
    else:
        cfg = from_dict({})
        explicit = set()
    if args.out is not None:
        cfg.out_dir = args.out
    if args.seed is not None:
        cfg.master_seed = args.seed
    relevant = _RELEVANT.get(command)
    if relevant is not None:
        ignored = sorted(explicit - relevant)
        if ignored:
            _notice(f"keys not used by '{command}': {', '.join(ignored)}")
    return cfg


def _add_common(sub):
    sub.add_argument("--config", help="flat JSON config file")
    sub.add_argument("--out", help="output directory (overrides out_dir)")
    sub.add_argument("--seed", type=int, help="master seed (overrides master_seed)")


def cmd_coeffs(args):
    from .coeffs import solve_coeffs
    from .csvio import write_coeffs_csv
    cfg = _load(args, "coeffs")
    c = solve_coeffs(cfg.params(), cfg.dt, cfg.n_steps, cfg.coeff_variant)
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, "coeffs.csv")
    write_coeffs_csv(path, c)
    print(path)
    return 0


def cmd_simulate(args):
    from .runner import run
    cfg = _load(args, "simulate")
    out = run(cfg)
    for k in ("coeffs", "ttcf", "spectrum", "manifest"):
        print(out["paths"][k])
    return 0


def cmd_spectrum(args):
    from .csvio import read_trace_csv, write_spectrum_csv
    from .observables import spectrum
    cfg = _load(args, "spectrum")
    trace_path = args.trace or os.path.join(cfg.out_dir, "ttcf.csv")
    s = spectrum(read_trace_csv(trace_path), window=cfg.window,
                 pad_factor=cfg.pad_factor)
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, "spectrum.csv")
    write_spectrum_csv(path, s)
    print(path)
    return 0


def cmd_oracle(args):
    from .runner import run
    cfg = _load(args, "oracle")
    kind = args.kind
    if kind is None:
        kind = cfg.method if cfg.method in ("pseudomode", "markov-lindblad") \
            else "pseudomode"
    out = run(cfg, method=kind)
    for k in ("ttcf", "spectrum", "manifest"):
        print(out["paths"][k])
    return 0


def cmd_compare(args):
    import csv as _csv
    from .csvio import read_trace_csv
    from .oracles import compare_traces
    cfg = _load(args, "compare")
    x = read_trace_csv(args.trace_x)
    y = read_trace_csv(args.trace_y)
    rep = compare_traces(x, y)
    os.makedirs(cfg.out_dir, exist_ok=True)
    csv_path = os.path.join(cfg.out_dir, "compare.csv")
    txt_path = os.path.join(cfg.out_dir, "compare.txt")
    with open(csv_path, "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(["t", "abs_diff"])
        for t, d in zip(rep["t"], rep["per_time"]):
            w.writerow(["%.17g" % t, "%.17g" % d])
    ok = rep["rel_l2"] <= args.rel_tol
    lines = [
        f"x: {args.trace_x}",
        f"y: {args.trace_y}",
        f"rel_l2 = {rep['rel_l2']:.6e}",
        f"sup_abs = {rep['sup_abs']:.6e}",
        f"tolerance rel_l2 <= {args.rel_tol:g}: {'PASS' if ok else 'FAIL'}",
    ]
    with open(txt_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0 if ok else 1


def cmd_noise_test(args):
    from .noise import NoiseSeed, kernel_value, sample_noise_block
    cfg = _load(args, "noise-test")
    p = cfg.params()
    taus = [0.0, 1.0, 5.0]
    dt = cfg.dt
    # the largest probed lag must fit on the sampled grid whatever T says
    n_steps = max(cfg.n_steps, int(np.ceil(max(taus) / dt)))
    n_paths = cfg.n_traj
    z = sample_noise_block(NoiseSeed(cfg.master_seed, 0), p, dt, n_steps, n_paths)
    # z rows hold conj(z_t); M(z_t z*_s) = mean(conj(row_t) * row_s)
    base = 0
    lines = [f"paths = {n_paths}, dt = {dt}, T = {n_steps * dt}"]
    ok = True
    rows = []
    for tau in taus:
        k = int(round(tau / (dt / 2.0)))
        prod_k = np.conj(z[:, base + k]) * z[:, base]      # z_t z*_s samples
        prod_n = z[:, base + k] * z[:, base]               # conj of z_t z_s
        for name, samples, want in (("M(z_t z*_s)", prod_k, kernel_value(p, tau)),
                                    ("M(z_t z_s)", np.conj(prod_n), 0.0)):
            m = samples.mean()
            se = samples.std(ddof=1) / np.sqrt(n_paths)
            se = max(float(se), 1e-300)
            dev = abs(m - want) / se
            good = dev <= 3.0
            ok = ok and good
            lines.append(f"tau={tau}: {name} = {m:.5f}, expected {complex(want):.5f}, "
                         f"|dev| = {dev:.2f} s.e. {'PASS' if good else 'FAIL'}")
            rows.append((tau, name, m, complex(want), float(se), dev, good))
    os.makedirs(cfg.out_dir, exist_ok=True)
    txt = os.path.join(cfg.out_dir, "noise_report.txt")
    with open(txt, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0 if ok else 1


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="omqsd",
        description="correlation functions of a driven optomechanical mode "
                    "coupled to a memory-carrying bath")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("coeffs", help="solve the coefficient functions, write coeffs.csv")
    _add_common(sp)
    sp.set_defaults(fn=cmd_coeffs)

    sp = sub.add_parser("simulate", help="full run: coeffs + TTCF + spectrum + manifest")
    _add_common(sp)
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("spectrum", help="recompute spectrum.csv from a trace file")
    _add_common(sp)
    sp.add_argument("--trace", help="trace CSV (default <out>/ttcf.csv)")
    sp.set_defaults(fn=cmd_spectrum)

    sp = sub.add_parser("oracle", help="reference TTCF via an independent route")
    _add_common(sp)
    sp.add_argument("--kind", choices=("pseudomode", "markov-lindblad"),
                    help="oracle route (default from config method, else pseudomode)")
    sp.set_defaults(fn=cmd_oracle)

    sp = sub.add_parser("compare", help="distance report between two trace CSVs")
    _add_common(sp)
    sp.add_argument("trace_x")
    sp.add_argument("trace_y")
    sp.add_argument("--rel-tol", type=float, default=0.02)
    sp.set_defaults(fn=cmd_compare)

    sp = sub.add_parser("noise-test", help="empirical noise statistics vs the kernel")
    _add_common(sp)
    sp.set_defaults(fn=cmd_noise_test)

    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except OmqsdError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
