"""Run orchestration: one validated config in, artifact files out.

Every run emits coeffs.csv, ttcf.csv, spectrum.csv, and manifest.json into
the output directory. The manifest echoes the full config plus code version,
seed, excluded-trajectory count, and wall time, which together reproduce the
run bit-exactly.
"""
import os
import time

import numpy as np

from . import __version__
from .config import RunConfig, validate
from .coeffs import solve_coeffs
from .csvio import (write_coeffs_csv, write_manifest, write_spectrum_csv,
                    write_trace_csv)
from .dynamics import deterministic_traces, run_ensemble
from .errors import ConfigError
from .hilbert import build_hamiltonian, mode_operators
from .observables import CorrelationTrace, resolve_observable, spectrum
from .oracles import compare_traces, markov_lindblad_ttcf, pseudomode_ttcf

ENV_WORKERS = "OMQSD_WORKERS"


def effective_workers(cfg):
    """Worker count: environment override, else config, else the machine."""
    env = os.environ.get(ENV_WORKERS)
    if env is not None:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"{ENV_WORKERS} must be an integer, got {env!r}")
        if n < 1:
            raise ConfigError(f"{ENV_WORKERS} must be >= 1, got {n}")
        return n
    if cfg.workers > 0:
        return cfg.workers
    return os.cpu_count() or 1


def run(cfg, method=None):
    """Execute one configured run; returns {"paths": ..., "manifest": ...}.

    method overrides cfg.method (used by the oracle subcommand); everything
    else comes from the config.
    """
    validate(cfg)
    method = method or cfg.method
    t_wall = time.perf_counter()
    p = cfg.params()
    dt, n_steps = cfg.dt, cfg.n_steps
    psi0 = cfg.initial_state()
    Amat = resolve_observable(cfg.observable_a, p)
    Bmat = resolve_observable(cfg.operator_b, p)

    if cfg.hamiltonian_form == "nonlinear" and method in ("stochastic", "deterministic"):
        raise ConfigError(
            "the coefficient-function ansatz is closed only for the linearized "
            "form; use method pseudomode or markov-lindblad with nonlinear",
            key="hamiltonian_form")

    c = solve_coeffs(p, dt, n_steps, cfg.coeff_variant)
    extra = {}

    if method == "deterministic":
        H = build_hamiltonian(p, cfg.hamiltonian_form)
        _, b = mode_operators(p)
        rho0 = np.outer(psi0, psi0.conj())
        out = deterministic_traces(H, b, c, rho0, Bmat @ rho0, Amat, dt, n_steps)
        trace = CorrelationTrace(dt=dt, values=out["ttcf"],
                                 a_label=cfg.observable_a, b_label=cfg.operator_b)
        extra["trace_dev_max"] = float(np.abs(out["trace"] - 1.0).max())
        extra["herm_dev_max"] = out["herm_dev"]
        extra["excluded_trajectories"] = 0
    elif method == "stochastic":
        res = run_ensemble(p, c, psi0, Bmat, Amat, dt, n_steps, cfg.n_traj,
                           cfg.master_seed, batch_size=cfg.batch_size,
                           workers=effective_workers(cfg),
                           hamiltonian_form=cfg.hamiltonian_form)
        trace = CorrelationTrace(dt=dt, values=res.ttcf,
                                 a_label=cfg.observable_a, b_label=cfg.operator_b)
        extra["excluded_trajectories"] = len(res.excluded)
        extra["batch_size"] = res.batch_size
        extra["batch_sigma_max"] = float(np.max(res.batch_sigma))
        extra["norm_trace_end"] = float(res.norm_trace[-1])
        # deterministic benchmark of the same config: the ensemble mean must
        # sit inside its own Monte-Carlo error band around it
        H = build_hamiltonian(p, cfg.hamiltonian_form)
        _, b = mode_operators(p)
        rho0 = np.outer(psi0, psi0.conj())
        det = deterministic_traces(H, b, c, rho0, Bmat @ rho0, Amat, dt, n_steps)
        det_trace = CorrelationTrace(dt=dt, values=det["ttcf"])
        rep = compare_traces(trace, det_trace)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = rep["per_time"] / np.maximum(res.batch_sigma, 1e-300)
        extra["det_agreement"] = {
            "rel_l2": rep["rel_l2"],
            "sup_abs": rep["sup_abs"],
            "max_abs_over_sigma": float(np.nanmax(ratio)),
            "within_5_sigma": bool(np.nanmax(ratio) <= 5.0),
        }
    elif method == "pseudomode":
        trace = pseudomode_ttcf(p, cfg.dim_p, psi0, cfg.observable_a,
                                cfg.operator_b, dt, n_steps,
                                hamiltonian_form=cfg.hamiltonian_form)
        extra["max_aux_top_population"] = trace.max_aux_top_population
        extra["excluded_trajectories"] = 0
    elif method == "markov-lindblad":
        trace = markov_lindblad_ttcf(p, psi0, cfg.observable_a, cfg.operator_b,
                                     dt, n_steps,
                                     hamiltonian_form=cfg.hamiltonian_form)
        extra["excluded_trajectories"] = 0
    else:
        raise ConfigError(f"unknown method {method!r}", key="method")

    spec = spectrum(trace, window=cfg.window, pad_factor=cfg.pad_factor)

    os.makedirs(cfg.out_dir, exist_ok=True)
    paths = {
        "coeffs": os.path.join(cfg.out_dir, "coeffs.csv"),
        "ttcf": os.path.join(cfg.out_dir, "ttcf.csv"),
        "spectrum": os.path.join(cfg.out_dir, "spectrum.csv"),
        "manifest": os.path.join(cfg.out_dir, "manifest.json"),
    }
    write_coeffs_csv(paths["coeffs"], c)
    write_trace_csv(paths["ttcf"], trace)
    write_spectrum_csv(paths["spectrum"], spec)
    manifest = {
        "config": cfg.to_dict(),
        "method": method,
        "version": __version__,
        "master_seed": cfg.master_seed,
        "wall_time_s": time.perf_counter() - t_wall,
        "n_steps": n_steps,
    }
    manifest.update(extra)
    write_manifest(paths["manifest"], manifest)
    return {"paths": paths, "manifest": manifest}
