"""Acceptance gate: numbered end-to-end checks, one printed verdict line each.

Heavy reference runs are shared through module-scoped fixtures; every check
prints `ACCEPTANCE NN <name>: PASS/FAIL (<numbers>)` to the live terminal
before asserting, so a full run leaves a one-line verdict per criterion.
"""
import json
import shutil
import subprocess

import numpy as np
import pytest

from omqsd import SystemParams, build_hamiltonian, mode_operators, prep_state, product_state
from omqsd.cli import main as cli_main
from omqsd.coeffs import solve_coeffs
from omqsd.dynamics import deterministic_traces, run_ensemble
from omqsd.noise import NoiseSeed, kernel_value, sample_noise_block
from omqsd.observables import (CorrelationTrace, dominant_peak_fwhm, peak_census,
                               resolve_observable, spectrum)
from omqsd.oracles import (compare_traces, markov_lindblad_ttcf, pseudomode_ttcf,
                           select_canonical_variant)

T_FULL = 20.0


def report(capsys, num, name, ok, details):
    line = f"ACCEPTANCE {num:02d} {name}: {'PASS' if ok else 'FAIL'} ({details})"
    with capsys.disabled():
        print(f"\n{line}", flush=True)
    return line


def rel_l2(x, y):
    return float(np.linalg.norm(np.asarray(x) - np.asarray(y))
                 / max(np.linalg.norm(np.asarray(x)), 1e-300))


def system_state(p, mech=("fock", 2), alpha0=1.0):
    if mech[0] == "fock":
        ms = prep_state("fock", p.dim_m, n=mech[1])
    else:
        ms = prep_state("coherent", p.dim_m, beta=mech[1], leak_tol=1e-2)
    cs = prep_state("coherent", p.dim_c, beta=alpha0, leak_tol=1e-2)
    return product_state(cs, ms)


def det_run(p, dt, T, variant, mech=("fock", 2), alpha0=1.0):
    H = build_hamiltonian(p)
    _, b = mode_operators(p)
    n = int(round(T / dt))
    c = solve_coeffs(p, dt, n, variant=variant)
    psi0 = system_state(p, mech, alpha0)
    rho0 = np.outer(psi0, psi0.conj())
    B = resolve_observable("Xm", p)
    A = resolve_observable("Xc", p)
    return deterministic_traces(H, b, c, rho0, B @ rho0, A, dt, n)


def pm_run(p, dim_p, dt, T, mech=("fock", 2), alpha0=1.0):
    n = int(round(T / dt))
    return pseudomode_ttcf(p, dim_p, system_state(p, mech, alpha0), "Xc", "Xm", dt, n)


@pytest.fixture(scope="module")
def canonical():
    """Coefficient variant picked by the package's own reference measurement."""
    return select_canonical_variant()


@pytest.fixture(scope="module")
def pm_g02_fock_coarse():
    """Memory-kernel reference, gamma=0.2, Fock 2, dims (6,6,8), dt=2e-3."""
    p = SystemParams(lam=1.0, gamma=0.2, dim_c=6, dim_m=6)
    return pm_run(p, 8, 2e-3, T_FULL)


def test_01_deterministic_trace_hermiticity(canonical, capsys):
    """|tr rho - 1| and max|rho - rho+| stay below 1e-10 up to t=20."""
    rows = []
    for gamma in (0.2, 2.0, 5.0):
        p = SystemParams(lam=1.0, gamma=gamma, dim_c=6, dim_m=6)
        out = det_run(p, 1e-3, T_FULL, canonical["canonical"])
        trace_dev = float(np.abs(out["trace"] - 1.0).max())
        rows.append((gamma, trace_dev, out["herm_dev"]))
    ok = all(td <= 1e-10 and hd <= 1e-10 for _, td, hd in rows)
    details = "; ".join(f"gamma={g}: trace_dev={td:.2e}, herm_dev={hd:.2e}"
                        for g, td, hd in rows)
    line = report(capsys, 1, "deterministic trace/hermiticity, gamma {0.2,2,5}", ok, details)
    if not ok:
        pytest.fail(line)


def test_02_coefficient_solver_checks(capsys):
    """Zero start, decoupled limit, Markov fixed point, RK4 refinement order."""
    p = SystemParams(lam=1.0, gamma=2.0, dim_c=3, dim_m=3)
    start_dev = 0.0
    for variant in ("paper", "rederived"):
        c = solve_coeffs(p, 1e-3, 10, variant=variant)
        start_dev = max(start_dev, float(np.abs(c.values[:, 0]).max()))

    p0 = SystemParams(lam=0.0, gamma=2.0, dim_c=3, dim_m=3)
    c0 = solve_coeffs(p0, 1e-3, 10000, variant="rederived")
    decoupled_dev = float(max(np.abs(c0.values[j]).max() for j in (0, 1, 3)))

    p50 = SystemParams(lam=1.0, gamma=50.0, dim_c=3, dim_m=3)
    c50 = solve_coeffs(p50, 1e-3, 10000, variant="rederived")
    fixed_point_dev = float(abs(c50.F3[-1] - 1.0))

    pr = SystemParams(lam=1.0, gamma=2.0, dim_c=3, dim_m=3)
    ref = solve_coeffs(pr, 5e-4, 4000, variant="rederived").values[:, ::2][:, -1]
    errs = []
    for dt in (8e-3, 4e-3, 2e-3):
        c = solve_coeffs(pr, dt, int(round(2.0 / dt)), variant="rederived")
        errs.append(np.abs(c.values[:, ::2][:, -1] - ref).max())
    slope = float(np.polyfit(np.log([8e-3, 4e-3, 2e-3]), np.log(errs), 1)[0])

    ok = (start_dev == 0.0 and decoupled_dev <= 1e-14
          and fixed_point_dev <= 0.05 and slope >= 3.7)
    details = (f"F(0) dev={start_dev:.1e}; lam=0 dev={decoupled_dev:.2e}; "
               f"|F3(10)-1|={fixed_point_dev:.4f}; slope={slope:.2f}")
    line = report(capsys, 2, "coefficient solver checks", ok, details)
    if not ok:
        pytest.fail(line)


def test_03_oracle_gate(canonical, pm_g02_fock_coarse, capsys):
    """Deterministic route vs memory-kernel reference at gamma=0.2, Fock 2."""
    p = SystemParams(lam=1.0, gamma=0.2, dim_c=6, dim_m=6)
    pm_fine = pm_run(p, 8, 1e-3, T_FULL)
    pm_dp10 = pm_run(p, 10, 2e-3, T_FULL)
    conv_dt = rel_l2(pm_g02_fock_coarse.values, pm_fine.values[::2])
    conv_dp = rel_l2(pm_g02_fock_coarse.values, pm_dp10.values)
    out = det_run(p, 1e-3, T_FULL, canonical["canonical"])
    gate = rel_l2(pm_fine.values, out["ttcf"])
    ok = conv_dt <= 0.005 and conv_dp <= 0.005 and gate <= 0.02
    details = (f"variant={canonical['canonical']}; oracle self-convergence: "
               f"dt/2 {conv_dt:.2e}, dim_p+2 {conv_dp:.2e} (<=0.005); "
               f"gate rel_l2={gate:.3e} (<=0.02)")
    line = report(capsys, 3, "oracle gate, deterministic vs memory kernel", ok, details)
    if not ok:
        pytest.fail(line)


def test_04_markov_limit_gate(canonical, capsys):
    """gamma=50: both package routes collapse onto the memoryless reference."""
    p = SystemParams(lam=1.0, gamma=50.0, dim_c=6, dim_m=6)
    dt, T = 1e-3, 10.0
    n = int(round(T / dt))
    mk = markov_lindblad_ttcf(p, system_state(p), "Xc", "Xm", dt, n)
    out = det_run(p, dt, T, canonical["canonical"])
    det_rel = rel_l2(mk.values, out["ttcf"])
    pm = pm_run(p, 8, dt, T)
    pm_rel = rel_l2(mk.values, pm.values)
    ok = det_rel <= 0.05 and pm_rel <= 0.02
    details = f"det vs markov rel_l2={det_rel:.4f} (<=0.05); pm vs markov {pm_rel:.4f} (<=0.02)"
    line = report(capsys, 4, "Markov-limit gate, gamma=50", ok, details)
    if not ok:
        pytest.fail(line)


def test_05_stochastic_ensemble_gate(canonical, capsys):
    """2000 paired trajectories track the deterministic trace within 5 sigma."""
    rows = []
    dt = 2e-3
    n = int(round(T_FULL / dt))
    for gamma in (0.2, 2.0):
        p = SystemParams(lam=1.0, gamma=gamma, dim_c=6, dim_m=6)
        c = solve_coeffs(p, dt, n, variant=canonical["canonical"])
        psi0 = system_state(p)
        B = resolve_observable("Xm", p)
        A = resolve_observable("Xc", p)
        res = run_ensemble(p, c, psi0, B, A, dt, n, n_traj=2000, master_seed=42)
        H = build_hamiltonian(p)
        _, b = mode_operators(p)
        rho0 = np.outer(psi0, psi0.conj())
        det = deterministic_traces(H, b, c, rho0, B @ rho0, A, dt, n)
        dev = np.abs(res.ttcf - det["ttcf"])
        ratio = float(np.max(dev[1:] / np.maximum(res.batch_sigma[1:], 1e-300)))
        k1 = int(round(1.0 / dt))
        norm_ratio = abs(res.norm_trace[k1] - 1.0) / max(res.norm_sigma[k1], 1e-300)
        rows.append((gamma, dev[0], ratio, norm_ratio, len(res.excluded)))
    ok = all(d0 < 1e-12 and r <= 5.0 and nr <= 5.0 and ex == 0
             for _, d0, r, nr, ex in rows)
    details = "; ".join(
        f"gamma={g}: sup|d|/sigma={r:.2f}, |norm(1)-1|/sigma={nr:.2f}, excluded={ex}"
        for g, _, r, nr, ex in rows)
    line = report(capsys, 5, "stochastic ensemble within 5 sigma of deterministic", ok, details)
    if not ok:
        pytest.fail(line)


def test_06_analytic_decoupled_limit(canonical, capsys):
    """lam=0 factorizes: Fock mech kills the trace, coherent gives 4cos(5t)."""
    pa = SystemParams(lam=0.0, gamma=0.2, dim_c=8, dim_m=8)
    out_a = det_run(pa, 1e-3, T_FULL, canonical["canonical"], mech=("fock", 2))
    dev_a = float(np.abs(out_a["ttcf"]).max())

    pb = SystemParams(lam=0.0, gamma=0.2, dim_c=12, dim_m=12)
    out_b = det_run(pb, 2e-3, T_FULL, canonical["canonical"], mech=("coherent", 1.0))
    t = np.arange(len(out_b["ttcf"])) * 2e-3
    dev_b = float(np.abs(out_b["ttcf"] - 4.0 * np.cos(5.0 * t)).max())

    ok = dev_a <= 1e-8 and dev_b <= 1e-6
    details = f"Fock: max|ttcf|={dev_a:.2e} (<=1e-8); coherent: max|ttcf-4cos5t|={dev_b:.2e} (<=1e-6)"
    line = report(capsys, 6, "analytic decoupled limit, lam=0", ok, details)
    if not ok:
        pytest.fail(line)


def test_07_noise_statistics(capsys):
    """10^4 paths: empirical kernel at tau in {0,1,5} and vanishing z-z moment."""
    p = SystemParams(Gamma=2.0, gamma=0.2, dim_c=3, dim_m=3)
    dt, n_steps, n_paths = 0.01, 500, 10000
    z = sample_noise_block(NoiseSeed(42, 0), p, dt, n_steps, n_paths)
    checks = []
    for tau in (0.0, 1.0, 5.0):
        k = int(round(tau / (dt / 2.0)))
        kern = np.conj(z[:, k]) * z[:, 0]      # rows hold conj(z_t)
        pseudo = np.conj(np.conj(z[:, k]) * np.conj(z[:, 0]))
        for name, samples, want in ((f"M(z z*) tau={tau}", kern, kernel_value(p, tau)),
                                    (f"M(z z) tau={tau}", pseudo, 0.0)):
            se = max(float(samples.std(ddof=1) / np.sqrt(n_paths)), 1e-300)
            devs = abs(samples.mean() - want) / se
            checks.append((name, float(devs)))
    ok = all(d <= 3.0 for _, d in checks)
    details = "; ".join(f"{name}: {d:.2f} s.e." for name, d in checks)
    line = report(capsys, 7, "noise statistics vs exponential kernel", ok, details)
    if not ok:
        pytest.fail(line)


def test_08_spectral_structure(pm_g02_fock_coarse, capsys):
    """Memory narrows to a near-delta line as gamma grows; classical states blur it."""
    dt = 2e-3
    traces = {("fock", 0.2): pm_g02_fock_coarse.values}
    for key, mech in [(("fock", 2.0), ("fock", 2)),
                      (("coh", 0.2), ("coherent", 1.0)),
                      (("coh", 2.0), ("coherent", 1.0))]:
        p = SystemParams(lam=1.0, gamma=key[1], dim_c=6, dim_m=6)
        traces[key] = pm_run(p, 8, dt, T_FULL, mech=mech).values

    def census(vals):
        s = spectrum(CorrelationTrace(dt=dt, values=vals))
        return len(peak_census(s, 0.05)), dominant_peak_fwhm(s)[1]

    n02, w02 = census(traces[("fock", 0.2)])
    n2, w2 = census(traces[("fock", 2.0)])
    dist_fock = rel_l2(traces[("fock", 0.2)], traces[("fock", 2.0)])
    dist_coh = rel_l2(traces[("coh", 0.2)], traces[("coh", 2.0)])
    ok = n02 > n2 and w2 < w02 and dist_coh < dist_fock
    details = (f"Fock peak count {n02} > {n2}; fwhm {w2:.4f} < {w02:.4f}; "
               f"coherent gamma-distance {dist_coh:.4f} < Fock {dist_fock:.4f}")
    line = report(capsys, 8, "spectral structure of the memory", ok, details)
    if not ok:
        pytest.fail(line)


def test_09_reproducibility_across_workers(tmp_path, monkeypatch, capsys):
    """Identical config and seed give bit-identical CSVs for 1, 4, 8 workers."""
    doc = dict(dim_c=4, dim_m=4, alpha0=0.5, T=1.0, dt=2e-3, method="stochastic",
               n_traj=64, batch_size=16, master_seed=42)
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(doc))
    blobs = {}
    for w in (1, 4, 8):
        monkeypatch.setenv("OMQSD_WORKERS", str(w))
        out = tmp_path / f"w{w}"
        assert cli_main(["simulate", "--config", str(cfg_path), "--out", str(out)]) == 0
        blobs[w] = {name: (out / name).read_bytes()
                    for name in ("coeffs.csv", "ttcf.csv", "spectrum.csv")}
    capsys.readouterr()
    same = all(blobs[1][name] == blobs[w][name]
               for w in (4, 8) for name in blobs[1])
    line = report(capsys, 9, "bit-identical CSVs across worker counts {1,4,8}", same,
                  "coeffs/ttcf/spectrum byte-compared over 3 worker counts")
    if not same:
        pytest.fail(line)


def test_10_figure_rendering(tmp_path, capsys):
    """The figure package renders both standard figures from run CSVs."""
    exe = shutil.which("plotkit")
    if exe is None:
        with capsys.disabled():
            print("\nACCEPTANCE 10 figure rendering: SKIP (plotkit not installed)",
                  flush=True)
        pytest.skip("plotkit not installed")
    doc = dict(dim_c=4, dim_m=4, alpha0=0.5, T=2.0, dt=2e-3, method="deterministic")
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(doc))
    out = tmp_path / "run"
    assert cli_main(["simulate", "--config", str(cfg_path), "--out", str(out)]) == 0
    capsys.readouterr()
    figs = tmp_path / "figs"
    plot_spec = {
        "figures": [
            {"kind": "coefficients", "coeffs": str(out / "coeffs.csv"),
             "save": str(figs / "coeffs.png")},
            {"kind": "correlation", "ttcf": str(out / "ttcf.csv"),
             "spectrum": str(out / "spectrum.csv"), "save": str(figs / "corr.png")},
        ],
    }
    spec_path = tmp_path / "figures.json"
    spec_path.write_text(json.dumps(plot_spec))
    proc = subprocess.run([exe, "plot", "--spec", str(spec_path)],
                          capture_output=True, text=True, timeout=300)
    ok = (proc.returncode == 0
          and (figs / "coeffs.png").stat().st_size > 0
          and (figs / "corr.png").stat().st_size > 0)
    line = report(capsys, 10, "figure rendering", ok,
                  f"exit={proc.returncode}; both image files nonempty")
    if not ok:
        pytest.fail(line + "\n" + proc.stderr)
