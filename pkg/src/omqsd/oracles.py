"""Independent reference routes for the same correlation functions.

pseudomode_ttcf   exact mapping of the exponential memory kernel onto one
                  damped auxiliary mode: H' = H_sys + g(b c+ + b+ c) with
                  g = sqrt(Gamma gamma / 2), dissipation rate kappa = 2 gamma
                  on the auxiliary mode, auxiliary vacuum start. The enlarged
                  model is Markovian, so propagating the pair (rho, B rho)
                  under its Lindblad generator is rigorously valid.

markov_lindblad_ttcf   memoryless limit: dissipator on b at rate Gamma,
                       the integral of the kernel over positive time doubled.

Both preserve trace and Hermiticity identically; both are independent of the
coefficient-function route they are used to judge.
"""
import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, GridMismatchError, TruncationError
from .hilbert import build_hamiltonian, make_mode_op, mode_operators, tensor_embed
from .noise import kernel_value
from .observables import CorrelationTrace, resolve_observable

AUX_POP_LIMIT = 0.1  # top retained auxiliary level must stay below this


def pseudomode_coupling(p):
    """(g, kappa) of the auxiliary mode reproducing the exponential kernel."""
    return np.sqrt(p.Gamma * p.gamma / 2.0), 2.0 * p.gamma


def pseudomode_kernel(p, tau):
    """Bath correlation seen through the auxiliary mode: g^2 e^{-kappa tau/2}.

    Equals kernel_value(p, tau) exactly for tau >= 0; the identity
    g^2/(kappa/2) = Gamma/2 fixes the memoryless limit.
    """
    g, kappa = pseudomode_coupling(p)
    return complex(g * g * np.exp(-kappa * abs(tau) / 2.0))


def _enlarged_ops(p, dim_p):
    dims = (p.dim_c, p.dim_m, dim_p)
    a = tensor_embed(make_mode_op(p.dim_c), 0, dims)
    b = tensor_embed(make_mode_op(p.dim_m), 1, dims)
    c = tensor_embed(make_mode_op(dim_p), 2, dims)
    return a, b, c


def _sys_matrix(op, p):
    m = resolve_observable(op, p)
    D = p.dim_c * p.dim_m
    if m.shape != (D, D):
        raise DimensionError(f"operator shape {m.shape} does not match system dim {D}")
    return m


def pseudomode_ttcf(p, dim_p, psi0, A, B, dt, n_steps, hamiltonian_form="linearized",
                    check_stride=50):
    """TTCF via the auxiliary-mode enlargement, traced over all three modes.

    psi0 is a system ket (cavity x mechanical); the auxiliary mode starts in
    vacuum. A and B are system operators or tags. Raises TruncationError if
    the population of the top retained auxiliary level ever reaches
    AUX_POP_LIMIT, which signals kernel-mode truncation overflow.
    """
    if dim_p < 2:
        raise DimensionError(f"auxiliary mode needs dim_p >= 2, got {dim_p}")
    g, kappa = pseudomode_coupling(p)
    _, b, c = _enlarged_ops(p, dim_p)
    Hs = build_hamiltonian(p, hamiltonian_form)
    Ip = np.eye(dim_p)
    H = np.kron(Hs, Ip) + g * (b @ c.conj().T + b.conj().T @ c)
    K = -1j * H - (kappa / 2.0) * (c.conj().T @ c)
    D = K.shape[0]
    I = sp.identity(D, format="csr")
    Ks = sp.csr_matrix(K)
    cs = sp.csr_matrix(c)
    # row-major vec convention: rho K+ -> (I x conj K) vec, c rho c+ -> (c x conj c) vec
    Lv = (sp.kron(Ks, I) + sp.kron(I, Ks.conj()) + kappa * sp.kron(cs, cs.conj())).tocsr()

    psi0 = np.asarray(psi0, complex)
    if psi0.shape != (p.dim_c * p.dim_m,):
        raise DimensionError(
            f"psi0 must be a system ket of length {p.dim_c * p.dim_m}, got {psi0.shape}")
    Amat = np.kron(_sys_matrix(A, p), Ip)
    Bmat = np.kron(_sys_matrix(B, p), Ip)
    vac = np.zeros(dim_p)
    vac[0] = 1.0
    psi_tot = np.kron(psi0, vac)
    rho = np.outer(psi_tot, psi_tot.conj())
    V = np.stack([rho.ravel(), (Bmat @ rho).ravel()], axis=1)
    aT = Amat.T.ravel()

    # diagonal of rho sits at stride D+1 in the vec; mask the top aux level
    diag_idx = np.arange(D) * (D + 1)
    top_mask = (np.arange(D) % dim_p) == (dim_p - 1)
    top_idx = diag_idx[top_mask]
    max_top = 0.0

    def top_pop(V):
        return float(np.sum(V[top_idx, 0].real))

    vals = np.empty(n_steps + 1, dtype=complex)
    vals[0] = aT @ V[:, 1]
    for k in range(n_steps):
        k1 = Lv @ V
        k2 = Lv @ (V + 0.5 * dt * k1)
        k3 = Lv @ (V + 0.5 * dt * k2)
        k4 = Lv @ (V + dt * k3)
        V = V + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        vals[k + 1] = aT @ V[:, 1]
        if (k + 1) % check_stride == 0 or k + 1 == n_steps:
            tp = top_pop(V)
            max_top = max(max_top, tp)
            if tp >= AUX_POP_LIMIT:
                raise TruncationError(
                    f"auxiliary level {dim_p - 1} population {tp:.3g} >= "
                    f"{AUX_POP_LIMIT} at t={(k + 1) * dt:.3f}; raise dim_p")
    out = CorrelationTrace(dt=dt, values=vals,
                           a_label=A if isinstance(A, str) else "custom",
                           b_label=B if isinstance(B, str) else "custom")
    out.max_aux_top_population = max_top
    return out


def markov_lindblad_ttcf(p, psi0, A, B, dt, n_steps, hamiltonian_form="linearized"):
    """TTCF in the memoryless limit: dissipator on b at rate Gamma, two modes."""
    H = build_hamiltonian(p, hamiltonian_form)
    _, b = mode_operators(p)
    bd = b.conj().T
    K = -1j * H - (p.Gamma / 2.0) * (bd @ b)
    Kd = K.conj().T
    Amat = _sys_matrix(A, p)
    Bmat = _sys_matrix(B, p)
    psi0 = np.asarray(psi0, complex)
    rho = np.outer(psi0, psi0.conj())
    X = np.stack([rho, Bmat @ rho])

    def rhs(X):
        return K @ X + X @ Kd + p.Gamma * (b @ X @ bd)

    vals = np.empty(n_steps + 1, dtype=complex)
    vals[0] = np.trace(Amat @ X[1])
    for k in range(n_steps):
        k1 = rhs(X)
        k2 = rhs(X + 0.5 * dt * k1)
        k3 = rhs(X + 0.5 * dt * k2)
        k4 = rhs(X + dt * k3)
        X = X + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        vals[k + 1] = np.trace(Amat @ X[1])
    return CorrelationTrace(dt=dt, values=vals,
                            a_label=A if isinstance(A, str) else "custom",
                            b_label=B if isinstance(B, str) else "custom")


def compare_traces(x, y):
    """Distance report between two traces on the identical grid.

    rel_l2 = |x - y|_2 / max(|x|_2, tiny); sup_abs = max_t |x - y|;
    per_time = |x - y| on the shared grid.
    """
    if abs(x.dt - y.dt) > 1e-15 or len(x.values) != len(y.values):
        raise GridMismatchError(
            f"traces disagree on the grid: dt {x.dt} vs {y.dt}, "
            f"lengths {len(x.values)} vs {len(y.values)}")
    d = x.values - y.values
    ref = max(np.linalg.norm(x.values), 1e-30)
    return {
        "rel_l2": float(np.linalg.norm(d) / ref),
        "sup_abs": float(np.abs(d).max()),
        "t": x.grid(),
        "per_time": np.abs(d),
    }


def select_canonical_variant(grid=None, dim_p=8, T=10.0, dt=2e-3, verbose=False):
    """Measure which coefficient variant tracks the auxiliary-mode reference.

    Runs the deterministic route for both sign variants against the
    pseudomode trace over a small parameter grid (default: gamma in
    {0.2, 2.0} at lam = 0.3, mech Fock 2, cavity coherent 1, A = Xc,
    B = Xm) and returns {"canonical": name, "scores": {name: total rel_l2}}.
    """
    from .coeffs import VARIANTS, solve_coeffs
    from .dynamics import deterministic_traces
    from .hilbert import SystemParams, prep_state, product_state

    if grid is None:
        grid = [dict(gamma=0.2, lam=0.3), dict(gamma=2.0, lam=0.3)]
    n_steps = int(round(T / dt))
    scores = {name: 0.0 for name in VARIANTS}
    for point in grid:
        p = SystemParams(dim_c=6, dim_m=6, **point)
        psi0 = product_state(prep_state("coherent", p.dim_c, beta=1.0, leak_tol=1e-2),
                             prep_state("fock", p.dim_m, n=2))
        ref = pseudomode_ttcf(p, dim_p, psi0, "Xc", "Xm", dt, n_steps)
        H = build_hamiltonian(p, "linearized")
        _, b = mode_operators(p)
        rho0 = np.outer(psi0, psi0.conj())
        P0 = resolve_observable("Xm", p) @ rho0
        Amat = resolve_observable("Xc", p)
        for name in VARIANTS:
            c = solve_coeffs(p, dt, n_steps, name)
            out = deterministic_traces(H, b, c, rho0, P0, Amat, dt, n_steps)
            tr = CorrelationTrace(dt=dt, values=out["ttcf"])
            r = compare_traces(ref, tr)["rel_l2"]
            scores[name] += r
            if verbose:
                print(f"  {point} {name}: rel_l2 = {r:.5f}")
    canonical = min(scores, key=scores.get)
    return {"canonical": canonical, "scores": scores}
