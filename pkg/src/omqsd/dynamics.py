"""Trajectory and density-operator propagation.

Two routes to the same correlation function:

  stochastic     paired trajectories |psi_z>, |phi_z> share one noise path and
                 one linear generator G(t) = -iH + z*_t L - L+ Obar(t);
                 ensemble means of |phi_z><psi_z| estimate the propagated
                 operator P, and of |psi_z><psi_z| the density matrix.

  deterministic  with a noise-free Obar the ensemble average collapses to a
                 closed linear equation for X in {rho, P}:
                     dX = [-iH, X] + [L, X Obar+] + [Obar X, L+]
                 integrated in the algebraically identical form
                     dX = K X + X K+ + L X Obar+ + Obar X L+,
                     K  = -iH - L+ Obar,
                 which makes trace and Hermiticity preservation manifest.

RK4 reads noise and coefficients on the shared half-step grid: stage 1 at
index 2k, stages 2 and 3 at 2k+1, stage 4 at 2k+2. Nothing is resampled
inside a step.
"""
import concurrent.futures as cf
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DivergenceError, GridMismatchError
from .hilbert import make_mode_op, tensor_embed
from .noise import NoiseSeed, sample_noise_block

# overflow guard only: trajectories of the truncated generator may grow large
# without being wrong as Monte-Carlo samples; cut only near float range
TRAJ_NORM_LIMIT = 1e100


def _embedded_ops(dims):
    a = tensor_embed(make_mode_op(dims[0]), "cavity", dims)
    b = tensor_embed(make_mode_op(dims[1]), "mechanical", dims)
    return a, a.conj().T, b, b.conj().T


def _check_grids(c, noise, dt, n_steps):
    if c.params is None:
        raise GridMismatchError("CoeffSet lacks its SystemParams; solve_coeffs attaches them")
    if abs(c.dt - dt) > 1e-15 or c.n_steps < n_steps:
        raise GridMismatchError(
            f"coefficient grid (dt={c.dt}, n={c.n_steps}) incompatible with "
            f"dt={dt}, n_steps={n_steps}")
    if noise is not None and (abs(noise.dt - dt) > 1e-15 or noise.n_steps < n_steps):
        raise GridMismatchError(
            f"noise grid (dt={noise.dt}, n={noise.n_steps}) incompatible with "
            f"dt={dt}, n_steps={n_steps}")


@dataclass
class TrajectoryPair:
    """psi/phi series of shape (n_steps+1, D); phi(0) = B psi(0), psi(0) normalized."""
    dt: float
    psi: np.ndarray
    phi: np.ndarray
    seed: NoiseSeed = None


def evolve_pair(H, L, c, noise, psi0, phi0, dt, n_steps):
    """Propagate the trajectory pair under the shared time-dependent generator.

    Both members see the identical noise realization and coefficient set; the
    pair differs only in its initial data.
    """
    _check_grids(c, noise, dt, n_steps)
    H = np.asarray(H, complex)
    L = np.asarray(L, complex)
    D = H.shape[0]
    dims = c.params.dims
    if D != dims[0] * dims[1] or L.shape[0] != D:
        raise DimensionError(
            f"H/L dimension {D} does not match coefficient dims {dims}")
    a, ad, b, bd = _embedded_ops(dims)
    Ldag = L.conj().T
    mih = -1j * H
    F = c.values
    z = noise.values
    # K(t) = -iH - L+ Obar(t) is a fixed combination of these four products
    TL = np.stack([Ldag @ op for op in (a, ad, b, bd)])

    psi = np.empty((n_steps + 1, D), dtype=complex)
    phi = np.empty((n_steps + 1, D), dtype=complex)
    psi[0] = psi0
    phi[0] = phi0
    y = np.stack([np.asarray(psi0, complex), np.asarray(phi0, complex)], axis=1)

    def kmat(idx):
        return mih - np.einsum("j,jde->de", F[:, idx], TL)

    def gen(yv, idx, K):
        return K @ yv + z[idx] * (L @ yv)

    for k in range(n_steps):
        K0 = kmat(2 * k)
        K1 = kmat(2 * k + 1)
        K2 = kmat(2 * k + 2)
        k1 = gen(y, 2 * k, K0)
        k2 = gen(y + 0.5 * dt * k1, 2 * k + 1, K1)
        k3 = gen(y + 0.5 * dt * k2, 2 * k + 1, K1)
        k4 = gen(y + dt * k3, 2 * k + 2, K2)
        y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        nrm = np.linalg.norm(y)
        if not np.isfinite(nrm) or nrm > TRAJ_NORM_LIMIT:
            raise DivergenceError(
                f"trajectory norm overflow at t={(k + 1) * dt:.4f}",
                t=(k + 1) * dt, seed=noise.seed)
        psi[k + 1] = y[:, 0]
        phi[k + 1] = y[:, 1]
    return TrajectoryPair(dt=dt, psi=psi, phi=phi, seed=noise.seed)


class EnsembleAccumulator:
    """Order-independent running means over trajectory pairs.

    Contributions are folded into the reduction in strict traj_index order no
    matter the arrival order, so the final state is a pure function of the set
    of absorbed trajectories. Scalar series (correlation trace, norm trace)
    live on the full grid; the averaged rho and P matrices are stored every
    store_stride steps to bound memory.
    """

    def __init__(self, A, dt, n_steps, store_stride=None, batch_size=64):
        self.A = np.asarray(A, complex)
        self.dt = dt
        self.n_steps = n_steps
        self.batch_size = int(batch_size)
        if store_stride is None:
            store_stride = max(1, n_steps // 40)
        self.store_stride = int(store_stride)
        self.stored_idx = np.arange(0, n_steps + 1, self.store_stride)
        if self.stored_idx[-1] != n_steps:
            self.stored_idx = np.append(self.stored_idx, n_steps)
        self.count = 0
        self._next = 0
        self._pending = {}
        self._ttcf_sum = np.zeros(n_steps + 1, dtype=complex)
        self._norm_sum = np.zeros(n_steps + 1, dtype=float)
        self._rho_sum = None
        self._P_sum = None
        self._batch_means = []
        self._open_batch = []
        self._norm_batch_means = []
        self._norm_open_batch = []

    def _contribution(self, pair):
        psi, phi = pair.psi, pair.phi
        ttcf = np.einsum("td,de,te->t", psi.conj(), self.A, phi, optimize=True)
        norm = np.einsum("td,td->t", psi.conj(), psi).real
        ps = psi[self.stored_idx]
        fs = phi[self.stored_idx]
        rho = np.einsum("td,te->tde", ps, ps.conj())
        P = np.einsum("td,te->tde", fs, ps.conj())
        return ttcf, norm, rho, P

    def absorb(self, pair):
        if pair.seed is None:
            raise ValueError("pair carries no seed; ensemble reduction needs traj_index")
        idx = pair.seed.traj_index
        if idx < self._next or idx in self._pending:
            raise ValueError(f"trajectory {idx} already absorbed")
        self._pending[idx] = self._contribution(pair)
        while self._next in self._pending:
            ttcf, norm, rho, P = self._pending.pop(self._next)
            if self._rho_sum is None:
                self._rho_sum = np.zeros_like(rho)
                self._P_sum = np.zeros_like(P)
            self._ttcf_sum += ttcf
            self._norm_sum += norm
            self._rho_sum += rho
            self._P_sum += P
            self._open_batch.append(ttcf)
            self._norm_open_batch.append(norm)
            if len(self._open_batch) == self.batch_size:
                self._batch_means.append(np.mean(self._open_batch, axis=0))
                self._norm_batch_means.append(np.mean(self._norm_open_batch, axis=0))
                self._open_batch = []
                self._norm_open_batch = []
            self.count += 1
            self._next += 1

    @property
    def rho(self):
        if self.count == 0:
            raise ValueError("no trajectories absorbed")
        return self._rho_sum / self.count

    @property
    def P(self):
        if self.count == 0:
            raise ValueError("no trajectories absorbed")
        return self._P_sum / self.count

    def ttcf_mean(self):
        if self.count == 0:
            raise ValueError("no trajectories absorbed")
        return self._ttcf_sum / self.count

    def norm_mean(self):
        if self.count == 0:
            raise ValueError("no trajectories absorbed")
        return self._norm_sum / self.count

    def batch_sigma(self):
        """Per-time standard error of the ensemble-mean trace from batch means."""
        m = len(self._batch_means)
        if m < 2:
            return np.full(self.n_steps + 1, np.inf)
        bm = np.array(self._batch_means)
        return np.sqrt(np.var(bm.real, axis=0, ddof=1) + np.var(bm.imag, axis=0, ddof=1)) / np.sqrt(m)

    def norm_batch_sigma(self):
        """Per-time standard error of the ensemble-mean norm trace."""
        m = len(self._norm_batch_means)
        if m < 2:
            return np.full(self.n_steps + 1, np.inf)
        bm = np.array(self._norm_batch_means)
        return np.std(bm, axis=0, ddof=1) / np.sqrt(m)


def accumulate(acc, pair):
    """Fold one trajectory pair into the ensemble reduction; returns acc."""
    acc.absorb(pair)
    return acc


@dataclass
class EnsembleResult:
    dt: float
    ttcf: np.ndarray          # ensemble-mean tr(A P)(t), full grid
    norm_trace: np.ndarray    # ensemble-mean <psi|psi>(t), estimates tr rho
    batch_sigma: np.ndarray   # standard error of ttcf from batch means
    norm_sigma: np.ndarray    # standard error of the norm trace
    rho: np.ndarray           # mean density matrices at stored_idx
    P: np.ndarray
    stored_idx: np.ndarray
    n_traj: int
    excluded: list            # diverged trajectory indices, dropped from means
    batch_size: int


def run_ensemble(p, c, psi0, B, A, dt, n_steps, n_traj, master_seed,
                 batch_size=64, workers=1, hamiltonian_form="linearized",
                 store_stride=None):
    """Monte-Carlo TTCF estimate over n_traj paired trajectories.

    Trajectories are processed in fixed batches; each batch is evolved as one
    vectorized block (columns = trajectories) and reduced in batch order, so
    the result is bit-identical for any worker count. Trajectories whose norm
    overflows are excluded from every mean and reported.
    """
    from .hilbert import build_hamiltonian
    H = build_hamiltonian(p, hamiltonian_form)
    a, ad, b, bd = _embedded_ops(p.dims)
    L = b
    _check_grids(c, None, dt, n_steps)
    if store_stride is None:
        store_stride = max(1, n_steps // 40)
    stored_idx = np.arange(0, n_steps + 1, store_stride)
    if stored_idx[-1] != n_steps:
        stored_idx = np.append(stored_idx, n_steps)
    D = H.shape[0]
    psi0 = np.asarray(psi0, complex)
    phi0 = np.asarray(B, complex) @ psi0
    A = np.asarray(A, complex)

    mih = -1j * H
    Ldag = L.conj().T
    F = c.values

    TL = np.stack([Ldag @ op for op in (a, ad, b, bd)])

    def kmat(idx):
        return mih - np.einsum("j,jde->de", F[:, idx], TL)

    n_batches = (n_traj + batch_size - 1) // batch_size

    def run_batch(bi):
        lo = bi * batch_size
        hi = min(lo + batch_size, n_traj)
        bs = hi - lo
        z = sample_noise_block(NoiseSeed(master_seed, lo), p, dt, n_steps, bs)
        # columns: [psi_0 .. psi_bs-1 | phi_0 .. phi_bs-1]
        Y = np.empty((D, 2 * bs), dtype=complex)
        Y[:, :bs] = psi0[:, None]
        Y[:, bs:] = phi0[:, None]
        alive = np.ones(bs, dtype=bool)
        ttcf = np.empty((bs, n_steps + 1), dtype=complex)
        norm = np.empty((bs, n_steps + 1), dtype=float)
        snaps = np.empty((len(stored_idx), D, 2 * bs), dtype=complex)
        zrow = np.empty(2 * bs, dtype=complex)

        def observe(k, col):
            ApY = A @ Y[:, bs:]
            ttcf[:, k] = np.einsum("dj,dj->j", Y[:, :bs].conj(), ApY)
            norm[:, k] = np.einsum("dj,dj->j", Y[:, :bs].conj(), Y[:, :bs]).real
            if col is not None:
                snaps[col] = Y

        col = {int(s): i for i, s in enumerate(stored_idx)}
        observe(0, col.get(0))
        for k in range(n_steps):
            K0 = kmat(2 * k)
            K1 = kmat(2 * k + 1)
            K2 = kmat(2 * k + 2)
            zrow[:bs] = z[:, 2 * k]
            zrow[bs:] = z[:, 2 * k]
            k1 = K0 @ Y + zrow * (L @ Y)
            zrow[:bs] = z[:, 2 * k + 1]
            zrow[bs:] = z[:, 2 * k + 1]
            y2 = Y + 0.5 * dt * k1
            k2 = K1 @ y2 + zrow * (L @ y2)
            y3 = Y + 0.5 * dt * k2
            k3 = K1 @ y3 + zrow * (L @ y3)
            zrow[:bs] = z[:, 2 * k + 2]
            zrow[bs:] = z[:, 2 * k + 2]
            y4 = Y + dt * k3
            k4 = K2 @ y4 + zrow * (L @ y4)
            Y = Y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            pn = np.einsum("dj,dj->j", Y.conj(), Y).real
            bad = ~np.isfinite(pn[:bs]) | ~np.isfinite(pn[bs:]) | \
                (pn[:bs] > TRAJ_NORM_LIMIT ** 2) | (pn[bs:] > TRAJ_NORM_LIMIT ** 2)
            newly = bad & alive
            if newly.any():
                cols = np.concatenate([np.nonzero(newly)[0], np.nonzero(newly)[0] + bs])
                Y[:, cols] = 0.0  # freeze diverged columns; excluded from means below
                alive &= ~newly
            observe(k + 1, col.get(k + 1))
        incl = np.nonzero(alive)[0]
        rho_b = np.einsum("tdj,tej->tde", snaps[:, :, incl], snaps[:, :, incl].conj())
        P_b = np.einsum("tdj,tej->tde", snaps[:, :, bs + incl], snaps[:, :, incl].conj())
        bad_ids = [lo + int(j) for j in np.nonzero(~alive)[0]]
        return (ttcf[incl].sum(axis=0), norm[incl].sum(axis=0), rho_b, P_b,
                len(incl), bad_ids,
                ttcf[incl].mean(axis=0) if len(incl) else None,
                norm[incl].mean(axis=0) if len(incl) else None)

    if workers <= 1:
        batch_results = [run_batch(bi) for bi in range(n_batches)]
    else:
        with cf.ThreadPoolExecutor(max_workers=workers) as ex:
            batch_results = list(ex.map(run_batch, range(n_batches)))

    ttcf_sum = np.zeros(n_steps + 1, dtype=complex)
    norm_sum = np.zeros(n_steps + 1, dtype=float)
    rho_sum = np.zeros((len(stored_idx), D, D), dtype=complex)
    P_sum = np.zeros((len(stored_idx), D, D), dtype=complex)
    included = 0
    excluded = []
    batch_means = []
    norm_batch_means = []
    for res in batch_results:  # fixed batch order keeps reduction deterministic
        ttcf_sum += res[0]
        norm_sum += res[1]
        rho_sum += res[2]
        P_sum += res[3]
        included += res[4]
        excluded.extend(res[5])
        if res[6] is not None:
            batch_means.append(res[6])
            norm_batch_means.append(res[7])
    if included == 0:
        raise DivergenceError("every trajectory diverged; nothing to average")
    m = len(batch_means)
    if m >= 2:
        bm = np.array(batch_means)
        sigma = np.sqrt(np.var(bm.real, axis=0, ddof=1)
                        + np.var(bm.imag, axis=0, ddof=1)) / np.sqrt(m)
        nsigma = np.std(np.array(norm_batch_means), axis=0, ddof=1) / np.sqrt(m)
    else:
        sigma = np.full(n_steps + 1, np.inf)
        nsigma = np.full(n_steps + 1, np.inf)
    return EnsembleResult(
        dt=dt, ttcf=ttcf_sum / included, norm_trace=norm_sum / included,
        batch_sigma=sigma, norm_sigma=nsigma, rho=rho_sum / included,
        P=P_sum / included, stored_idx=stored_idx, n_traj=n_traj,
        excluded=excluded, batch_size=batch_size)


def evolve_deterministic(H, L, c, rho0, P0, dt, n_steps, store_stride=1):
    """Integrate the closed rho/P equations; returns series at stored indices.

    The generator preserves trace and Hermiticity of rho identically; both are
    monitored downstream, not enforced here.
    """
    _check_grids(c, None, dt, n_steps)
    H = np.asarray(H, complex)
    L = np.asarray(L, complex)
    dims = c.params.dims
    D = H.shape[0]
    if D != dims[0] * dims[1]:
        raise DimensionError(f"H dimension {D} does not match coefficient dims {dims}")
    a, ad, b, bd = _embedded_ops(dims)
    basis = np.stack([a, ad, b, bd])
    mih = -1j * H
    Ldag = L.conj().T
    F = c.values
    TL = np.stack([Ldag @ op for op in (a, ad, b, bd)])

    stored_idx = np.arange(0, n_steps + 1, store_stride)
    if stored_idx[-1] != n_steps:
        stored_idx = np.append(stored_idx, n_steps)
    col = {int(s): i for i, s in enumerate(stored_idx)}

    X = np.stack([np.asarray(rho0, complex), np.asarray(P0, complex)])
    rho_out = np.empty((len(stored_idx), D, D), dtype=complex)
    P_out = np.empty((len(stored_idx), D, D), dtype=complex)

    def put(k):
        i = col.get(k)
        if i is not None:
            rho_out[i] = X[0]
            P_out[i] = X[1]

    def rhs(Xv, idx):
        f = F[:, idx]
        obar = np.einsum("j,jde->de", f, basis)
        K = mih - np.einsum("j,jde->de", f, TL)
        return (K @ Xv + Xv @ K.conj().T
                + L @ (Xv @ obar.conj().T) + obar @ (Xv @ Ldag))

    put(0)
    for k in range(n_steps):
        k1 = rhs(X, 2 * k)
        k2 = rhs(X + 0.5 * dt * k1, 2 * k + 1)
        k3 = rhs(X + 0.5 * dt * k2, 2 * k + 1)
        k4 = rhs(X + dt * k3, 2 * k + 2)
        X = X + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        put(k + 1)
    return rho_out, P_out


def deterministic_traces(H, L, c, rho0, P0, A, dt, n_steps, check_stride=200):
    """Streaming deterministic run: full-grid scalar series plus health checks.

    Returns dict with ttcf (tr A P), trace (tr rho), herm_dev (max |rho-rho+|
    entry seen), eig_floor (most negative rho eigenvalue seen at checked
    times; logged because transient negativity is expected, not an error).
    """
    _check_grids(c, None, dt, n_steps)
    H = np.asarray(H, complex)
    L = np.asarray(L, complex)
    dims = c.params.dims
    a, ad, b, bd = _embedded_ops(dims)
    basis = np.stack([a, ad, b, bd])
    mih = -1j * H
    Ldag = L.conj().T
    F = c.values
    A = np.asarray(A, complex)
    TL = np.stack([Ldag @ op for op in (a, ad, b, bd)])

    X = np.stack([np.asarray(rho0, complex), np.asarray(P0, complex)])
    ttcf = np.empty(n_steps + 1, dtype=complex)
    trace = np.empty(n_steps + 1, dtype=complex)
    herm_dev = 0.0
    eig_floor = 0.0

    def rhs(Xv, idx):
        f = F[:, idx]
        obar = np.einsum("j,jde->de", f, basis)
        K = mih - np.einsum("j,jde->de", f, TL)
        return (K @ Xv + Xv @ K.conj().T
                + L @ (Xv @ obar.conj().T) + obar @ (Xv @ Ldag))

    def observe(k):
        nonlocal herm_dev, eig_floor
        ttcf[k] = np.trace(A @ X[1])
        trace[k] = np.trace(X[0])
        if k % check_stride == 0 or k == n_steps:
            herm_dev = max(herm_dev, float(np.abs(X[0] - X[0].conj().T).max()))
            w = np.linalg.eigvalsh(0.5 * (X[0] + X[0].conj().T))
            eig_floor = min(eig_floor, float(w.min()))

    observe(0)
    for k in range(n_steps):
        k1 = rhs(X, 2 * k)
        k2 = rhs(X + 0.5 * dt * k1, 2 * k + 1)
        k3 = rhs(X + 0.5 * dt * k2, 2 * k + 1)
        k4 = rhs(X + dt * k3, 2 * k + 2)
        X = X + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        observe(k + 1)
    return {"ttcf": ttcf, "trace": trace, "herm_dev": herm_dev, "eig_floor": eig_floor}
