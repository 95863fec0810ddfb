"""Colored complex Gaussian driving noise with an exponential memory kernel.

z_t = x_t + i y_t with x, y independent real Ornstein-Uhlenbeck processes of
stationary variance Gamma*gamma/4 and decay rate gamma, so that
M(z_t z*_s) = (Gamma*gamma/2) exp(-gamma|t-s|) and M(z_t z_s) = 0.

Paths are sampled on the interleaved full/half step grid (spacing dt/2) so
the RK4 trajectory integrator reads midpoint values without interpolation.
The discrete recursion is exact for OU, not an Euler approximation.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter


@dataclass(frozen=True)
class NoiseSeed:
    master_seed: int
    traj_index: int = 0

    def __post_init__(self):
        if self.traj_index < 0:
            raise ValueError(f"traj_index must be >= 0, got {self.traj_index}")


@dataclass
class NoisePath:
    """One realization of z*_t on the half-step grid; values[2k] sits at t_k."""
    dt: float
    values: np.ndarray
    seed: NoiseSeed = None

    def __post_init__(self):
        if len(self.values) % 2 != 1:
            raise ValueError("half-grid path must have odd length 2*n_steps+1")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("noise path contains non-finite entries")

    @property
    def n_steps(self):
        return (len(self.values) - 1) // 2


def _philox(seed):
    # counter-based stream: independent for distinct (master_seed, traj_index)
    key = np.array([seed.master_seed, seed.traj_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _ou_block(rng, var_st, gamma, delta, n_paths, n_pts):
    """Exact stationary OU recursion over n_pts grid points, vectorized over paths."""
    decay = np.exp(-gamma * delta)
    innov = np.sqrt(var_st * (1.0 - decay ** 2))
    xi = rng.standard_normal((n_paths, n_pts))
    drive = innov * xi
    drive[:, 0] = np.sqrt(var_st) * xi[:, 0]
    # x_k = decay * x_{k-1} + drive_k  via an IIR filter along the time axis
    return lfilter([1.0], [1.0, -decay], drive, axis=1)


def sample_noise_path(seed, p, dt, n_steps):
    """One z*_t path for (master_seed, traj_index), stationary initial point."""
    if dt <= 0 or n_steps < 1:
        raise ValueError(f"need dt > 0 and n_steps >= 1, got dt={dt}, n_steps={n_steps}")
    block = sample_noise_block(seed, p, dt, n_steps, 1)
    return NoisePath(dt=dt, values=block[0], seed=seed)


def sample_noise_block(seed, p, dt, n_steps, n_paths):
    """(n_paths, 2*n_steps+1) array of z*_t values, one counter stream per row.

    Row j is bit-identical to sample_noise_path for traj_index seed.traj_index
    + j regardless of how trajectories are split into blocks, so ensemble
    results cannot depend on the batching.
    """
    if dt <= 0 or n_steps < 1:
        raise ValueError(f"need dt > 0 and n_steps >= 1, got dt={dt}, n_steps={n_steps}")
    n_pts = 2 * n_steps + 1
    var_st = p.Gamma * p.gamma / 4.0
    if n_paths == 1:
        rng = _philox(seed)
        x = _ou_block(rng, var_st, p.gamma, dt / 2.0, 1, n_pts)
        y = _ou_block(rng, var_st, p.gamma, dt / 2.0, 1, n_pts)
        return x - 1j * y
    # distinct trajectory indices get their own counter streams
    out = np.empty((n_paths, n_pts), dtype=complex)
    for j in range(n_paths):
        s = NoiseSeed(seed.master_seed, seed.traj_index + j)
        rng = _philox(s)
        x = _ou_block(rng, var_st, p.gamma, dt / 2.0, 1, n_pts)
        y = _ou_block(rng, var_st, p.gamma, dt / 2.0, 1, n_pts)
        out[j] = (x - 1j * y)[0]
    return out


def kernel_value(p, tau):
    """Memory kernel (Gamma*gamma/2) exp(-gamma |tau|); real for this bath."""
    return complex(p.Gamma * p.gamma / 2.0 * np.exp(-p.gamma * abs(tau)))
