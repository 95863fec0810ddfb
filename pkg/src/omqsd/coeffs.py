"""Closed ODE system for the kernel-integrated memory-operator coefficients.

The weighted operator Obar(t) = F1 a + F2 a+ + F3 b + F4 b+ is determined by
four coupled complex ODEs. Two sign conventions for the iL coupling terms are
integrated side by side:

  variant="paper":     +i*lam coupling terms;
  variant="rederived": -i*lam coupling terms, the sign produced by expanding
                       the commutator with H = w0 a+a + Om b+b - lam(a++a)(b++b)
                       and L = b directly.

Which one is physically consistent is decided by measurement against the
pseudomode reference (oracles.select_canonical_variant), not assumed here.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, StiffnessError

VARIANTS = ("paper", "rederived")
BLOWUP_LIMIT = 1e6
# fixed-step RK4 needs the fastest rate resolved with margin
STIFFNESS_LIMIT = 0.1


@dataclass
class CoeffSet:
    """F_j time series on the interleaved full/half grid; values[:, 2k] at t_k."""
    dt: float
    values: np.ndarray  # shape (4, 2*n_steps+1)
    variant: str = "paper"
    params: object = None  # SystemParams the set was solved for

    @property
    def n_steps(self):
        return (self.values.shape[1] - 1) // 2

    @property
    def F1(self):
        return self.values[0, ::2]

    @property
    def F2(self):
        return self.values[1, ::2]

    @property
    def F3(self):
        return self.values[2, ::2]

    @property
    def F4(self):
        return self.values[3, ::2]

    def grid(self):
        return np.arange(self.n_steps + 1) * self.dt


def _check_step(p, dt):
    fastest = max(p.gamma, p.omega0, p.Omega, p.Gamma * p.gamma)
    if dt * fastest > STIFFNESS_LIMIT * (1 + 1e-12):
        raise StiffnessError(
            f"dt={dt} too coarse: dt*max(gamma, omega0, Omega, Gamma*gamma) = "
            f"{dt * fastest:.3g} exceeds {STIFFNESS_LIMIT}")


def solve_coeffs(p, dt, n_steps, variant="paper"):
    """RK4 integration of the F_j system from F_j(0) = 0 on the half grid."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    _check_step(p, dt)
    sgn = 1.0 if variant == "paper" else -1.0
    il = 1j * p.lam * sgn
    iw0 = 1j * p.omega0
    iOm = 1j * p.Omega
    gam = p.gamma
    drive = p.Gamma * p.gamma / 2.0
    delta = dt / 2.0

    def rhs(f):
        f1, f2, f3, f4 = f
        return np.array([
            -gam * f1 + iw0 * f1 + il * (f3 - f4) + f1 * f3,
            -gam * f2 - iw0 * f2 + il * (f3 - f4) + f2 * f3,
            drive - gam * f3 + iOm * f3 + il * (f1 - f2) + f3 * f3,
            -gam * f4 - iOm * f4 + il * (f1 - f2) + f3 * f4,
        ])

    out = np.zeros((4, 2 * n_steps + 1), dtype=complex)
    f = np.zeros(4, dtype=complex)
    for k in range(2 * n_steps):
        k1 = rhs(f)
        k2 = rhs(f + 0.5 * delta * k1)
        k3 = rhs(f + 0.5 * delta * k2)
        k4 = rhs(f + delta * k3)
        f = f + (delta / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if np.abs(f).max() > BLOWUP_LIMIT:
            raise DivergenceError(
                f"coefficient blow-up at t={0.5 * (k + 1) * dt:.4f} (variant={variant})",
                t=0.5 * (k + 1) * dt)
        out[:, k + 1] = f
    return CoeffSet(dt=dt, values=out, variant=variant, params=p)


def obar_operator(c, k, dims):
    """Obar at half-grid index k (full-grid point t_j is k = 2j), embedded on dims."""
    from .hilbert import make_mode_op, tensor_embed
    if not 0 <= k < c.values.shape[1]:
        raise IndexError(f"half-grid index {k} outside stored range 0..{c.values.shape[1] - 1}")
    a = tensor_embed(make_mode_op(dims[0]), "cavity", dims)
    b = tensor_embed(make_mode_op(dims[1]), "mechanical", dims)
    f1, f2, f3, f4 = c.values[:, k]
    return f1 * a + f2 * a.conj().T + f3 * b + f4 * b.conj().T
