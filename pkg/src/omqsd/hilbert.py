"""Truncated two-mode Fock space: operators, Hamiltonians, state preparation.

Basis ordering is |n_c> (x) |n_m> with the cavity as the leftmost (slow)
factor, so index = n_c * dim_m + n_m.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, TruncationError

SLOTS = ("cavity", "mechanical")


@dataclass(frozen=True)
class SystemParams:
    """Physical constants and truncation dimensions. Single source of model truth.

    omega0: cavity frequency, Omega: mechanical frequency, lam: bilinear
    coupling strength, Gamma: bath coupling strength, gamma: bath memory rate
    (inverse correlation time). hbar = 1 throughout.
    """
    omega0: float = 5.0
    Omega: float = 1.0
    lam: float = 1.0
    Gamma: float = 2.0
    gamma: float = 0.2
    dim_c: int = 12
    dim_m: int = 12

    def __post_init__(self):
        for name in ("omega0", "Omega", "lam", "Gamma", "gamma"):
            v = getattr(self, name)
            if not np.isfinite(v) or isinstance(v, complex):
                raise ValueError(f"{name} must be finite and real, got {v!r}")
        if self.Gamma < 0:
            raise ValueError(f"Gamma must be >= 0, got {self.Gamma}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        for name in ("dim_c", "dim_m"):
            d = getattr(self, name)
            if not isinstance(d, (int, np.integer)) or d < 2:
                raise DimensionError(f"{name} must be an integer >= 2, got {d!r}")

    @property
    def dims(self):
        return (self.dim_c, self.dim_m)


def make_mode_op(dim):
    """Single-mode annihilation operator: <n-1|op|n> = sqrt(n)."""
    if not isinstance(dim, (int, np.integer)) or dim < 2:
        raise DimensionError(f"mode dimension must be an integer >= 2, got {dim!r}")
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def tensor_embed(op, slot, dims):
    """Embed a single-mode operator on the product space (cavity leftmost).

    slot is "cavity" or "mechanical", or a factor index when dims has more
    than the two system modes (reference-model enlargements).
    """
    if isinstance(slot, str):
        if slot not in SLOTS:
            raise DimensionError(f"slot must be one of {SLOTS}, got {slot!r}")
        k = SLOTS.index(slot)
    else:
        k = int(slot)
        if not 0 <= k < len(dims):
            raise DimensionError(f"slot index {k} outside factors {dims}")
    op = np.asarray(op, dtype=complex)
    if op.shape != (dims[k], dims[k]):
        raise DimensionError(
            f"operator shape {op.shape} does not match slot {slot} dimension {dims[k]}")
    out = np.eye(1, dtype=complex)
    for j, d in enumerate(dims):
        out = np.kron(out, op if j == k else np.eye(d, dtype=complex))
    return out


def mode_operators(p):
    """(a, b) annihilation operators embedded on the product space."""
    a = tensor_embed(make_mode_op(p.dim_c), "cavity", p.dims)
    b = tensor_embed(make_mode_op(p.dim_m), "mechanical", p.dims)
    return a, b


def build_hamiltonian(p, form="linearized"):
    """System Hamiltonian on the product space.

    linearized: w0 a+a + Om b+b - lam (a+ + a)(b+ + b)
    nonlinear:  w0 a+a + Om b+b - lam a+a (b+ + b)
    """
    a, b = mode_operators(p)
    ad, bd = a.conj().T, b.conj().T
    h0 = p.omega0 * (ad @ a) + p.Omega * (bd @ b)
    xm = bd + b
    if form == "linearized":
        return h0 - p.lam * ((ad + a) @ xm)
    if form == "nonlinear":
        return h0 - p.lam * (ad @ a @ xm)
    raise ValueError(f"unknown hamiltonian form {form!r}")


def prep_state(kind, dim, n=None, beta=None, r=None, theta=0.0, leak_tol=1e-6):
    """Normalized single-mode state vector.

    Coherent and squeezed preparations fail hard when the truncated tail
    carries more than leak_tol of the norm; correlation errors from leakage
    are otherwise indistinguishable from physics downstream.
    """
    if kind == "fock":
        if n is None or not 0 <= n < dim:
            raise TruncationError(f"fock level n={n!r} needs 0 <= n < dim={dim}")
        v = np.zeros(dim, dtype=complex)
        v[n] = 1.0
        return v
    if kind == "coherent":
        if beta is None:
            raise ValueError("coherent state needs beta")
        ns = np.arange(dim)
        logfact = np.array([math.lgamma(k + 1) for k in ns])
        amps = np.exp(-abs(beta) ** 2 / 2) * np.power(complex(beta), ns) / np.exp(logfact / 2)
        leak = 1.0 - float(np.sum(np.abs(amps) ** 2))
        if leak > leak_tol:
            raise TruncationError(
                f"coherent beta={beta} leaks {leak:.3e} past dim={dim} (tol {leak_tol:.1e})")
        return amps / np.linalg.norm(amps)
    if kind == "squeezed":
        if r is None:
            raise ValueError("squeezed state needs r (and optionally theta)")
        v = np.zeros(dim, dtype=complex)
        for m in range(dim // 2 + (dim % 2)):
            if 2 * m >= dim:
                break
            lognorm = 0.5 * math.lgamma(2 * m + 1) - m * math.log(2.0) - math.lgamma(m + 1)
            v[2 * m] = (-np.exp(1j * theta) * math.tanh(r)) ** m * np.exp(lognorm)
        v /= math.sqrt(math.cosh(r))
        leak = 1.0 - float(np.sum(np.abs(v) ** 2))
        if leak > leak_tol:
            raise TruncationError(
                f"squeezed r={r} leaks {leak:.3e} past dim={dim} (tol {leak_tol:.1e})")
        return v / np.linalg.norm(v)
    raise ValueError(f"unknown state kind {kind!r}")


def product_state(cavity_vec, mech_vec):
    """|psi_c> (x) |psi_m> on the product space."""
    return np.kron(np.asarray(cavity_vec, complex), np.asarray(mech_vec, complex))


def apply_operator(op, vec):
    """Plain matrix-vector product; result may be unnormalized."""
    op = np.asarray(op, complex)
    vec = np.asarray(vec, complex)
    if op.shape[1] != vec.shape[0]:
        raise DimensionError(f"operator {op.shape} cannot act on vector of length {len(vec)}")
    return op @ vec
