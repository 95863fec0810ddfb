"""Flat JSON run configuration: parsing, defaults, validation.

Every key has a documented default, so an empty document is a complete
configuration. Unknown keys are rejected rather than ignored; subcommands
that do not use a key log a notice instead.
"""
import json
import math
from dataclasses import dataclass, fields, asdict

from .errors import ConfigError

METHODS = ("stochastic", "deterministic", "pseudomode", "markov-lindblad")
COEFF_VARIANTS = ("paper", "rederived")
HAMILTONIAN_FORMS = ("linearized", "nonlinear")
MECH_KINDS = ("fock", "coherent", "squeezed")
OBSERVABLES_A = ("Xc", "Nc")
OPERATORS_B = ("Xm", "b", "bdag", "identity")
WINDOWS = ("none", "hann")


@dataclass
class RunConfig:
    omega0: float = 5.0
    Omega: float = 1.0
    lam: float = 1.0
    Gamma: float = 2.0
    gamma: float = 0.2
    dim_c: int = 6
    dim_m: int = 6
    dim_p: int = 8
    dt: float = 1e-3
    T: float = 20.0
    n_traj: int = 2000
    master_seed: int = 42
    method: str = "stochastic"
    coeff_variant: str = "rederived"
    hamiltonian_form: str = "linearized"
    alpha0: float = 1.0
    mech_kind: str = "fock"
    mech_n: int = 2
    mech_beta: float = 1.0
    mech_r: float = 0.5
    mech_theta: float = 0.0
    observable_a: str = "Xc"
    operator_b: str = "Xm"
    window: str = "hann"
    pad_factor: int = 4
    leak_tol: float = 1e-3
    out_dir: str = "out"
    workers: int = 0          # 0 = available parallelism
    batch_size: int = 64

    @property
    def n_steps(self):
        return int(round(self.T / self.dt))

    def params(self):
        from .hilbert import SystemParams
        return SystemParams(omega0=self.omega0, Omega=self.Omega, lam=self.lam,
                            Gamma=self.Gamma, gamma=self.gamma,
                            dim_c=self.dim_c, dim_m=self.dim_m)

    def initial_state(self):
        from .hilbert import prep_state, product_state
        cav = prep_state("coherent", self.dim_c, beta=self.alpha0,
                         leak_tol=self.leak_tol)
        if self.mech_kind == "fock":
            mech = prep_state("fock", self.dim_m, n=self.mech_n)
        elif self.mech_kind == "coherent":
            mech = prep_state("coherent", self.dim_m, beta=self.mech_beta,
                              leak_tol=self.leak_tol)
        else:
            mech = prep_state("squeezed", self.dim_m, r=self.mech_r,
                              theta=self.mech_theta, leak_tol=self.leak_tol)
        return product_state(cav, mech)

    def to_dict(self):
        return asdict(self)


_ENUMS = {
    "method": METHODS,
    "coeff_variant": COEFF_VARIANTS,
    "hamiltonian_form": HAMILTONIAN_FORMS,
    "mech_kind": MECH_KINDS,
    "observable_a": OBSERVABLES_A,
    "operator_b": OPERATORS_B,
    "window": WINDOWS,
}

_POSITIVE = ("Omega", "omega0", "gamma", "dt", "T", "leak_tol")
_NONNEG = ("Gamma", "master_seed", "workers", "mech_theta")
_INTS = ("dim_c", "dim_m", "dim_p", "n_traj", "master_seed", "mech_n",
         "pad_factor", "workers", "batch_size")


def validate(cfg):
    """Raise ConfigError naming the first key violating its constraint."""
    for key in _INTS:
        v = getattr(cfg, key)
        if not isinstance(v, int) or isinstance(v, bool):
            raise ConfigError(f"{key} must be an integer, got {v!r}", key=key)
    for key, allowed in _ENUMS.items():
        v = getattr(cfg, key)
        if v not in allowed:
            raise ConfigError(f"{key} must be one of {allowed}, got {v!r}", key=key)
    for key in ("omega0", "Omega", "lam", "Gamma", "gamma", "dt", "T",
                "alpha0", "mech_beta", "mech_r", "mech_theta", "leak_tol"):
        v = getattr(cfg, key)
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"{key} must be a finite number, got {v!r}", key=key)
    for key in _POSITIVE:
        if getattr(cfg, key) <= 0:
            raise ConfigError(f"{key} must be > 0, got {getattr(cfg, key)}", key=key)
    for key in _NONNEG:
        if getattr(cfg, key) < 0:
            raise ConfigError(f"{key} must be >= 0, got {getattr(cfg, key)}", key=key)
    for key, lo in (("dim_c", 2), ("dim_m", 2), ("dim_p", 2), ("n_traj", 1),
                    ("pad_factor", 1), ("batch_size", 1)):
        if getattr(cfg, key) < lo:
            raise ConfigError(f"{key} must be >= {lo}, got {getattr(cfg, key)}", key=key)
    if cfg.mech_n >= cfg.dim_m:
        raise ConfigError(
            f"mech_n must be < dim_m, got {cfg.mech_n} >= {cfg.dim_m}", key="mech_n")
    ratio = cfg.T / cfg.dt
    if abs(ratio - round(ratio)) > 1e-9 * max(ratio, 1.0):
        raise ConfigError(f"T/dt must be an integer, got {ratio}", key="T")
    return cfg


def from_dict(doc, source="<dict>"):
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(
            f"{source}: unknown key(s) {', '.join(unknown)}", key=unknown[0])
    # JSON has no int/float distinction for whole numbers; normalize ints
    clean = {}
    for k, v in doc.items():
        if k in _INTS and isinstance(v, float) and v.is_integer():
            v = int(v)
        clean[k] = v
    cfg = validate(RunConfig(**clean))
    cfg.explicit_keys = set(doc)
    return cfg


def load_config(path):
    """Parse and fully validate a flat JSON config file."""
    with open(path) as fh:
        text = fh.read()
    try:
        doc = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as e:
        raise ConfigError(
            f"{path}: parse error at line {e.lineno}, column {e.colno}: {e.msg}") from e
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a flat JSON object")
    return from_dict(doc, source=path)
