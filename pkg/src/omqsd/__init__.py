"""Non-Markovian open-system correlation functions for a linearized
optomechanical model, computed by stochastic quantum-state-diffusion
trajectories, by the equivalent deterministic operator flow, and by exact
pseudomode and Markov-limit references."""

from .hilbert import SystemParams, build_hamiltonian, mode_operators, prep_state, product_state
from .noise import NoiseSeed, NoisePath, sample_noise_path, kernel_value
from .coeffs import CoeffSet, solve_coeffs, obar_operator
from .dynamics import (TrajectoryPair, EnsembleAccumulator, EnsembleResult,
                       evolve_pair, accumulate, run_ensemble,
                       evolve_deterministic, deterministic_traces)

__version__ = "0.1.0"
