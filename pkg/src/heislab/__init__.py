"""Heisenberg-limited learning of hybrid spin-boson Hamiltonians (simulation toolkit)."""
from .errors import EstimationFailure, HeislabError
from .gaussian import GaussianBosonState, SpamNoise
from .kernels import BACKEND as KERNEL_BACKEND
from .model import HybridHamiltonian, SpectralDensitySpec, build_gdm, build_named_model, build_sbm
from .oracle import EvolutionOracle
from .pauli import PauliString, enumerate_eb, gamma_matrix, solve_coefficients
from .protocols import (
    LearningResult,
    full_pipeline,
    learn_boson_frequencies,
    learn_couplings_dqs,
    learn_couplings_trotter,
    learn_spectrum,
    learn_spin_coefficients,
)

__version__ = "0.1.0"

__all__ = [
    "EstimationFailure", "HeislabError", "GaussianBosonState", "SpamNoise", "KERNEL_BACKEND",
    "HybridHamiltonian", "SpectralDensitySpec", "build_gdm", "build_named_model", "build_sbm",
    "EvolutionOracle", "PauliString", "enumerate_eb", "gamma_matrix", "solve_coefficients",
    "LearningResult", "full_pipeline", "learn_boson_frequencies", "learn_couplings_dqs",
    "learn_couplings_trotter", "learn_spectrum", "learn_spin_coefficients",
]
