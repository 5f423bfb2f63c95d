"""Numerical laboratory for a square-well quench under rival response models."""

from .core import (
    ChrononError,
    Grid,
    Hamiltonian,
    NoBoundStateError,
    UnderResolvedError,
    ValidationError,
    WellConfig,
    Wavefunction,
    build_hamiltonian,
    evolve,
    evolve_exact,
    evolve_step,
    prob_in_region,
    solve_stationary,
)
from .models import (
    CausalityError,
    DiscreteDelay,
    Front,
    Instantaneous,
    LocalPerturbation,
    QuenchScenario,
    state_at,
)

__all__ = [
    "CausalityError",
    "ChrononError",
    "DiscreteDelay",
    "Front",
    "Grid",
    "Hamiltonian",
    "Instantaneous",
    "LocalPerturbation",
    "NoBoundStateError",
    "QuenchScenario",
    "UnderResolvedError",
    "ValidationError",
    "Wavefunction",
    "WellConfig",
    "build_hamiltonian",
    "evolve",
    "evolve_exact",
    "evolve_step",
    "prob_in_region",
    "solve_stationary",
    "state_at",
]

__version__ = "0.1.0"
