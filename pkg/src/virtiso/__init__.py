"""Virtual isometries: coherent sequences of unitary matrices and their spectral flow."""
__version__ = "0.1.0"

from .builder import (VirtualIsometryState, VirtualPermutationState, build, crp_extend, cycles, extend, init,
                      permutation_from_indices)
from .measures import MeasureSpec, capacity_estimate, replica_rng, sample_virtual_isometry
from .spectral import SpectralState, StepParams, advance, phi_eval, run_haar_spectral

__all__ = [
    "MeasureSpec", "SpectralState", "StepParams", "VirtualIsometryState", "VirtualPermutationState",
    "advance", "build", "capacity_estimate", "crp_extend", "cycles", "extend", "init", "phi_eval",
    "permutation_from_indices", "replica_rng", "run_haar_spectral", "sample_virtual_isometry",
]
