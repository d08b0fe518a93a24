"""Monte Carlo model of atomic-wavepacket teleportation with dissociation
EPR pairs and Coulomb-collision Bell measurements."""

from .physconst import CONSTANTS, HBAR, IonSpecies, species_preset
from .phasespace import CatState, GaussianState, PhasePoint, mus_wavepacket
from .source import SourceParams, epr_pair_state
from .collision import CollisionParams
from .teleport import (
    NoiseBudget,
    RunConfig,
    RunReport,
    error_budget,
    f_max,
    run_classical,
    run_ensemble,
)

__version__ = "0.1.0"
