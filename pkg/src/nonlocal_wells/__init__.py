"""Double-well spectra, nonlocal single-particle bases, determinant states and Dicke states."""

from .dicke import Bipartition, DickeState, QubitState, bipartite_entropy, generate, shoulder_decompose, triangle_table
from .errors import DomainError, InvalidParameters
from .measurement import (
    WellOutcome,
    collapse,
    joint_distribution,
    measurement_equivalent,
    outcome_distribution,
    run_protocol,
)
from .nonlocal_algebra import (
    ExcitationSpec,
    GeneralUnitary,
    MultiParticleState,
    PhaseUnitary,
    SingleParticleState,
    antisymmetrize,
    excite,
    exclusion_spectrum,
    standard_phase_unitary,
    to_nonlocal_basis,
    verify_phase_equivalence,
)
from .well_solver import DoubleWellSpec, EigenSolution, solve, splitting_scan

__version__ = "0.1.0"
