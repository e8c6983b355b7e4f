"""Information geometry and stochastic thermodynamics of open quantum systems.

Modules, bottom up: :mod:`qig.states` (density matrices and state
functionals), :mod:`qig.markov` (classical master equations),
:mod:`qig.gksl` (Lindblad dynamics and eigenbasis currents),
:mod:`qig.geometry` (quantum Fisher information and path functionals),
:mod:`qig.thermo` (entropy rates, identities and bounds),
:mod:`qig.mpemba` (the qubit relaxation experiment) and the command-line
layer in :mod:`qig.config`, :mod:`qig.output` and :mod:`qig.cli`.
"""

from .errors import DivergentQFIError, DomainError, IntegrationError, ValidationError
from .geometry import QFI, GeometricSummary, MetricKind, geodesic_length, qfi, qfi_series, summarize
from .gksl import JumpPair, Lindbladian, Trajectory, integrate
from .mpemba import ExperimentBundle, MpembaScenario, build_scenario, detect_crossing, run_experiment
from .states import bloch_to_density, relative_entropy, thermal_state, uhlmann_fidelity, von_neumann_entropy
from .thermo import entropy_decomposition, entropy_rate_bound, observable_speed_bound, qfi_ic_identities

__version__ = "0.1.0"

__all__ = [
    "DivergentQFIError",
    "DomainError",
    "IntegrationError",
    "ValidationError",
    "QFI",
    "GeometricSummary",
    "MetricKind",
    "geodesic_length",
    "qfi",
    "qfi_series",
    "summarize",
    "JumpPair",
    "Lindbladian",
    "Trajectory",
    "integrate",
    "ExperimentBundle",
    "MpembaScenario",
    "build_scenario",
    "detect_crossing",
    "run_experiment",
    "bloch_to_density",
    "relative_entropy",
    "thermal_state",
    "uhlmann_fidelity",
    "von_neumann_entropy",
    "entropy_decomposition",
    "entropy_rate_bound",
    "observable_speed_bound",
    "qfi_ic_identities",
]
