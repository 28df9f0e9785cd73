"""Simulation toolkit for the linearly shunted Josephson ring modulator amplifier."""

__version__ = "0.1.0"

from .circuit import (
    FluxBias,
    JrmParams,
    PhaseConfiguration,
    jrm_energy,
    jrm_gradient,
    jrm_hessian,
    segment_derivatives,
    segment_energy,
    solve_segment_phase,
)
from .eigenmodes import CapacitanceSet, EigenResult, delta_equilibrium, dynamical_matrix, eigenmodes
from .errors import (
    BandwidthError,
    DivergenceError,
    FitError,
    InstabilityError,
    IterationLimitError,
    JrmError,
    NoRootError,
    PostselectionError,
    SolverError,
    UnreachableGainError,
)
from .ground_state import degeneracy_class, global_minima, local_minimize, phase_diagram
from .kerr import duffing_map, kerr_tensor, null_flux, null_trajectory
from .measurement import (
    BlochState,
    ReadoutModel,
    backaction_experiment,
    fit_efficiency,
    jump_trace,
    projective_histogram,
    sample_record,
)
from .network import (
    ModeSpec,
    PumpedNetwork,
    PumpSpec,
    balance_gc,
    bandwidth,
    calibrate_single_pump,
    gain_curves,
    phase_sensitive_gain,
    scattering,
    two_tone_spectrum,
)
