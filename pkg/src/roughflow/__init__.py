"""Numerical laboratory for Newton flows driven by rough spectral force fields."""

__version__ = "0.1.0"

from .spectral import (RegularityTarget, SpectralField, load_field, mollify,
                       save_field, sobolev_seminorm, synthesize)
from .flow import (BlowUpError, FlowParams, PhaseBox, PhaseState, Trajectory,
                   default_step, energy, inflate_domain, integrate,
                   jacobian_determinant, min_safe_period, semigroup_residual,
                   verlet_step)
from .stability import (DivergenceRecord, EnsembleSpec, PerturbedPair,
                        ShiftSpec, divergence_record, fit_log_exponent,
                        mollification_cauchy_study, q_delta, q_scaling_study,
                        step_robustness)
from .turning import (OscillationFunction, OscillatoryPotential, TurningData,
                      a_eta, certify_window, fit_separation_exponent,
                      initial_position, oscillation_family, separation_scan,
                      shifted_turning, turning_time)

__all__ = [
    "__version__",
    "RegularityTarget", "SpectralField", "load_field", "mollify",
    "save_field", "sobolev_seminorm", "synthesize",
    "BlowUpError", "FlowParams", "PhaseBox", "PhaseState", "Trajectory",
    "default_step", "energy", "inflate_domain", "integrate",
    "jacobian_determinant", "min_safe_period", "semigroup_residual",
    "verlet_step",
    "DivergenceRecord", "EnsembleSpec", "PerturbedPair", "ShiftSpec",
    "divergence_record", "fit_log_exponent", "mollification_cauchy_study",
    "q_delta", "q_scaling_study", "step_robustness",
    "OscillationFunction", "OscillatoryPotential", "TurningData", "a_eta",
    "certify_window", "fit_separation_exponent", "initial_position",
    "oscillation_family", "separation_scan", "shifted_turning", "turning_time",
]
