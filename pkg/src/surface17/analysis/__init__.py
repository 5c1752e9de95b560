"""Post-processing: decay fits, scaling study, stabilizer errors, state fidelities."""

from .decay import (CYCLE_US, DecayFit, FitError, RetentionFit, direct_epsilon,
                    epsilon_from_lifetime, error_probability, fit_retention, logical_decay_fit)
from .fidelity import (CorrectableSubspace, FidelityReport, TomographyData,
                       build_correctable_subspace, exact_correlators, fidelity_correctable,
                       fidelity_physical, gamma, logical_terms, mitigate_readout,
                       mixed_correlators, sample_correlators, sign_matrix, tomography_settings)
from .memory import MemoryPoint, decode_batch_point, memory_sweep
from .scaling import DEFAULT_FACTORS, ScalingResult, power_law_fit, scaling_study
from .stabilizers import (StabilizerResult, run_stabilizer, stabilizer_circuit, stabilizer_error,
                          stabilizer_survey)

__all__ = [
    "CYCLE_US", "DecayFit", "FitError", "RetentionFit", "direct_epsilon", "epsilon_from_lifetime",
    "error_probability", "fit_retention", "logical_decay_fit", "CorrectableSubspace",
    "FidelityReport", "TomographyData", "build_correctable_subspace", "exact_correlators",
    "fidelity_correctable", "fidelity_physical", "gamma", "logical_terms", "mitigate_readout",
    "mixed_correlators", "sample_correlators", "sign_matrix", "tomography_settings",
    "MemoryPoint", "decode_batch_point", "memory_sweep", "DEFAULT_FACTORS", "ScalingResult",
    "power_law_fit", "scaling_study", "StabilizerResult", "run_stabilizer", "stabilizer_circuit",
    "stabilizer_error", "stabilizer_survey",
]
