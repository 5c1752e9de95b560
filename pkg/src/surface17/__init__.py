"""Circuit-level simulation and decoding of a distance-3 surface-code memory."""

__version__ = "0.1.0"

from .code import (DATA, QUBITS, STABILIZER_ORDER, X_AUX, Z_AUX, GateSchedule, Surface17,
                   build_surface17, default_schedule, validate_schedule)
from .experiment import (RunConfig, ShotBatch, compute_syndromes, read_shots, reject_leakage,
                         run_memory_experiment, write_shots)
from .noise import DeviceParams, PauliChannel, average_device, bundled_device
from .pauli import PauliString
from .tableau import Tableau

__all__ = [
    "__version__", "DATA", "QUBITS", "STABILIZER_ORDER", "X_AUX", "Z_AUX", "GateSchedule",
    "Surface17", "build_surface17", "default_schedule", "validate_schedule", "RunConfig",
    "ShotBatch", "compute_syndromes", "read_shots", "reject_leakage", "run_memory_experiment",
    "write_shots", "DeviceParams", "PauliChannel", "average_device", "bundled_device",
    "PauliString", "Tableau",
]
