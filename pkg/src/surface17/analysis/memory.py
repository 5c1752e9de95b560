"""Memory-experiment sweeps: simulate, reject leakage, train weights, decode."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..decoder import WeightMatrix, decode_shots, train_weights
from ..experiment import RunConfig, ShotBatch, compute_syndromes, reject_leakage, run_memory_experiment
from ..noise import DeviceParams
from .decay import DecayFit, error_probability, logical_decay_fit


@dataclass
class MemoryPoint:
    state: str
    n: int
    shots: int
    heralded: int
    retained: int
    retained_fraction: float
    mean: float             # <O_L> after correction, sign-referenced to the prepared state
    stderr: float
    E_L: float
    sigma_mean: float

    def as_dict(self) -> dict:
        return asdict(self)


def decode_batch_point(batch: ShotBatch, rejection: str = "both", wm: WeightMatrix | None = None,
                       cap: int = 4, first_cycle: str = "frame") -> MemoryPoint:
    """Reduce one simulated (or loaded) batch to a memory point.

    Without ``wm`` the decoder weights are trained on the retained shots.
    """
    kept, stats = reject_leakage(batch, rejection)
    syn = compute_syndromes(kept, first_cycle=first_cycle)
    if len(kept) == 0:
        raise ValueError(f"no shots left after {rejection!r} rejection")
    if wm is None:
        _, wm = train_weights(syn, batch.n_cycles, cap=cap)
    z = decode_shots(kept, wm, syn) * batch.reference_logical
    mean = float(z.mean())
    se = float(np.sqrt(max(1.0 - mean ** 2, 0.0) / len(z)))
    return MemoryPoint(batch.state, batch.n_cycles, len(batch), stats.heralded, stats.retained,
                       stats.fraction, mean, se, float(error_probability(mean)),
                       syn.mean_syndrome())


def memory_sweep(device: DeviceParams, state: str, n_values, shots: int, seed: int,
                 rejection: str = "both", workers: int = 1, cap: int = 4,
                 first_cycle: str = "frame") -> tuple[list[MemoryPoint], DecayFit]:
    """Simulate and decode every n, then fit the exponential decay."""
    points = []
    for n in n_values:
        batch = run_memory_experiment(RunConfig(state, int(n), shots, seed), device,
                                      workers=workers)
        points.append(decode_batch_point(batch, rejection, cap=cap, first_cycle=first_cycle))
    fit = logical_decay_fit([p.n for p in points], [p.mean for p in points],
                            [p.stderr for p in points], device.timing.cycle_ns * 1e-3)
    return points, fit
