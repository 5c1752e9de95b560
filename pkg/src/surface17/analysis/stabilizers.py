"""Stabilizer-measurement error over all computational (or X) basis inputs."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..circuit import Circuit, _Builder, reference_run, run_frames
from ..code import STABILIZER_ORDER, Surface17, build_surface17
from ..noise import DeviceParams
from ..seeding import derive_rng


def stabilizer_error(means, ideals) -> float:
    """eps = (1 / 2^N) sum_n |s_n - s_ideal,n| / 2 over the 2^N inputs."""
    m = np.asarray(means, float)
    s = np.asarray(ideals, float)
    if m.shape != s.shape or len(m) not in (4, 16):
        raise ValueError("need 2^N means and ideal values with N in {2, 4}")
    return float(np.mean(0.5 * np.abs(m - s)))


def stabilizer_circuit(device: DeviceParams, aux: str, bits, code: Surface17 | None = None) -> Circuit:
    """Single isolated stabilizer measurement on a basis input.

    ``bits`` picks |0>/|1> per support qubit (Z type) or |+>/|-> (X type).
    Timing follows the QEC cycle: the aux only acts in its own CZ steps,
    with the data echo between the second and third step.
    """
    code = code or build_surface17()
    stab = code.stabilizer(aux)
    data = list(stab.support)
    if len(bits) != len(data):
        raise ValueError(f"{aux} needs {len(data)} input bits")
    tm = device.timing
    b = _Builder(device)
    b.reset(data + [aux])
    flipped = [q for q, bit in zip(data, bits) if bit]
    if flipped:
        b.gate1("X", flipped, 0.0)
    t = tm.gate_1q_ns
    if stab.basis == "X":
        b.gate1("SQRT_Y", data, t)
        t += tm.gate_1q_ns
    turn = [aux] + (data if stab.basis == "X" else [])
    b.gate1("H", turn, t)
    t += tm.gate_1q_ns
    lo, hi = code.schedule.half_range(aux)
    for k in range(lo, hi):
        if k - lo == 2:
            b.gate1("", data, t)
            t += tm.gate_1q_ns
        pairs = [(a, d) for a, d in code.schedule.steps[k] if a == aux]
        if pairs:
            b.cz(pairs, t)
        t += tm.cz_ns
    b.gate1("H", turn, t)
    t += tm.gate_1q_ns
    b.measure([aux], t, tm.aux_readout_ns, [("aux", aux)])
    return Circuit(b.ops, b.meas)


@dataclass
class StabilizerResult:
    aux: str
    inputs: list            # bit tuples
    means: np.ndarray
    ideals: np.ndarray
    epsilon: float

    @property
    def weight(self) -> int:
        return len(self.inputs[0])


def run_stabilizer(device: DeviceParams, aux: str, shots: int = 4000, seed: int = 0) -> StabilizerResult:
    code = build_surface17()
    w = code.stabilizer(aux).weight
    inputs = list(itertools.product((0, 1), repeat=w))
    means, ideals = [], []
    for bits in inputs:
        circ = stabilizer_circuit(device, aux, bits, code)
        ref, _ = reference_run(circ)
        run = run_frames(circ, shots, derive_rng(seed, "stabilizer", aux, *bits))
        out = ref[:, None] ^ run.flips
        means.append(float(np.mean(1 - 2 * out[0].astype(int))))
        ideals.append(-1.0 if sum(bits) % 2 else 1.0)
    means, ideals = np.array(means), np.array(ideals)
    return StabilizerResult(aux, inputs, means, ideals, stabilizer_error(means, ideals))


def stabilizer_survey(device: DeviceParams, shots: int = 4000, seed: int = 0) -> dict:
    """Error of all eight stabilizers plus weight-two and weight-four averages."""
    results = {a: run_stabilizer(device, a, shots, seed) for a in STABILIZER_ORDER}
    two = [r.epsilon for r in results.values() if r.weight == 2]
    four = [r.epsilon for r in results.values() if r.weight == 4]
    return {"results": results, "weight_two_mean": float(np.mean(two)),
            "weight_four_mean": float(np.mean(four))}
