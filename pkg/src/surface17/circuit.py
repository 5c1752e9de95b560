"""Timed Clifford circuits with inline noise, and their two executors.

A circuit is a flat list of ``Op``.  Noise ops (``N1``/``N2``) and the flip
probabilities of ``M`` ops double as the list of fault locations used by
exhaustive single-fault checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .code import DATA, QUBIT_INDEX, X_AUX, Z_AUX, Surface17, build_surface17
from .frames import PauliFrames, apply_clifford
from .noise import DeviceParams, PauliChannel
from .tableau import Tableau

N_QUBITS = 17


@dataclass
class Op:
    kind: str                 # R, G, N1, N2, M, TICK
    targets: tuple = ()
    gate: str = ""
    probs: np.ndarray | None = None
    tags: tuple = ()


@dataclass
class Circuit:
    ops: list = field(default_factory=list)
    measurements: list = field(default_factory=list)  # tag per recorded bit

    def index_of(self, tag) -> int:
        return self.measurements.index(tag)

    def measurement_indices(self, predicate) -> np.ndarray:
        return np.array([i for i, t in enumerate(self.measurements) if predicate(t)], int)


class _Builder:
    """Emits ops while tracking when each qubit was last busy."""

    def __init__(self, device: DeviceParams):
        self.device = device
        self.ops: list[Op] = []
        self.meas: list = []
        self.free = {q: 0.0 for q in QUBIT_INDEX}
        self.data_echo = True

    def _n1(self, names, channels):
        keep = [(n, c) for n, c in zip(names, channels) if c.probs[0] < 1.0]
        if keep:
            self.ops.append(Op("N1", tuple(QUBIT_INDEX[n] for n, _ in keep),
                               probs=np.array([c.error_probs for _, c in keep])))

    def idle_until(self, names, t):
        chans, who = [], []
        for n in names:
            dt = t - self.free[n]
            if dt < -1e-9:
                raise RuntimeError(f"{n} scheduled at {t} while busy until {self.free[n]}")
            if dt > 1e-9:
                echo = self.data_echo and n in DATA
                chans.append(self.device.idle(n, dt, echo=echo))
                who.append(n)
            self.free[n] = max(self.free[n], t)
        self._n1(who, chans)

    def gate1(self, gate, names, t, noisy=True):
        self.idle_until(names, t)
        if gate:
            for n in names:
                self.ops.append(Op("G", (QUBIT_INDEX[n],), gate=gate))
        if noisy:
            self._n1(names, [self.device.single_qubit_gate(n) for n in names])
            for n in names:
                self.free[n] = t + self.device.timing.gate_1q_ns

    def cz(self, pairs, t):
        names = [q for p in pairs for q in p]
        self.idle_until(names, t)
        probs = []
        for a, d in pairs:
            self.ops.append(Op("G", (QUBIT_INDEX[a], QUBIT_INDEX[d]), gate="CZ"))
            probs.append(self.device.cz_gate(a, d).probs)
        self.ops.append(Op("N2", tuple((QUBIT_INDEX[a], QUBIT_INDEX[d]) for a, d in pairs),
                           probs=np.array(probs)))
        for n in names:
            self.free[n] = t + self.device.timing.cz_ns

    def measure(self, names, t, duration, tags):
        self.idle_until(names, t)
        self._n1(names, [self.device.idle(n, duration) for n in names])
        flips = np.array([self.device.qubit(n).eps_ro2 for n in names])
        self.ops.append(Op("M", tuple(QUBIT_INDEX[n] for n in names), probs=flips,
                           tags=tuple(tags)))
        self.meas.extend(tags)
        for n in names:
            self.free[n] = t + duration

    def reset(self, names):
        self.ops.append(Op("R", tuple(QUBIT_INDEX[n] for n in names)))

    def tick(self, label):
        self.ops.append(Op("TICK", tags=(label,)))


def _herald(b: _Builder, names):
    b.reset(names)
    p_th = [b.device.qubit(n).p_th for n in names]
    b._n1(names, [PauliChannel(np.array([1 - p, p, 0.0, 0.0])) for p in p_th])
    flips = np.array([b.device.qubit(n).eps_ro2 for n in names])
    b.ops.append(Op("M", tuple(QUBIT_INDEX[n] for n in names), probs=flips,
                    tags=tuple(("herald", n) for n in names)))
    b.meas.extend(("herald", n) for n in names)


def _cycle(b: _Builder, code: Surface17, t0: float, m: int):
    tm = b.device.timing
    steps = code.schedule.steps
    t = t0
    b.tick(("cycle", m))
    # Z half: basis change, 2 CZ steps, data echo, 2 CZ steps, basis change
    b.gate1("H", Z_AUX, t)
    t += tm.gate_1q_ns
    for k in range(4):
        if k == 2:
            b.gate1("", DATA, t)  # echo pulse: Pauli, only its noise matters
            t += tm.gate_1q_ns
        b.cz(steps[k], t)
        t += tm.cz_ns
    b.gate1("H", Z_AUX, t)
    t += tm.gate_1q_ns
    b.measure(Z_AUX, t, tm.aux_readout_ns, [("aux", m, a) for a in Z_AUX])
    # X half
    b.gate1("H", X_AUX + DATA, t)
    t += tm.gate_1q_ns
    for k in range(4, 8):
        if k == 6:
            b.gate1("", DATA, t)
            t += tm.gate_1q_ns
        b.cz(steps[k], t)
        t += tm.cz_ns
    b.gate1("H", X_AUX + DATA, t)
    t += tm.gate_1q_ns
    b.measure(X_AUX, t, tm.aux_readout_ns, [("aux", m, a) for a in X_AUX])
    return t


STATES = ("0L", "1L", "+L", "-L")


def state_basis(state: str) -> str:
    if state not in STATES:
        raise ValueError(f"unknown initial state {state!r}; expected one of {STATES}")
    return "Z" if state in ("0L", "1L") else "X"


_BASIS_CHANGE = {"Z": (), "X": ("H",), "Y": ("S_DAG", "H")}


def memory_circuit(device: DeviceParams, state: str, n_cycles: int,
                   code: Surface17 | None = None,
                   readout_bases: str | None = None) -> Circuit:
    """Heralded init, product-state prep, ``n_cycles`` QEC cycles, final readout.

    ``readout_bases`` (e.g. ``"XXZYZZZZZ"``) overrides the final per-data
    measurement basis, which otherwise is the basis of ``state``.
    """
    if n_cycles < 1:
        raise ValueError("n_cycles must be >= 1")
    basis = state_basis(state)
    code = code or build_surface17()
    b = _Builder(device)
    tm = device.timing
    all_q = DATA + X_AUX + Z_AUX
    _herald(b, all_q)
    # product-state preparation
    if state == "1L":
        b.gate1("X", code.logical("X").support, 0.0)
    elif basis == "X":
        b.gate1("SQRT_Y", DATA, 0.0)
        if state == "-L":
            for d in code.logical("Z").support:
                b.ops.append(Op("G", (QUBIT_INDEX[d],), gate="Z"))
    t = tm.gate_1q_ns
    for m in range(1, n_cycles + 1):
        _cycle(b, code, t, m)
        t += tm.cycle_ns
    t_end = max(b.free[d] for d in DATA)
    b.data_echo = False
    b.tick(("final",))
    t_ro = t_end + tm.final_latency_ns
    bases = readout_bases or basis * 9
    if len(bases) != 9 or any(c not in _BASIS_CHANGE for c in bases):
        raise ValueError(f"readout_bases must be 9 characters from XYZ, got {bases!r}")
    rotated = [d for d, c in zip(DATA, bases) if c != "Z"]
    if rotated:
        b.idle_until(DATA, t_ro)
        for d, c in zip(DATA, bases):
            for g in _BASIS_CHANGE[c]:
                b.ops.append(Op("G", (QUBIT_INDEX[d],), gate=g))
        b._n1(rotated, [device.single_qubit_gate(d) for d in rotated])
        for d in DATA:
            b.free[d] = t_ro + tm.gate_1q_ns
        t_ro += tm.gate_1q_ns
    b.measure(DATA, t_ro, tm.data_readout_ns, [("final", d) for d in DATA])
    return Circuit(b.ops, b.meas)


# ---------------------------------------------------------------------------
# executors


def reference_run(circuit: Circuit) -> tuple[np.ndarray, np.ndarray]:
    """Noiseless tableau run; random outcomes are fixed to +1.

    Returns (bits, was_random) per recorded measurement, bit 1 meaning -1.
    """
    tab = Tableau(N_QUBITS)
    bits, rand = [], []
    for op in circuit.ops:
        if op.kind == "G":
            apply_clifford(tab, op.gate, op.targets)
        elif op.kind == "R":
            for q in op.targets:
                tab.reset(q)
        elif op.kind == "M":
            for q in op.targets:
                out, was_random = tab.measure_z(q, forced=+1)
                bits.append(out == -1)
                rand.append(was_random)
    return np.array(bits, bool), np.array(rand, bool)


def reference_tableau(circuit: Circuit, stop_at_tag=None, forced: dict | None = None) -> Tableau:
    """Noiseless tableau state after the circuit (or right after ``stop_at_tag``).

    ``forced`` maps measurement tags to the outcome to postselect on.
    """
    tab = Tableau(N_QUBITS)
    forced = forced or {}
    for op in circuit.ops:
        if op.kind == "G":
            apply_clifford(tab, op.gate, op.targets)
        elif op.kind == "R":
            for q in op.targets:
                tab.reset(q)
        elif op.kind == "M":
            for q, tag in zip(op.targets, op.tags):
                tab.measure_z(q, forced=forced.get(tag, +1))
                if tag == stop_at_tag:
                    return tab
    return tab


@dataclass
class FrameRun:
    flips: np.ndarray      # (n_meas, shots) outcome flips including readout error
    true_flips: np.ndarray  # same without readout misclassification


def run_frames(circuit: Circuit, shots: int, rng: np.random.Generator, noise: bool = True,
               injections: dict | None = None, on_tick=None,
               randomize: bool = True) -> FrameRun:
    """Sample Pauli frames for ``shots`` shots.

    ``injections`` maps op index to a list of ``(shot_idx, position, pauli)``;
    the Pauli is XORed onto the op's ``position``-th target after the op
    (``pauli`` is "X"/"Y"/"Z"; for N2 ops a 2-char string; for M ops "M"
    flips the recorded outcome).
    """
    fr = PauliFrames(N_QUBITS, shots, rng, randomize=randomize)
    n_meas = len(circuit.measurements)
    flips = np.zeros((n_meas, shots), bool)
    true_flips = np.zeros((n_meas, shots), bool)
    injections = injections or {}
    k = 0
    for i, op in enumerate(circuit.ops):
        kind = op.kind
        if kind == "G":
            apply_clifford(fr, op.gate, op.targets)
        elif kind == "N1":
            if noise:
                fr.pauli_channel_1(op.targets, op.probs)
        elif kind == "N2":
            if noise:
                fr.pauli_channel_2(op.targets, op.probs)
        elif kind == "R":
            for q in op.targets:
                fr.reset(q)
        elif kind == "M":
            for j, q in enumerate(op.targets):
                f = fr.measure(q)
                true_flips[k + j] = f
                if noise and op.probs[j] > 0:
                    f = f ^ (rng.random(shots) < op.probs[j])
                flips[k + j] = f
        elif kind == "TICK" and on_tick is not None:
            on_tick(fr, op.tags[0])
        for shot_idx, pos, pauli in injections.get(i, ()):
            if kind == "M":
                flips[k + pos, shot_idx] ^= True
            elif kind == "N2":
                a, b = op.targets[pos]
                fr.inject(shot_idx, a, pauli[0])
                fr.inject(shot_idx, b, pauli[1])
            else:
                fr.inject(shot_idx, op.targets[pos], pauli)
        if kind == "M":
            k += len(op.targets)
    return FrameRun(flips, true_flips)


def fault_locations(circuit: Circuit) -> list[tuple[int, int, str]]:
    """Every single fault: (op index, target position, Pauli or "M")."""
    out = []
    for i, op in enumerate(circuit.ops):
        if op.kind == "N1":
            out += [(i, p, s) for p in range(len(op.targets)) for s in "XYZ"]
        elif op.kind == "N2":
            labels = [a + b for a in "IXYZ" for b in "IXYZ"][1:]
            out += [(i, p, s) for p in range(len(op.targets)) for s in labels]
        elif op.kind == "M":
            out += [(i, p, "M") for p in range(len(op.targets))]
    return out
