"""Vectorized Pauli-frame sampler and a common Clifford dispatch.

Frames are stored qubit-major, ``x[q, shot]``, so per-qubit gate updates
touch contiguous memory.  Signs are irrelevant for frames: they only record
which Pauli error sits on top of the noiseless reference run.
"""

from __future__ import annotations

import numpy as np

from .pauli import PauliString
from .tableau import Tableau

GATES_1Q = ("H", "S", "S_DAG", "X", "Y", "Z", "SQRT_Y", "SQRT_Y_DAG")
GATES_2Q = ("CZ", "CX")

# 2-qubit Pauli index 4*a + b with single-qubit codes I=0, X=1, Y=2, Z=3
_PX = np.array([0, 1, 1, 0], dtype=bool)
_PZ = np.array([0, 0, 1, 1], dtype=bool)


class PauliFrames:
    """Error frames for a batch of shots."""

    def __init__(self, n_qubits: int, shots: int, rng: np.random.Generator | None = None,
                 randomize: bool = True):
        self.n = n_qubits
        self.shots = shots
        self.rng = rng if rng is not None else np.random.default_rng()
        self.randomize = randomize
        self.x = np.zeros((n_qubits, shots), dtype=bool)
        self.z = np.zeros((n_qubits, shots), dtype=bool)

    def _check(self, *qs):
        for q in qs:
            if not 0 <= q < self.n:
                raise ValueError(f"qubit {q} out of range for n={self.n}")

    def h(self, q):
        self._check(q)
        self.x[q], self.z[q] = self.z[q].copy(), self.x[q].copy()

    sqrt_y = h
    sqrt_y_dag = h

    def s(self, q):
        self._check(q)
        self.z[q] ^= self.x[q]

    s_dag = s

    def cz(self, a, b):
        self._check(a, b)
        self.z[a] ^= self.x[b]
        self.z[b] ^= self.x[a]

    def cx(self, a, b):
        self._check(a, b)
        self.x[b] ^= self.x[a]
        self.z[a] ^= self.z[b]

    def _gauge(self, q):
        # a Z frame on a Z eigenstate is harmless; randomizing it makes the
        # sampled outcomes of later random measurements uniformly random
        if self.randomize:
            self.z[q] = self.rng.random(self.shots) < 0.5
        else:
            self.z[q] = False

    def reset(self, q):
        self._check(q)
        self.x[q] = False
        self._gauge(q)

    def measure(self, q, flip_prob: float = 0.0) -> np.ndarray:
        """Outcome flips relative to the reference for a Z measurement."""
        self._check(q)
        flips = self.x[q].copy()
        if flip_prob > 0:
            flips ^= self.rng.random(self.shots) < flip_prob
        self._gauge(q)
        return flips

    def pauli_channel_1(self, qubits, probs: np.ndarray) -> None:
        """Apply independent 1-qubit Pauli channels; ``probs[k] = (pX, pY, pZ)``."""
        probs = np.asarray(probs, float).reshape(len(qubits), 3)
        u = self.rng.random((len(qubits), self.shots))
        for k, q in enumerate(qubits):
            px, py, pz = probs[k]
            if px + py + pz <= 0:
                continue
            uk = u[k]
            self.x[q] ^= uk < px + py
            self.z[q] ^= (uk >= px) & (uk < px + py + pz)

    def pauli_channel_2(self, pairs, probs: np.ndarray) -> None:
        """Apply 2-qubit Pauli channels; ``probs[k]`` has 16 entries, index 4a+b."""
        probs = np.asarray(probs, float).reshape(len(pairs), 16)
        u = self.rng.random((len(pairs), self.shots))
        for k, (a, b) in enumerate(pairs):
            perr = 1.0 - probs[k, 0]
            if perr <= 0:
                continue
            hit = np.flatnonzero(u[k] < perr)
            if len(hit) == 0:
                continue
            cum = np.cumsum(probs[k, 1:])
            idx = 1 + np.minimum(np.searchsorted(cum, u[k, hit], side="right"), 14)
            pa, pb = idx // 4, idx % 4
            self.x[a, hit] ^= _PX[pa]
            self.z[a, hit] ^= _PZ[pa]
            self.x[b, hit] ^= _PX[pb]
            self.z[b, hit] ^= _PZ[pb]

    def inject(self, shots, q: int, op: str) -> None:
        """XOR a single-qubit Pauli into the frames of the selected shots."""
        code = "IXYZ".index(op)
        self.x[q, shots] ^= _PX[code]
        self.z[q, shots] ^= _PZ[code]

    def frame(self, shot: int) -> PauliString:
        return PauliString(self.x[:, shot], self.z[:, shot])


def apply_clifford(state, gate: str, targets):
    """Apply a named Clifford gate to a ``Tableau`` or ``PauliFrames``."""
    targets = tuple(int(t) for t in np.atleast_1d(targets))
    g = gate.upper()
    if g in GATES_2Q:
        if len(targets) != 2:
            raise ValueError(f"{gate} needs two targets")
    elif g in GATES_1Q:
        if len(targets) != 1:
            raise ValueError(f"{gate} needs one target")
    else:
        raise ValueError(f"unknown gate {gate!r}")
    if isinstance(state, Tableau):
        table = {"H": state.h, "S": state.s, "S_DAG": state.s_dag, "X": state.px,
                 "Y": state.py, "Z": state.pz, "SQRT_Y": state.sqrt_y,
                 "SQRT_Y_DAG": state.sqrt_y_dag, "CZ": state.cz, "CX": state.cx}
    elif isinstance(state, PauliFrames):
        noop = lambda q: state._check(q)  # noqa: E731
        table = {"H": state.h, "S": state.s, "S_DAG": state.s_dag, "X": noop,
                 "Y": noop, "Z": noop, "SQRT_Y": state.sqrt_y,
                 "SQRT_Y_DAG": state.sqrt_y_dag, "CZ": state.cz, "CX": state.cx}
    else:
        raise TypeError(f"cannot apply gates to {type(state).__name__}")
    table[g](*targets)
    return state
