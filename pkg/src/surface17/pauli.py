"""Pauli strings with exact phase tracking.

Internally a string is ``i**phase * X^x Z^z`` (X part to the left), so
``Y = i X Z`` carries one unit of phase per Y.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_PHASE_PREFIX = {"": 0, "+": 0, "i": 1, "+i": 1, "-": 2, "-i": 3}
_PHASE_TEXT = {0: "+", 1: "+i", 2: "-", 3: "-i"}


@dataclass(frozen=True, eq=False)
class PauliString:
    x: np.ndarray
    z: np.ndarray
    phase: int = 0

    def __post_init__(self):
        x = np.asarray(self.x, dtype=bool).copy()
        z = np.asarray(self.z, dtype=bool).copy()
        if x.shape != z.shape or x.ndim != 1:
            raise ValueError("x and z masks must be 1-D of equal length")
        x.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "phase", int(self.phase) % 4)

    @property
    def n(self) -> int:
        return len(self.x)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(np.zeros(n, bool), np.zeros(n, bool))

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse labels like ``"XIZ"``, ``"-YY"`` or ``"+iXZ"``."""
        body = label.lstrip("+-i")
        prefix = label[: len(label) - len(body)]
        if prefix not in _PHASE_PREFIX:
            raise ValueError(f"bad phase prefix in {label!r}")
        x = np.array([c in "XY" for c in body], bool)
        z = np.array([c in "ZY" for c in body], bool)
        if any(c not in "IXYZ" for c in body):
            raise ValueError(f"bad Pauli label {label!r}")
        return cls(x, z, _PHASE_PREFIX[prefix] + int(np.sum(x & z)))

    @classmethod
    def single(cls, n: int, qubit: int, op: str) -> "PauliString":
        if not 0 <= qubit < n:
            raise ValueError(f"qubit {qubit} out of range for n={n}")
        chars = ["I"] * n
        chars[qubit] = op
        return cls.from_label("".join(chars))

    def label(self) -> str:
        """Label with an explicit phase prefix, e.g. ``"-iXY"``."""
        ops = np.array(["I", "X", "Z", "Y"])[self.x.astype(int) + 2 * self.z.astype(int)]
        p = (self.phase - int(np.sum(self.x & self.z))) % 4
        return _PHASE_TEXT[p] + "".join(ops)

    def __repr__(self) -> str:
        return f"PauliString({self.label()!r})"

    def __mul__(self, other: "PauliString") -> "PauliString":
        if self.n != other.n:
            raise ValueError("size mismatch")
        # Z^z1 X^x2 = (-1)^{z1.x2} X^x2 Z^z1
        flips = int(np.sum(self.z & other.x))
        return PauliString(self.x ^ other.x, self.z ^ other.z,
                           self.phase + other.phase + 2 * flips)

    def __neg__(self) -> "PauliString":
        return PauliString(self.x, self.z, self.phase + 2)

    def __eq__(self, other) -> bool:
        return (isinstance(other, PauliString) and self.n == other.n
                and bool(np.all(self.x == other.x)) and bool(np.all(self.z == other.z))
                and self.phase == other.phase)

    def __hash__(self):
        return hash((self.x.tobytes(), self.z.tobytes(), self.phase))

    def commutes(self, other: "PauliString") -> bool:
        return int(np.sum(self.x & other.z) + np.sum(self.z & other.x)) % 2 == 0

    @property
    def weight(self) -> int:
        return int(np.sum(self.x | self.z))

    def is_hermitian(self) -> bool:
        return (self.phase - int(np.sum(self.x & self.z))) % 2 == 0

    @property
    def sign(self) -> int:
        """+1 or -1 for Hermitian strings."""
        p = (self.phase - int(np.sum(self.x & self.z))) % 4
        if p % 2:
            raise ValueError("sign is only defined for Hermitian strings")
        return 1 if p == 0 else -1

    def unsigned(self) -> "PauliString":
        """Same operator with sign +1 (Hermitian form)."""
        return PauliString(self.x, self.z, int(np.sum(self.x & self.z)))

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.x | self.z)


def symplectic_anticommute(ax: np.ndarray, az: np.ndarray,
                           bx: np.ndarray, bz: np.ndarray) -> np.ndarray:
    """Pairwise anticommutation (0/1) between rows of two Pauli sets."""
    ax = np.asarray(ax, np.int64)
    az = np.asarray(az, np.int64)
    bx = np.asarray(bx, np.int64)
    bz = np.asarray(bz, np.int64)
    return ((ax @ bz.T + az @ bx.T) % 2).astype(np.uint8)
