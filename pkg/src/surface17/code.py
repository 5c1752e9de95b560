"""Surface-17 layout, stabilizers, logical operators and the CZ schedule.

Qubits are named ``D1``..``D9`` (data, row-major on a 3x3 grid),
``X1``..``X4`` and ``Z1``..``Z4`` (auxiliaries).  Global qubit indices
follow that order: data 0..8, X-type auxiliaries 9..12, Z-type 13..16.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .pauli import PauliString

DATA = tuple(f"D{j}" for j in range(1, 10))
X_AUX = tuple(f"X{j}" for j in range(1, 5))
Z_AUX = tuple(f"Z{j}" for j in range(1, 5))
QUBITS = DATA + X_AUX + Z_AUX
QUBIT_INDEX = {q: i for i, q in enumerate(QUBITS)}

# column order used for stabilizer values everywhere (s arrays, syndromes)
STABILIZER_ORDER = Z_AUX + X_AUX

_SUPPORTS = {
    "Z1": ("D1", "D4"),
    "Z2": ("D4", "D5", "D7", "D8"),
    "Z3": ("D2", "D3", "D5", "D6"),
    "Z4": ("D6", "D9"),
    "X1": ("D2", "D3"),
    "X2": ("D1", "D2", "D4", "D5"),
    "X3": ("D5", "D6", "D8", "D9"),
    "X4": ("D7", "D8"),
}

# (aux, data) pairs per CZ time step; steps 1-4 Z-type, 5-8 X-type.
_DEFAULT_STEPS = (
    (("Z2", "D8"), ("Z3", "D2"), ("Z4", "D6")),
    (("Z2", "D5"), ("Z3", "D6"), ("Z4", "D9")),
    (("Z2", "D4"), ("Z3", "D5"), ("Z1", "D1")),
    (("Z2", "D7"), ("Z3", "D3"), ("Z1", "D4")),
    (("X2", "D5"), ("X3", "D6"), ("X4", "D7")),
    (("X2", "D4"), ("X3", "D5"), ("X4", "D8")),
    (("X2", "D2"), ("X3", "D9"), ("X1", "D3")),
    (("X2", "D1"), ("X3", "D8"), ("X1", "D2")),
)


def qubit_index(name: str) -> int:
    try:
        return QUBIT_INDEX[name]
    except KeyError:
        raise ValueError(f"unknown qubit {name!r}") from None


def data_position(name: str) -> tuple[int, int]:
    """(row, column) of a data qubit on the 3x3 grid."""
    if name not in DATA:
        raise ValueError(f"{name!r} is not a data qubit")
    return divmod(int(name[1:]) - 1, 3)


def is_aux(name: str) -> bool:
    return name in X_AUX or name in Z_AUX


def aux_basis(name: str) -> str:
    if not is_aux(name):
        raise ValueError(f"{name!r} is not an auxiliary qubit")
    return name[0]


@dataclass(frozen=True)
class StabilizerSpec:
    auxiliary: str
    basis: str
    support: tuple[str, ...]

    @property
    def weight(self) -> int:
        return len(self.support)

    def pauli(self) -> PauliString:
        return data_pauli({q: self.basis for q in self.support})


@dataclass(frozen=True)
class LogicalOperator:
    basis: str
    support: tuple[str, ...]

    def pauli(self) -> PauliString:
        return data_pauli({q: self.basis for q in self.support})


def data_pauli(ops: dict[str, str]) -> PauliString:
    """Hermitian 9-qubit Pauli string from ``{"D1": "X", ...}``."""
    chars = ["I"] * 9
    for q, p in ops.items():
        chars[DATA.index(q)] = p
    return PauliString.from_label("".join(chars))


@dataclass(frozen=True)
class GateSchedule:
    """Eight CZ time steps, each a tuple of (aux, data) pairs."""

    steps: tuple[tuple[tuple[str, str], ...], ...]

    def gates_for(self, aux: str) -> list[tuple[int, str]]:
        """Ordered (step, data) list for one auxiliary; steps are 1-based."""
        return [(k, d) for k, step in enumerate(self.steps, start=1)
                for a, d in step if a == aux]

    def half_range(self, aux: str) -> tuple[int, int]:
        """First and last valid injection index for an auxiliary.

        Index k means "after CZ step k"; k = 0 (Z) or 4 (X) is before the
        first gate of that half cycle.
        """
        return (0, 4) if aux_basis(aux) == "Z" else (4, 8)

    def midpoint(self, aux: str) -> int:
        """Step after which half of the auxiliary's gates have been applied."""
        gates = self.gates_for(aux)
        return gates[len(gates) // 2 - 1][0]

    def to_text(self) -> str:
        lines = []
        for k, step in enumerate(self.steps, start=1):
            lines.append(f"{k}: " + " ".join(f"{a}-{d}" for a, d in step))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "GateSchedule":
        rows: dict[int, tuple] = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            head, _, body = line.partition(":")
            try:
                k = int(head)
            except ValueError:
                raise ValueError(f"bad schedule line {raw!r}") from None
            pairs = []
            for tok in body.replace(",", " ").split():
                a, _, d = tok.partition("-")
                if not d:
                    raise ValueError(f"bad gate token {tok!r}")
                pairs.append((a.strip(), d.strip()))
            rows[k] = tuple(pairs)
        if sorted(rows) != list(range(1, 9)):
            raise ValueError("schedule must list steps 1..8 exactly once")
        return cls(tuple(rows[k] for k in range(1, 9)))


@dataclass(frozen=True)
class Surface17:
    stabilizers: tuple[StabilizerSpec, ...]
    logicals: tuple[LogicalOperator, ...]
    schedule: GateSchedule
    layout: dict = field(default_factory=dict)

    def stabilizer(self, aux: str) -> StabilizerSpec:
        for s in self.stabilizers:
            if s.auxiliary == aux:
                return s
        raise KeyError(aux)

    def logical(self, basis: str) -> LogicalOperator:
        for lg in self.logicals:
            if lg.basis == basis:
                return lg
        raise KeyError(basis)

    def stabilizers_of(self, basis: str) -> list[StabilizerSpec]:
        return [s for s in self.stabilizers if s.basis == basis]


def default_schedule() -> GateSchedule:
    return GateSchedule(_DEFAULT_STEPS)


def build_surface17(schedule: GateSchedule | None = None) -> Surface17:
    stabs = tuple(StabilizerSpec(a, a[0], _SUPPORTS[a]) for a in STABILIZER_ORDER)
    logicals = (LogicalOperator("Z", ("D1", "D2", "D3")),
                LogicalOperator("X", ("D1", "D4", "D7")))
    layout = {q: data_position(q) for q in DATA}
    return Surface17(stabs, logicals, schedule or default_schedule(), layout)


def propagate_auxiliary_error(schedule: GateSchedule, aux: str, step: int,
                              error: str) -> PauliString:
    """Data-qubit error produced by a Pauli on ``aux`` right after CZ ``step``.

    An X (or Y) component on the auxiliary is copied onto every data qubit it
    still has to interact with.  Z-type plaquettes copy it as Z; X-type ones
    as X, because the data qubits are rotated around those CZs.
    """
    lo, hi = schedule.half_range(aux)
    if not lo <= step <= hi:
        raise ValueError(f"step {step} outside the half cycle of {aux}")
    error = error.upper()
    if error not in ("I", "X", "Y", "Z"):
        raise ValueError(f"not a single-qubit Pauli: {error!r}")
    if error in ("I", "Z"):
        return PauliString.identity(9)
    basis = aux_basis(aux)
    tail = [d for k, d in schedule.gates_for(aux) if k > step]
    return data_pauli({d: basis for d in tail})


def _check_well_formed(schedule: GateSchedule) -> None:
    if len(schedule.steps) != 8:
        raise ValueError("schedule needs exactly 8 steps")
    seen = set()
    for k, step in enumerate(schedule.steps, start=1):
        if len(step) > 3:
            raise ValueError(f"step {k} has more than 3 gates")
        used = [q for pair in step for q in pair]
        if len(used) != len(set(used)):
            raise ValueError(f"step {k} reuses a qubit")
        for a, d in step:
            if a not in _SUPPORTS or d not in _SUPPORTS[a]:
                raise ValueError(f"step {k}: {a}-{d} is not a stabilizer gate")
            if (aux_basis(a) == "Z") != (k <= 4):
                raise ValueError(f"step {k}: {a} gate in the wrong half cycle")
            if (a, d) in seen:
                raise ValueError(f"gate {a}-{d} appears twice")
            seen.add((a, d))
    missing = {(a, d) for a, sup in _SUPPORTS.items() for d in sup} - seen
    if missing:
        raise ValueError(f"missing gates: {sorted(missing)}")


def validate_schedule(schedule: GateSchedule) -> list[str]:
    """Hook-error violations of a schedule (empty list when safe).

    A mid-plaquette auxiliary flip spreads to the last two data qubits of a
    weight-four stabilizer.  That pair must not lie along the logical
    operator it could extend: same row for Z-type, same column for X-type.
    Malformed schedules raise ``ValueError``.
    """
    _check_well_formed(schedule)
    violations = []
    for aux in Z_AUX + X_AUX:
        gates = schedule.gates_for(aux)
        if len(gates) < 4:
            continue
        tail = [d for _, d in gates[2:]]
        (r0, c0), (r1, c1) = (data_position(d) for d in tail)
        aligned = r0 == r1 if aux_basis(aux) == "Z" else c0 == c1
        if aligned:
            violations.append(
                f"{aux}: hook error on {tail[0]},{tail[1]} is aligned with the "
                f"{'row' if aux_basis(aux) == 'Z' else 'column'} logical string")
    return violations


def stabilizer_matrix(code: Surface17, basis: str | None = None) -> np.ndarray:
    """0/1 incidence matrix (stabilizers x 9 data qubits)."""
    stabs = code.stabilizers if basis is None else code.stabilizers_of(basis)
    m = np.zeros((len(stabs), 9), dtype=np.uint8)
    for i, s in enumerate(stabs):
        for q in s.support:
            m[i, DATA.index(q)] = 1
    return m


def all_supports() -> Iterable[tuple[str, Sequence[str]]]:
    return _SUPPORTS.items()
