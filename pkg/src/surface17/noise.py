"""Device parameters and the stochastic Pauli noise derived from them."""

from __future__ import annotations

import dataclasses
import itertools
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .code import DATA, STABILIZER_ORDER, all_supports

SCHEMA_VERSION = 1
CZ_NOISE_MODELS = ("coherence", "calibrated")

# symplectic (x, z) bits of I, X, Y, Z
_X = (0, 1, 1, 0)
_Z = (0, 0, 1, 1)
_FROM_XZ = {(0, 0): 0, (1, 0): 1, (1, 1): 2, (0, 1): 3}


def _mul_code(a: int, b: int) -> int:
    return _FROM_XZ[(_X[a] ^ _X[b], _Z[a] ^ _Z[b])]


@dataclass(frozen=True)
class PauliChannel:
    """Stochastic Pauli channel on 1 or 2 qubits.

    ``probs`` has 4 entries (I, X, Y, Z) or 16 entries indexed ``4*a + b``.
    """

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.shape not in ((4,), (16,)):
            raise ValueError("a Pauli channel has 4 or 16 probabilities")
        if np.any(p < -1e-15) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"invalid Pauli probabilities {p}")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def arity(self) -> int:
        return 1 if len(self.probs) == 4 else 2

    @property
    def error_probs(self) -> np.ndarray:
        return np.asarray(self.probs[1:])

    def compose(self, other: "PauliChannel") -> "PauliChannel":
        """Channel for applying ``self`` then ``other`` (order is irrelevant)."""
        if self.arity != other.arity:
            raise ValueError("arity mismatch")
        out = np.zeros_like(self.probs)
        if self.arity == 1:
            for a, b in itertools.product(range(4), repeat=2):
                out[_mul_code(a, b)] += self.probs[a] * other.probs[b]
        else:
            for i, j in itertools.product(range(16), repeat=2):
                k = 4 * _mul_code(i // 4, j // 4) + _mul_code(i % 4, j % 4)
                out[k] += self.probs[i] * other.probs[j]
        return PauliChannel(out / out.sum())

    def tensor(self, other: "PauliChannel") -> "PauliChannel":
        if self.arity != 1 or other.arity != 1:
            raise ValueError("tensor product of single-qubit channels only")
        return PauliChannel(np.outer(self.probs, other.probs).ravel())

    def infidelity(self) -> float:
        """Average gate infidelity d(1 - p_I)/(d + 1)."""
        d = 2 ** self.arity
        return d * (1.0 - self.probs[0]) / (d + 1)

    @classmethod
    def identity(cls, arity: int = 1) -> "PauliChannel":
        p = np.zeros(4 ** arity)
        p[0] = 1.0
        return cls(p)


def idle_channel(t1_us: float, t2_us: float, dt_ns: float) -> PauliChannel:
    """Pauli twirl of amplitude damping plus pure dephasing for ``dt_ns``."""
    if t1_us <= 0 or t2_us <= 0:
        raise ValueError("coherence times must be positive")
    if dt_ns < 0:
        raise ValueError("idle time must be non-negative")
    dt = dt_ns * 1e-3
    lam_z = math.exp(-dt / t1_us)
    lam_xy = math.exp(-dt / t2_us)
    px = (1.0 - lam_z) / 4.0
    pz = max(0.0, (1.0 - lam_xy) / 2.0 - px)
    return PauliChannel(np.array([1.0 - 2 * px - pz, px, px, pz]))


def gate_channel(eps: float, arity: int) -> PauliChannel:
    """Uniform Pauli channel with average gate infidelity ``eps``."""
    if arity not in (1, 2):
        raise ValueError("arity must be 1 or 2")
    d = 2 ** arity
    if not 0.0 <= eps <= d / (d + 1):
        raise ValueError(f"gate error {eps} out of range for arity {arity}")
    mass = eps * (d + 1) / d
    p = np.full(d * d, mass / (d * d - 1))
    p[0] = 1.0 - mass
    return PauliChannel(p)


def sample_readout(outcome, eps_ro: float, rng: np.random.Generator):
    """Symmetric misclassification of +/-1 outcomes."""
    if not 0.0 <= eps_ro <= 0.5:
        raise ValueError("readout error must lie in [0, 0.5]")
    outcome = np.asarray(outcome)
    flip = rng.random(outcome.shape) < eps_ro
    return np.where(flip, -outcome, outcome)


@dataclass(frozen=True)
class QubitParams:
    t1_us: float
    t2s_us: float
    t2e_us: float
    eps_1q: float
    eps_ro2: float
    eps_ro3: float
    p_th: float


@dataclass(frozen=True)
class PairParams:
    eps_2q: float
    t2_int_aux_us: float | None = None
    t2_int_data_us: float | None = None


@dataclass(frozen=True)
class LeakageParams:
    """Per-cycle leakage rates and per-readout false-positive rates.

    ``joint_leak`` is a per-auxiliary, per-cycle event that leaks the
    auxiliary together with one of its data neighbours.
    """

    aux_leak: float = 0.0
    data_leak: float = 0.0
    joint_leak: float = 0.0
    aux_false_positive: float = 0.0
    data_false_positive: float = 0.0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{f.name}={v} is not a probability")

    def scaled(self, factor: float) -> "LeakageParams":
        return LeakageParams(*(getattr(self, f.name) / factor
                               for f in dataclasses.fields(self)))


@dataclass(frozen=True)
class Timing:
    cycle_ns: float = 1100.0
    gate_1q_ns: float = 40.0
    cz_ns: float = 98.0
    aux_readout_ns: float = 200.0
    data_readout_ns: float = 300.0
    final_latency_ns: float = 800.0
    t2_int_ratio: float = 3.2

    def __post_init__(self):
        for f in dataclasses.fields(self):
            if getattr(self, f.name) <= 0:
                raise ValueError(f"{f.name} must be positive")


@dataclass(frozen=True)
class DeviceParams:
    qubits: dict
    pairs: dict
    timing: Timing = field(default_factory=Timing)
    leakage: LeakageParams = field(default_factory=LeakageParams)
    # "coherence": CZ error is T1 plus the reduced interaction-frequency T2 only.
    # "calibrated": a depolarizing top-up brings each CZ up to its eps_2q.
    cz_noise: str = "coherence"

    def __post_init__(self):
        if self.cz_noise not in CZ_NOISE_MODELS:
            raise ValueError(f"unknown cz_noise {self.cz_noise!r}; use one of {CZ_NOISE_MODELS}")
        fixed = {}
        for name, q in self.qubits.items():
            for attr in ("eps_1q", "eps_ro2", "eps_ro3", "p_th"):
                v = getattr(q, attr)
                if not 0.0 <= v <= 1.0:
                    raise ValueError(f"{name}.{attr}={v} is not a probability")
            if min(q.t1_us, q.t2s_us, q.t2e_us) <= 0:
                raise ValueError(f"{name}: coherence times must be positive")
            t2s, t2e = q.t2s_us, q.t2e_us
            if t2s > 2 * q.t1_us or t2e > 2 * q.t1_us:
                warnings.warn(f"{name}: T2 exceeds 2*T1, clamping to {2 * q.t1_us:g} us",
                              stacklevel=3)
                t2s, t2e = min(t2s, 2 * q.t1_us), min(t2e, 2 * q.t1_us)
            fixed[name] = dataclasses.replace(q, t2s_us=t2s, t2e_us=t2e)
        object.__setattr__(self, "qubits", fixed)
        for key, p in self.pairs.items():
            if not 0.0 <= p.eps_2q <= 0.8:
                raise ValueError(f"pair {key}: eps_2q={p.eps_2q} out of range")

    def qubit(self, name: str) -> QubitParams:
        try:
            return self.qubits[name]
        except KeyError:
            raise ValueError(f"device has no parameters for {name}") from None

    def pair(self, aux: str, data: str) -> PairParams:
        try:
            return self.pairs[(aux, data)]
        except KeyError:
            raise ValueError(f"device has no CZ parameters for {aux}-{data}") from None

    def t2_int(self, aux: str, data: str) -> tuple[float, float]:
        p = self.pair(aux, data)
        r = self.timing.t2_int_ratio
        ta = p.t2_int_aux_us or self.qubit(aux).t2s_us / r
        td = p.t2_int_data_us or self.qubit(data).t2s_us / r
        return ta, td

    # noise building blocks -------------------------------------------------
    def idle(self, name: str, dt_ns: float, echo: bool = False) -> PauliChannel:
        q = self.qubit(name)
        return idle_channel(q.t1_us, q.t2e_us if echo else q.t2s_us, dt_ns)

    def single_qubit_gate(self, name: str) -> PauliChannel:
        q = self.qubit(name)
        coh = idle_channel(q.t1_us, q.t2s_us, self.timing.gate_1q_ns)
        extra = max(0.0, q.eps_1q - coh.infidelity())
        return coh.compose(gate_channel(extra, 1))

    def cz_gate(self, aux: str, data: str) -> PauliChannel:
        ta, td = self.t2_int(aux, data)
        dt = self.timing.cz_ns
        coh = idle_channel(self.qubit(aux).t1_us, ta, dt).tensor(
            idle_channel(self.qubit(data).t1_us, td, dt))
        if self.cz_noise == "coherence":
            return coh
        extra = max(0.0, self.pair(aux, data).eps_2q - coh.infidelity())
        return coh.compose(gate_channel(extra, 2))

    # transformations -------------------------------------------------------
    def scaled(self, x: float) -> "DeviceParams":
        """Divide every error probability by ``x`` and stretch coherence times."""
        if x <= 0:
            raise ValueError("improvement factor must be positive")
        qubits = {n: QubitParams(q.t1_us * x, q.t2s_us * x, q.t2e_us * x, q.eps_1q / x,
                                 q.eps_ro2 / x, q.eps_ro3 / x, q.p_th / x)
                  for n, q in self.qubits.items()}
        pairs = {k: PairParams(p.eps_2q / x,
                               p.t2_int_aux_us * x if p.t2_int_aux_us else None,
                               p.t2_int_data_us * x if p.t2_int_data_us else None)
                 for k, p in self.pairs.items()}
        return DeviceParams(qubits, pairs, self.timing, self.leakage.scaled(x), self.cz_noise)

    def noiseless(self) -> "DeviceParams":
        """Same timing, no errors at all (coherence times made huge)."""
        big = 1e30
        qubits = {n: QubitParams(big, big, big, 0.0, 0.0, 0.0, 0.0) for n in self.qubits}
        pairs = {k: PairParams(0.0) for k in self.pairs}
        return DeviceParams(qubits, pairs, self.timing, LeakageParams(), self.cz_noise)

    @classmethod
    def uniform(cls, qubit: QubitParams, eps_2q: float, timing: Timing | None = None,
                leakage: LeakageParams | None = None, cz_noise: str = "coherence") -> "DeviceParams":
        qubits = {n: qubit for n in DATA + STABILIZER_ORDER}
        pairs = {(a, d): PairParams(eps_2q) for a, sup in all_supports() for d in sup}
        return cls(qubits, pairs, timing or Timing(), leakage or LeakageParams(), cz_noise)

    # serialization ---------------------------------------------------------
    @classmethod
    def from_dict(cls, doc: dict) -> "DeviceParams":
        version = doc.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported device schema version {version!r}")
        timing = Timing(**doc.get("timing", {}))
        leakage = LeakageParams(**doc.get("leakage", {}))
        qubits = {n: QubitParams(**v) for n, v in doc.get("qubits", {}).items()}
        default_2q = doc.get("default_eps_2q")
        pairs = {}
        for a, sup in all_supports():
            for d in sup:
                entry = doc.get("pairs", {}).get(f"{a}-{d}")
                if entry is None:
                    if default_2q is None:
                        raise ValueError(f"missing CZ parameters for {a}-{d}")
                    entry = {"eps_2q": default_2q}
                pairs[(a, d)] = PairParams(**entry)
        missing = set(DATA + STABILIZER_ORDER) - set(qubits)
        if missing:
            raise ValueError(f"missing qubit parameters: {sorted(missing)}")
        return cls(qubits, pairs, timing, leakage, doc.get("cz_noise", "coherence"))

    @classmethod
    def from_toml(cls, path) -> "DeviceParams":
        with open(path, "rb") as fh:
            return cls.from_dict(tomllib.load(fh))

    def to_toml(self) -> str:
        lines = [f"schema_version = {SCHEMA_VERSION}", f'cz_noise = "{self.cz_noise}"',
                 "", "[timing]"]
        lines += [f"{f.name} = {getattr(self.timing, f.name)!r}"
                  for f in dataclasses.fields(self.timing)]
        lines += ["", "[leakage]"]
        lines += [f"{f.name} = {getattr(self.leakage, f.name)!r}"
                  for f in dataclasses.fields(self.leakage)]
        for name, q in self.qubits.items():
            lines += ["", f"[qubits.{name}]"]
            lines += [f"{f.name} = {getattr(q, f.name)!r}" for f in dataclasses.fields(q)]
        for (a, d), p in self.pairs.items():
            lines += ["", f'[pairs."{a}-{d}"]', f"eps_2q = {p.eps_2q!r}"]
            if p.t2_int_aux_us:
                lines.append(f"t2_int_aux_us = {p.t2_int_aux_us!r}")
            if p.t2_int_data_us:
                lines.append(f"t2_int_data_us = {p.t2_int_data_us!r}")
        return "\n".join(lines) + "\n"


def _bundled_doc() -> dict:
    text = resources.files("surface17.data").joinpath("surface17_device.toml").read_text()
    return tomllib.loads(text)


def bundled_device() -> DeviceParams:
    """Per-qubit device table shipped with the package."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return DeviceParams.from_dict(_bundled_doc())


def average_device(leakage: bool = False) -> DeviceParams:
    """Uniform device built from the table's average column."""
    doc = _bundled_doc()
    avg = doc["average"]
    qubit = QubitParams(**{k: v for k, v in avg.items() if k != "eps_2q"})
    leak = LeakageParams(**doc["leakage"]) if leakage else LeakageParams()
    return DeviceParams.uniform(qubit, avg["eps_2q"], Timing(**doc.get("timing", {})), leak,
                                doc.get("cz_noise", "coherence"))


def device_from_path(path: str | Path | None) -> DeviceParams:
    if path is None or str(path) == "bundled":
        return bundled_device()
    if str(path) == "average":
        return average_device()
    return DeviceParams.from_toml(path)


@dataclass
class LeakageSample:
    """Absorbing leakage state per shot, cycle and qubit (True = leaked)."""

    aux: np.ndarray   # (shots, n_cycles, 8), STABILIZER_ORDER columns
    data: np.ndarray  # (shots, n_cycles, 9)


def _aux_neighbours() -> list[list[int]]:
    sup = dict(all_supports())
    return [[DATA.index(d) for d in sup[a]] for a in STABILIZER_ORDER]


def sample_leakage(params: LeakageParams, n_cycles: int, shots: int,
                   rng: np.random.Generator) -> LeakageSample:
    """Draw leakage onsets; a leaked qubit stays leaked for the rest of the run."""
    if n_cycles < 1 or shots < 1:
        raise ValueError("need at least one cycle and one shot")
    aux_new = rng.random((shots, n_cycles, 8)) < params.aux_leak
    data_new = rng.random((shots, n_cycles, 9)) < params.data_leak
    joint = rng.random((shots, n_cycles, 8)) < params.joint_leak
    if params.joint_leak > 0:
        aux_new |= joint
        pick = rng.random((shots, n_cycles, 8))
        for i, nb in enumerate(_aux_neighbours()):
            which = np.minimum((pick[:, :, i] * len(nb)).astype(int), len(nb) - 1)
            for k, d in enumerate(nb):
                data_new[:, :, d] |= joint[:, :, i] & (which == k)
    return LeakageSample(np.logical_or.accumulate(aux_new, axis=1),
                         np.logical_or.accumulate(data_new, axis=1))
