"""Memory experiment runner, shot records, syndromes and leakage rejection."""

from __future__ import annotations

import gzip
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .circuit import Circuit, fault_locations, memory_circuit, reference_run, run_frames, state_basis
from .code import DATA, STABILIZER_ORDER, Surface17, build_surface17
from .noise import DeviceParams, sample_leakage
from .seeding import derive_rng

SCHEMA_VERSION = 1
BATCH_SIZE = 8192
REJECTION_MODES = ("none", "data_only", "aux_only", "both")
_DATA_COLS = {"Z": list(range(0, 4)), "X": list(range(4, 8))}


@dataclass(frozen=True)
class RunConfig:
    initial_state: str = "0L"
    n_cycles: int = 1
    shots: int = 1000
    seed: int = 0
    leakage_rejection: str = "none"
    first_cycle: str = "frame"   # or "exclude": see compute_syndromes

    def __post_init__(self):
        state_basis(self.initial_state)
        if self.n_cycles < 1:
            raise ValueError("n_cycles must be >= 1")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if self.leakage_rejection not in REJECTION_MODES:
            raise ValueError(f"unknown rejection mode {self.leakage_rejection!r}")
        if self.first_cycle not in ("frame", "exclude"):
            raise ValueError(f"unknown first-cycle convention {self.first_cycle!r}")

    @property
    def basis(self) -> str:
        return state_basis(self.initial_state)


@dataclass
class ShotRecord:
    shot: int
    herald_ok: bool
    s: list            # [n][8] of +/-1, columns in STABILIZER_ORDER
    leak_aux: list     # [n][8] of 0/1
    leak_data: list    # [9] of 0/1
    final_bits: list   # [9] of +/-1
    basis: str


@dataclass
class ShotBatch:
    """Column-stored shot records for one (initial state, n) configuration."""

    state: str
    n_cycles: int
    shot: np.ndarray       # (shots,)
    herald_ok: np.ndarray  # (shots,) bool
    s: np.ndarray          # (shots, n, 8) int8
    leak_aux: np.ndarray   # (shots, n, 8) bool
    leak_data: np.ndarray  # (shots, 9) bool
    final: np.ndarray      # (shots, 9) int8
    reference_logical: int = 1
    meta: dict = field(default_factory=dict)

    @property
    def basis(self) -> str:
        return state_basis(self.state)

    def __len__(self) -> int:
        return len(self.shot)

    def subset(self, mask) -> "ShotBatch":
        return ShotBatch(self.state, self.n_cycles, self.shot[mask], self.herald_ok[mask],
                         self.s[mask], self.leak_aux[mask], self.leak_data[mask],
                         self.final[mask], self.reference_logical, dict(self.meta))

    def records(self) -> Iterator[ShotRecord]:
        for i in range(len(self)):
            yield ShotRecord(int(self.shot[i]), bool(self.herald_ok[i]),
                             self.s[i].tolist(), self.leak_aux[i].astype(int).tolist(),
                             self.leak_data[i].astype(int).tolist(),
                             self.final[i].tolist(), self.basis)

    @classmethod
    def concatenate(cls, parts: list["ShotBatch"]) -> "ShotBatch":
        first = parts[0]
        for p in parts[1:]:
            if (p.state, p.n_cycles) != (first.state, first.n_cycles):
                raise ValueError("cannot merge batches of different configurations")
        cat = lambda attr: np.concatenate([getattr(p, attr) for p in parts])  # noqa: E731
        return cls(first.state, first.n_cycles, cat("shot"), cat("herald_ok"), cat("s"),
                   cat("leak_aux"), cat("leak_data"), cat("final"),
                   first.reference_logical, dict(first.meta))


def compile_memory(device: DeviceParams, state: str, n: int) -> tuple[Circuit, np.ndarray, np.ndarray]:
    """Memory circuit plus its reference outcomes, cached on the device object."""
    cache = device.__dict__.setdefault("_circuit_cache", {})
    if (state, n) not in cache:
        circ = memory_circuit(device, state, n)
        cache[(state, n)] = (circ, *reference_run(circ))
    return cache[(state, n)]


def _simulate_batch(device: DeviceParams, config: RunConfig, batch_index: int,
                    shots: int) -> ShotBatch:
    circ, ref_bits, _ = compile_memory(device, config.initial_state, config.n_cycles)
    n = config.n_cycles
    rng = derive_rng(config.seed, "memory", config.initial_state, n, batch_index)
    leak = sample_leakage(device.leakage, n, shots, rng)
    data_leaked = leak.data  # (shots, n, 9)

    def on_tick(frames, label):
        if label[0] == "cycle" and device.leakage.data_leak + device.leakage.joint_leak > 0:
            m = label[1]
            for d in range(9):
                hit = np.flatnonzero(data_leaked[:, m - 1, d])
                if len(hit):
                    frames.x[d, hit] = rng.random(len(hit)) < 0.5
                    frames.z[d, hit] = rng.random(len(hit)) < 0.5

    run = run_frames(circ, shots, rng, on_tick=on_tick)
    bits = ref_bits[:, None] ^ run.flips
    true_bits = ref_bits[:, None] ^ run.true_flips
    tags = circ.measurements

    herald_idx = [i for i, t in enumerate(tags) if t[0] == "herald"]
    herald_ok = ~np.any(bits[herald_idx], axis=0)

    aux_idx = np.array([[tags.index(("aux", m, a)) for a in STABILIZER_ORDER]
                        for m in range(1, n + 1)])          # (n, 8)
    a = bits[aux_idx].transpose(2, 0, 1)                    # (shots, n, 8)
    a_true = true_bits[aux_idx].transpose(2, 0, 1)
    leaked_aux = leak.aux
    if leaked_aux.any():
        noise_bits = rng.random(a.shape) < 0.5
        a = np.where(leaked_aux, noise_bits, a)
        a_true = np.where(leaked_aux, noise_bits, a_true)
    prev = np.concatenate([np.zeros((shots, 1, 8), bool), a[:, :-1]], axis=1)
    s = (1 - 2 * (a ^ prev)).astype(np.int8)

    final_idx = [tags.index(("final", d)) for d in DATA]
    fb = bits[final_idx].T.copy()                           # (shots, 9)
    fb_true = true_bits[final_idx].T.copy()
    leaked_data = data_leaked[:, -1, :]
    fb[leaked_data] = True
    fb_true[leaked_data] = True
    final = (1 - 2 * fb).astype(np.int8)

    lk = device.leakage
    flag_aux = leaked_aux | (a_true & (rng.random(a.shape) < lk.aux_false_positive))
    flag_data = leaked_data | (fb_true & (rng.random(fb.shape) < lk.data_false_positive))

    ref_logical = _logical_reference(circ, ref_bits, config.basis)
    shot_ids = np.arange(shots) + batch_index * BATCH_SIZE
    return ShotBatch(config.initial_state, n, shot_ids, herald_ok, s, flag_aux, flag_data,
                     final, ref_logical)


def _batch_task(args):
    device, config, b, shots = args
    return _simulate_batch(device, config, b, shots)


def _logical_reference(circ: Circuit, ref_bits: np.ndarray, basis: str) -> int:
    lg = build_surface17().logical(basis)
    tags = circ.measurements
    return 1 - 2 * (int(sum(ref_bits[tags.index(("final", d))] for d in lg.support)) % 2)


def single_fault_batch(device: DeviceParams, state: str, n_cycles: int,
                       seed: int = 0) -> tuple[ShotBatch, list]:
    """One shot per single fault of the memory circuit, all other noise off.

    Fault locations are taken from ``device``'s circuit (its noise ops and
    readouts); shot k carries fault k of the returned list.  No leakage.
    """
    circ, ref_bits, _ = compile_memory(device, state, n_cycles)
    faults = fault_locations(circ)
    injections: dict = {}
    for k, (op, pos, pauli) in enumerate(faults):
        injections.setdefault(op, []).append((k, pos, pauli))
    run = run_frames(circ, len(faults), derive_rng(seed, "single-fault", state, n_cycles),
                     noise=False, injections=injections)
    bits = ref_bits[:, None] ^ run.flips
    tags = circ.measurements
    herald_ok = ~np.any(bits[[i for i, t in enumerate(tags) if t[0] == "herald"]], axis=0)
    aux_idx = np.array([[tags.index(("aux", m, a)) for a in STABILIZER_ORDER]
                        for m in range(1, n_cycles + 1)])
    a = bits[aux_idx].transpose(2, 0, 1)
    prev = np.concatenate([np.zeros((len(faults), 1, 8), bool), a[:, :-1]], axis=1)
    s = (1 - 2 * (a ^ prev)).astype(np.int8)
    fb = bits[[tags.index(("final", d)) for d in DATA]].T
    shots = len(faults)
    batch = ShotBatch(state, n_cycles, np.arange(shots), herald_ok, s,
                      np.zeros((shots, n_cycles, 8), bool), np.zeros((shots, 9), bool),
                      (1 - 2 * fb).astype(np.int8),
                      _logical_reference(circ, ref_bits, state_basis(state)))
    return batch, faults


def run_memory_experiment(config: RunConfig, device: DeviceParams,
                          code: Surface17 | None = None, workers: int = 1) -> ShotBatch:
    """Simulate ``config.shots`` shots; results do not depend on ``workers``."""
    if code is not None and code.schedule != build_surface17().schedule:
        raise ValueError("only the default schedule is wired into the memory circuit")
    sizes = []
    left = config.shots
    while left > 0:
        sizes.append(min(BATCH_SIZE, left))
        left -= sizes[-1]
    tasks = [(device, config, b, k) for b, k in enumerate(sizes)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_batch_task, tasks))
    else:
        parts = [_batch_task(t) for t in tasks]
    out = ShotBatch.concatenate(parts)
    out.meta.update({"seed": config.seed})
    return out


# ---------------------------------------------------------------------------
# syndromes


@dataclass
class SyndromeBatch:
    basis: str
    sigma: np.ndarray        # (shots, n, 8) uint8, STABILIZER_ORDER columns
    sigma_final: np.ndarray  # (shots, 4) uint8 for the decoded basis
    defined: np.ndarray      # (n, 8) bool: elements that carry information

    def detection_events(self) -> np.ndarray:
        """(shots, 4*(n+1)) events for the decoded basis, vertex = 4*(m-1) + i."""
        cols = _DATA_COLS[self.basis]
        ev = np.concatenate([self.sigma[:, :, cols], self.sigma_final[:, None, :]], axis=1)
        return ev.reshape(len(ev), -1)

    def mean_syndrome(self) -> float:
        """Average syndrome element over all defined elements and cycles."""
        if self.sigma.shape[0] == 0:
            return float("nan")
        return float(self.sigma[:, self.defined].mean())


def compute_syndromes(shots: ShotBatch, basis: str | None = None,
                      first_cycle: str = "frame") -> SyndromeBatch:
    """Syndrome elements; cycle 1 compares against the prepared eigenvalue (+1).

    Stabilizers of the opposite basis have no prepared eigenvalue: their
    first outcome serves as reference frame, so sigma_1 := 0 there.  With
    ``first_cycle="exclude"`` those elements are also dropped from averages.
    """
    basis = basis or shots.basis
    if basis != shots.basis:
        raise ValueError(f"cannot decode {basis} from a {shots.basis}-basis run")
    s_bits = (shots.s < 0)
    prev = np.concatenate([np.zeros_like(s_bits[:, :1]), s_bits[:, :-1]], axis=1)
    sigma = (s_bits ^ prev).astype(np.uint8)
    opposite = _DATA_COLS["X" if basis == "Z" else "Z"]
    sigma[:, 0, opposite] = 0
    defined = np.ones(sigma.shape[1:], bool)
    if first_cycle == "exclude":
        defined[0, opposite] = False
    code = build_surface17()
    cols = _DATA_COLS[basis]
    fbits = shots.final < 0
    par = np.stack([np.bitwise_xor.reduce(fbits[:, [DATA.index(q) for q in
                                                    code.stabilizer(STABILIZER_ORDER[c]).support]],
                                          axis=1) for c in cols], axis=1)
    sigma_final = (par ^ s_bits[:, -1, cols]).astype(np.uint8)
    return SyndromeBatch(basis, sigma, sigma_final, defined)


def syndrome_record(shots: ShotBatch, i: int, basis: str | None = None) -> SyndromeBatch:
    return compute_syndromes(shots.subset(slice(i, i + 1)), basis)


# ---------------------------------------------------------------------------
# leakage rejection


@dataclass
class RetentionStats:
    mode: str
    n_cycles: int
    heralded: int
    retained: int

    @property
    def fraction(self) -> float:
        return self.retained / self.heralded if self.heralded else float("nan")


def leakage_mask(shots: ShotBatch, mode: str) -> np.ndarray:
    if mode not in REJECTION_MODES:
        raise ValueError(f"unknown rejection mode {mode!r}")
    keep = np.ones(len(shots), bool)
    if mode in ("aux_only", "both"):
        keep &= ~shots.leak_aux.any(axis=(1, 2))
    if mode in ("data_only", "both"):
        keep &= ~shots.leak_data.any(axis=1)
    return keep


def reject_leakage(shots: ShotBatch, mode: str) -> tuple[ShotBatch, RetentionStats]:
    """Drop failed-herald shots, then shots flagged for leakage under ``mode``."""
    heralded = shots.subset(shots.herald_ok)
    keep = leakage_mask(heralded, mode)
    return heralded.subset(keep), RetentionStats(mode, shots.n_cycles, len(heralded),
                                                 int(keep.sum()))


# ---------------------------------------------------------------------------
# JSONL persistence


def _open(path, mode):
    path = str(path)
    if path.endswith(".gz"):
        return gzip.open(path, mode + "t", encoding="utf-8")
    return open(path, mode, encoding="utf-8")


def write_shots(path, batches: Iterable[ShotBatch], header: dict | None = None) -> None:
    """One JSON object per line; the first line is a header."""
    dump = lambda o: json.dumps(o, separators=(",", ":"), sort_keys=True)  # noqa: E731
    with _open(path, "w") as fh:
        head = {"schema_version": SCHEMA_VERSION, "kind": "shots-header",
                "stabilizer_order": list(STABILIZER_ORDER), "data_order": list(DATA)}
        head.update(header or {})
        fh.write(dump(head) + "\n")
        for b in batches:
            for rec in b.records():
                fh.write(dump({"schema_version": SCHEMA_VERSION, "shot": rec.shot,
                               "state": b.state, "n": b.n_cycles, "herald": rec.herald_ok,
                               "s": rec.s, "leak": {"aux": rec.leak_aux, "data": rec.leak_data},
                               "final": rec.final_bits, "basis": rec.basis,
                               "ref": b.reference_logical}) + "\n")


def read_shots(path) -> tuple[dict, list[ShotBatch]]:
    """Inverse of ``write_shots``; batches are grouped by (state, n)."""
    groups: dict = {}
    header = None
    with _open(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            if rec.get("schema_version") != SCHEMA_VERSION:
                raise ValueError(f"{path}:{lineno}: unsupported schema version "
                                 f"{rec.get('schema_version')!r}")
            if rec.get("kind") == "shots-header":
                header = rec
                continue
            groups.setdefault((rec["state"], rec["n"]), []).append(rec)
    if header is None:
        raise ValueError(f"{path}: missing header line")
    batches = []
    for (state, n), recs in groups.items():
        batches.append(ShotBatch(
            state, n,
            np.array([r["shot"] for r in recs]),
            np.array([r["herald"] for r in recs], bool),
            np.array([r["s"] for r in recs], np.int8).reshape(len(recs), n, 8),
            np.array([r["leak"]["aux"] for r in recs], bool).reshape(len(recs), n, 8),
            np.array([r["leak"]["data"] for r in recs], bool).reshape(len(recs), 9),
            np.array([r["final"] for r in recs], np.int8).reshape(len(recs), 9),
            int(recs[0].get("ref", 1))))
    return header, batches
