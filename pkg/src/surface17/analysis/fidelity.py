"""Fidelity of a prepared logical state from 512 Pauli correlators.

The target |0>_L projector (with X-stabilizer signs taken from the
initialization cycle) expands into 512 commuting Pauli terms, indexed by a
9-bit mask over the generators (Z1..Z4, X1..X4, Z_L).  Terms with bit 8
clear span the projector onto the stabilizer code space.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from ..circuit import memory_circuit, reference_run, run_frames
from ..code import DATA, STABILIZER_ORDER, X_AUX, build_surface17
from ..noise import DeviceParams
from ..pauli import PauliString, symplectic_anticommute
from ..seeding import derive_rng
from ..tableau import Tableau

N_TERMS = 512
N_SYNDROMES = 256
_X_BITS = [STABILIZER_ORDER.index(a) for a in X_AUX]


@dataclass(frozen=True)
class TermSet:
    paulis: tuple           # 512 PauliString on the 9 data qubits
    x: np.ndarray           # (512, 9) bool
    z: np.ndarray
    sign: np.ndarray        # (512,) +/-1 sign of each product
    mask: np.ndarray        # (512, 9) bool generator membership

    @property
    def support(self) -> np.ndarray:
        return self.x | self.z


@functools.lru_cache(maxsize=1)
def logical_terms() -> TermSet:
    code = build_surface17()
    gens = [code.stabilizer(a).pauli() for a in STABILIZER_ORDER] + [code.logical("Z").pauli()]
    paulis = []
    for j in range(N_TERMS):
        p = PauliString.identity(9)
        for k in range(9):
            if (j >> k) & 1:
                p = p * gens[k]
        paulis.append(p)
    mask = ((np.arange(N_TERMS)[:, None] >> np.arange(9)) & 1).astype(bool)
    return TermSet(tuple(paulis), np.array([p.x for p in paulis]),
                   np.array([p.z for p in paulis]), np.array([p.sign for p in paulis]), mask)


def gamma(s_x) -> np.ndarray:
    """Sign gamma_j of every term for X-stabilizer outcomes ``s_x`` (X1..X4, +/-1).

    ``s_x`` may carry leading shot axes; the term axis is appended last.
    """
    s_x = np.asarray(s_x)
    if s_x.shape[-1] != 4:
        raise ValueError("need four X-stabilizer outcomes")
    mask = logical_terms().mask[:, _X_BITS]        # (512, 4)
    neg = (s_x < 0).astype(np.int64) @ mask.T.astype(np.int64)
    return 1 - 2 * (neg % 2)


# ---------------------------------------------------------------------------
# correlator sources


def _embed(p: PauliString, n: int) -> PauliString:
    x = np.zeros(n, bool)
    z = np.zeros(n, bool)
    x[:9], z[:9] = p.x, p.z
    return PauliString(x, z, p.phase)


def exact_correlators(tab: Tableau, s_x=(1, 1, 1, 1)) -> np.ndarray:
    """<gamma_j P_j> of a stabilizer state whose first nine qubits are the data."""
    terms = logical_terms()
    vals = np.array([tab.expectation(_embed(p, tab.n)) for p in terms.paulis], float)
    return gamma(s_x) * vals


def mixed_correlators() -> np.ndarray:
    """Correlators of the maximally mixed 9-qubit state."""
    c = np.zeros(N_TERMS)
    c[0] = 1.0
    return c


def mitigate_readout(correlators, eps) -> np.ndarray:
    """Undo symmetric per-qubit readout flips: divide by prod(1 - 2 eps_q) over the support."""
    eps = np.broadcast_to(np.asarray(eps, float), (9,))
    if np.any(eps >= 0.5) or np.any(eps < 0):
        raise ValueError("readout error must lie in [0, 0.5)")
    sup = logical_terms().support
    scale = np.prod(np.where(sup, 1.0 - 2.0 * eps, 1.0), axis=1)
    return np.asarray(correlators, float) / scale


def tomography_settings() -> list[str]:
    """Greedy grouping of the 512 terms into 9-qubit measurement settings."""
    terms = logical_terms()
    labels = []
    for x, z in zip(terms.x, terms.z):
        labels.append("".join("Y" if a and b else "X" if a else "Z" if b else "I"
                              for a, b in zip(x, z)))
    settings: list[list[str]] = []
    for lab in sorted(labels, key=lambda s: -sum(c != "I" for c in s)):
        for s in settings:
            if all(c == "I" or t == "I" or c == t for c, t in zip(lab, s)):
                for q, c in enumerate(lab):
                    if c != "I":
                        s[q] = c
                break
        else:
            settings.append(list(lab))
    return ["".join(c if c != "I" else "Z" for c in s) for s in settings]


@dataclass
class TomographyData:
    correlators: np.ndarray      # (512,) estimates of <gamma_j P_j>
    stderr: np.ndarray
    shots: np.ndarray            # (512,) shots used per term
    settings: list = field(default_factory=list)


def sample_correlators(device: DeviceParams, shots_per_setting: int = 2000, seed: int = 0,
                       state: str = "0L") -> TomographyData:
    """Single-shot tomography after one cycle, by Pauli-frame sampling.

    Each setting is its own run: heralded preparation, one QEC cycle, basis
    rotations and data readout.  gamma_j comes from each shot's measured X
    stabilizers.  Shots failing the herald are dropped; leakage is not
    simulated here.
    """
    if state not in ("0L",):
        raise ValueError("tomography is implemented for the |0>_L target only")
    terms = logical_terms()
    labels = ["".join("Y" if a and b else "X" if a else "Z" if b else "I"
                      for a, b in zip(x, z)) for x, z in zip(terms.x, terms.z)]
    settings = tomography_settings()
    sums = np.zeros(N_TERMS)
    sq = np.zeros(N_TERMS)
    counts = np.zeros(N_TERMS)
    done = np.zeros(N_TERMS, bool)
    for k, setting in enumerate(settings):
        circ = memory_circuit(device, state, 1, readout_bases=setting)
        ref, _ = reference_run(circ)
        rng = derive_rng(seed, "tomography", setting)
        run = run_frames(circ, shots_per_setting, rng)
        bits = ref[:, None] ^ run.flips
        tags = circ.measurements
        herald = ~np.any(bits[[i for i, t in enumerate(tags) if t[0] == "herald"]], axis=0)
        ax = bits[[tags.index(("aux", 1, a)) for a in X_AUX]].T[herald]       # (s, 4)
        fb = bits[[tags.index(("final", d)) for d in DATA]].T[herald]          # (s, 9)
        g = gamma(1 - 2 * ax.astype(int))                                    # (s, 512)
        for j, lab in enumerate(labels):
            if done[j] or any(c != "I" and c != setting[q] for q, c in enumerate(lab)):
                continue
            sup = [q for q, c in enumerate(lab) if c != "I"]
            par = np.bitwise_xor.reduce(fb[:, sup], axis=1) if sup else np.zeros(len(fb), bool)
            v = terms.sign[j] * g[:, j] * (1 - 2 * par.astype(int))
            sums[j], sq[j], counts[j] = v.sum(), (v * v).sum(), len(v)
            done[j] = True
    if not done.all():
        raise RuntimeError("tomography settings do not cover every term")
    mean = sums / counts
    var = np.maximum(sq / counts - mean ** 2, 0.0)
    return TomographyData(mean, np.sqrt(var / counts), counts, settings)


# ---------------------------------------------------------------------------
# correctable subspaces


@functools.lru_cache(maxsize=1)
def _error_table():
    """Minimal error weight, its multiplicity and a representative per (syndrome, Z_L flip).

    Enumerates all 4^9 data Paulis.  Key = syndrome (8 bits, STABILIZER_ORDER)
    + 256 * (anticommutes with Z_L).
    """
    code = build_surface17()
    n = 4 ** 9
    idx = np.arange(n)
    digits = (idx[:, None] >> (2 * np.arange(9))) & 3          # 0=I 1=X 2=Y 3=Z
    x = (digits == 1) | (digits == 2)
    z = (digits == 3) | (digits == 2)
    gens = [code.stabilizer(a).pauli() for a in STABILIZER_ORDER] + [code.logical("Z").pauli()]
    gx = np.array([g.x for g in gens])
    gz = np.array([g.z for g in gens])
    anti = symplectic_anticommute(x, z, gx, gz)               # (n, 9)
    key = anti.astype(np.int64) @ (1 << np.arange(9))
    weight = (x | z).sum(1)
    min_w = np.full(512, 99)
    np.minimum.at(min_w, key, weight)
    at_min = weight == min_w[key]
    count = np.bincount(key[at_min], minlength=512)
    rep = np.full(512, -1)
    order = np.flatnonzero(at_min)
    keys, first = np.unique(key[order], return_index=True)
    rep[keys] = order[first]                                   # lowest index per key
    return min_w, count, x[rep], z[rep]


@dataclass(frozen=True)
class CorrectableSubspace:
    """One eigenstate E_n|0>_L per syndrome, n = syndrome index 0..255."""

    seed: int
    flip: np.ndarray        # (256,) 1 if the Z_L-flipped partner was chosen
    weight: np.ndarray      # (256,) minimal reaching-error weight
    x: np.ndarray           # (256, 9) representative error E_n
    z: np.ndarray

    def contains(self, p: PauliString) -> bool:
        """Whether the state p|0>_L belongs to this subspace."""
        code = build_surface17()
        gens = [code.stabilizer(a).pauli() for a in STABILIZER_ORDER] + [code.logical("Z").pauli()]
        anti = [0 if p.commutes(g) else 1 for g in gens]
        syn = sum(b << k for k, b in enumerate(anti[:8]))
        return bool(self.flip[syn] == anti[8])

    def errors(self) -> list[PauliString]:
        return [PauliString(x, z, int(np.sum(x & z))) for x, z in zip(self.x, self.z)]


def build_correctable_subspace(seed: int = 0) -> CorrectableSubspace:
    """Pick, per syndrome, the eigenstate reached by lower-weight errors.

    Ties on minimal weight are broken by the number of minimal-weight
    errors, then by a seeded coin.
    """
    min_w, count, rx, rz = _error_table()
    rng = derive_rng(seed, "correctable-subspace")
    coin = rng.random(N_SYNDROMES) < 0.5
    w0, w1 = min_w[:256], min_w[256:]
    c0, c1 = count[:256], count[256:]
    flip = np.where(w1 < w0, True, np.where(w0 < w1, False,
                    np.where(c1 > c0, True, np.where(c0 > c1, False, coin))))
    keys = np.arange(256) + 256 * flip
    sub = CorrectableSubspace(seed, flip.astype(np.uint8), min_w[keys], rx[keys], rz[keys])
    _check_subspace(sub)
    return sub


def _check_subspace(sub: CorrectableSubspace) -> None:
    if len(sub.flip) != N_SYNDROMES:
        raise AssertionError("subspace must hold one state per syndrome")
    if sub.flip[0] != 0 or sub.weight[0] != 0:
        raise AssertionError("subspace must contain |0>_L")
    for q in range(9):
        for op in "XYZ":
            if not sub.contains(PauliString.single(9, q, op)):
                raise AssertionError(f"subspace misses the weight-one image {op}{q + 1}")


def sign_matrix(sub: CorrectableSubspace) -> np.ndarray:
    """c[j, n] = +1 if E_n commutes with P_j, else -1; shape (512, 256)."""
    terms = logical_terms()
    return 1 - 2 * symplectic_anticommute(terms.x, terms.z, sub.x, sub.z).astype(np.int64)


# ---------------------------------------------------------------------------
# reports


@dataclass
class FidelityReport:
    F_phys: float
    P_L: float
    F_L: float
    F_c: float
    F_w: dict               # {weight: fidelity share}, weights >= 1
    n_subspaces: int = 0
    F_c_std: float = 0.0

    def as_dict(self) -> dict:
        return {"F_phys": self.F_phys, "P_L": self.P_L, "F_L": self.F_L, "F_c": self.F_c,
                "F_c_std": self.F_c_std, "F_w": {str(k): v for k, v in self.F_w.items()},
                "n_subspaces": self.n_subspaces}


def fidelity_physical(correlators) -> tuple[float, float, float]:
    """(F_phys, P_L, F_L) from the 512 signed correlators <gamma_j P_j>."""
    c = np.asarray(correlators, float)
    if c.shape != (N_TERMS,):
        raise ValueError(f"expected {N_TERMS} correlators, got shape {c.shape}")
    f = float(c.mean())
    p_l = float(c[:N_SYNDROMES].mean())
    return f, p_l, (f / p_l if p_l > 0 else float("nan"))


def fidelity_correctable(correlators, n_subspaces: int = 500, seed: int = 0) -> FidelityReport:
    """F_c averaged over ``n_subspaces`` seeded correctable subspaces."""
    c = np.asarray(correlators, float)
    f_phys, p_l, f_l = fidelity_physical(c)
    if n_subspaces < 1:
        raise ValueError("need at least one subspace")
    max_w = int(_error_table()[0].max())
    fcs = []
    fw = np.zeros((n_subspaces, max_w + 1))
    for k in range(n_subspaces):
        sub = build_correctable_subspace(seed + k)
        per_state = (sign_matrix(sub) * c[:, None]).sum(0) / N_TERMS   # (256,)
        fcs.append(per_state.sum())
        np.add.at(fw[k], sub.weight, per_state)
    f_w = {w: float(fw[:, w].mean()) for w in range(1, max_w + 1)}
    return FidelityReport(f_phys, p_l, f_l, float(np.mean(fcs)), f_w, n_subspaces,
                          float(np.std(fcs)))
