import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import gate_matrix, pauli_matrix, project_z, z_expectation, zero_state
from surface17.frames import GATES_1Q, PauliFrames, apply_clifford
from surface17.pauli import PauliString, symplectic_anticommute
from surface17.tableau import Tableau

N = 4
GATES = list(GATES_1Q) + ["CZ", "CX"]


def gate_list(draw_ops, n=N):
    ops = []
    for name, a, b in draw_ops:
        if name in ("CZ", "CX"):
            if a == b:
                b = (a + 1) % n
            ops.append((name, (a, b)))
        else:
            ops.append((name, (a,)))
    return ops


circuits = st.lists(st.tuples(st.sampled_from(GATES), st.integers(0, N - 1),
                              st.integers(0, N - 1)), min_size=1, max_size=25).map(gate_list)


# ---------------------------------------------------------------------------
# Pauli algebra


def test_pauli_products_match_matrices():
    labels = ["XIZ", "-YYI", "ZZY", "IXI", "-YXZ"]
    for a in labels:
        for b in labels:
            pa, pb = PauliString.from_label(a), PauliString.from_label(b)
            prod = pa * pb
            dense = pauli_matrix(a) @ pauli_matrix(b)
            phase = {"+": 1, "+i": 1j, "-": -1, "-i": -1j}
            lab = prod.label()
            body = lab.lstrip("+-i")
            ref = phase[lab[: len(lab) - len(body)]] * pauli_matrix(body)
            assert np.allclose(ref, dense)
            assert pa.commutes(pb) == np.allclose(dense, pauli_matrix(b) @ pauli_matrix(a))


def test_pauli_label_roundtrip_and_errors():
    for lab in ("+XYZ", "-IIX", "+iZZ", "-iYI"):
        assert PauliString.from_label(lab).label() == lab
    with pytest.raises(ValueError):
        PauliString.from_label("XQ")
    with pytest.raises(ValueError):
        PauliString.single(3, 5, "X")


def test_symplectic_anticommute_matches_commutes():
    rng = np.random.default_rng(1)
    for _ in range(50):
        a = PauliString(rng.random(6) < 0.5, rng.random(6) < 0.5)
        b = PauliString(rng.random(6) < 0.5, rng.random(6) < 0.5)
        out = symplectic_anticommute(a.x[None], a.z[None], b.x[None], b.z[None])
        assert bool(out[0, 0]) == (not a.commutes(b))


# ---------------------------------------------------------------------------
# tableau vs dense statevector


@settings(max_examples=60, deadline=None)
@given(circuits)
def test_tableau_stabilizes_dense_state(ops):
    tab = Tableau(N)
    psi = zero_state(N)
    for name, t in ops:
        apply_clifford(tab, name, t)
        psi = gate_matrix(name, t, N) @ psi
    for p in tab.stabilizers():
        lab = p.label()
        assert "i" not in lab
        assert np.allclose(pauli_matrix(lab) @ psi, psi)


@settings(max_examples=40, deadline=None)
@given(circuits, st.integers(0, 2 ** 16))
def test_tableau_measurements_match_dense(ops, seed):
    rng = np.random.default_rng(seed)
    tab = Tableau(N)
    psi = zero_state(N)
    for name, t in ops:
        apply_clifford(tab, name, t)
        psi = gate_matrix(name, t, N) @ psi
    for q in range(N):
        ez = z_expectation(psi, q, N)
        out, random = tab.measure_z(q, rng)
        if random:
            assert abs(ez) < 1e-9
        else:
            assert np.isclose(ez, out)
        psi = project_z(psi, q, N, out)


def test_tableau_expectation_values():
    tab = Tableau(2)
    tab.h(0)
    tab.cx(0, 1)
    assert tab.expectation(PauliString.from_label("XX")) == 1
    assert tab.expectation(PauliString.from_label("ZZ")) == 1
    assert tab.expectation(PauliString.from_label("YY")) == -1
    assert tab.expectation(PauliString.from_label("ZI")) == 0


def test_tableau_rejects_bad_qubits():
    with pytest.raises(ValueError):
        Tableau(2).h(2)
    with pytest.raises(ValueError):
        apply_clifford(Tableau(2), "T", (0,))


# ---------------------------------------------------------------------------
# frames: Clifford conjugation of the error, checked densely


@settings(max_examples=60, deadline=None)
@given(circuits, st.lists(st.sampled_from("IXYZ"), min_size=N, max_size=N))
def test_frame_propagation_matches_conjugation(ops, start):
    fr = PauliFrames(N, 1, randomize=False)
    for q, c in enumerate(start):
        if c != "I":
            fr.inject([0], q, c)
    U = np.eye(2 ** N, dtype=complex)
    for name, t in ops:
        apply_clifford(fr, name, t)
        U = gate_matrix(name, t, N) @ U
    E = pauli_matrix("".join(start))
    conj = U @ E @ U.conj().T
    got = pauli_matrix(fr.frame(0).label().lstrip("+-i"))
    # equal up to a global phase
    k = np.unravel_index(np.argmax(np.abs(got)), got.shape)
    assert np.allclose(conj, got * conj[k] / got[k])


def test_frame_channel_sampling_frequencies():
    rng = np.random.default_rng(5)
    shots = 200_000
    probs2 = np.zeros(16)
    probs2[[0, 1, 6, 15]] = [0.85, 0.05, 0.04, 0.06]   # II, IX, XY, ZZ
    fr = PauliFrames(2, shots, rng, randomize=False)
    fr.pauli_channel_2([(0, 1)], probs2[None])
    code = (fr.x[0] + 2 * fr.z[0]).astype(int)
    code_b = (fr.x[1] + 2 * fr.z[1]).astype(int)
    # map (x, z) code to I=0, X=1, Y=2, Z=3
    to_p = np.array([0, 1, 3, 2])
    idx = 4 * to_p[code] + to_p[code_b]
    freq = np.bincount(idx, minlength=16) / shots
    se = np.sqrt(probs2 * (1 - probs2) / shots) + 1e-12
    assert np.all(np.abs(freq - probs2) < 5 * se + 1e-9)

    fr = PauliFrames(1, shots, rng, randomize=False)
    fr.pauli_channel_1([0], np.array([[0.1, 0.02, 0.03]]))
    assert abs(fr.x[0].mean() - 0.12) < 5 * np.sqrt(0.12 * 0.88 / shots)
    assert abs(fr.z[0].mean() - 0.05) < 5 * np.sqrt(0.05 * 0.95 / shots)


def test_frame_randomization_gauges_z_only():
    rng = np.random.default_rng(0)
    fr = PauliFrames(1, 10000, rng)
    fr.reset(0)
    assert not fr.x.any()
    assert 0.45 < fr.z.mean() < 0.55
    # a Z frame on |0> does not flip a Z measurement
    assert not fr.measure(0).any()
