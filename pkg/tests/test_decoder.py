import itertools
import math

import numpy as np
import pytest

from _oracles import brute_force_matching, planted_events
from surface17.decoder import (DetectionGraph, EdgeProbabilities, WeightMatrix, decode_batch,
                               estimate_edge_probabilities, mwpm_decode, path_sum_probabilities,
                               weights_from_dict, weights_from_probabilities, weights_to_dict)
from surface17.decoder.matching import correct_logical


def random_weight_matrix(rng, V, density=0.6):
    w = np.full((V, V), np.inf)
    for i, j in itertools.combinations(range(V), 2):
        if rng.random() < density:
            w[i, j] = w[j, i] = rng.uniform(0.5, 6.0)
    par = rng.integers(0, 2, (V, V)).astype(np.uint8)
    par = np.triu(par, 1)
    par = par + par.T
    bw = rng.uniform(0.5, 6.0, V)
    bpar = rng.integers(0, 2, V).astype(np.uint8)
    return WeightMatrix(w, par, bw, bpar)


def matching_weight(wm, res):
    return (sum(wm.w[u, v] for u, v in res.pairs) + sum(wm.boundary_w[u] for u in res.boundary))


@pytest.mark.parametrize("limit", [12, 2])
def test_matching_equals_brute_force(limit):
    # limit=2 routes every larger component through the blossom fallback
    for seed in range(100):
        rng = np.random.default_rng(seed)
        V = int(rng.integers(2, 16))
        wm = random_weight_matrix(rng, V)
        k = int(rng.integers(1, min(8, V) + 1))
        ev = np.zeros(V, np.uint8)
        ev[rng.choice(V, k, replace=False)] = 1
        res = mwpm_decode(wm, ev, limit=limit)
        ref = brute_force_matching(np.flatnonzero(ev), wm.w, wm.boundary_w)
        assert math.isclose(res.weight, ref, rel_tol=1e-12, abs_tol=1e-12)
        assert math.isclose(matching_weight(wm, res), res.weight, rel_tol=1e-12)
        assert res.matched_vertices == sorted(np.flatnonzero(ev).tolist())


def test_batch_decoder_agrees_with_single_shot():
    rng = np.random.default_rng(11)
    wm = random_weight_matrix(rng, 14)
    events = rng.random((300, 14)) < 0.25
    M = decode_batch(wm, events)
    single = [mwpm_decode(wm, e).M for e in events]
    assert np.array_equal(M, single)
    # large shots exercise the blossom fallback inside the batch path
    M_small = decode_batch(wm, events, limit=3)
    for s, e in enumerate(events):
        res = mwpm_decode(wm, e, limit=3)
        assert res.M == M_small[s]


def test_empty_shot_and_correct_logical():
    rng = np.random.default_rng(0)
    wm = random_weight_matrix(rng, 6)
    res = mwpm_decode(wm, np.zeros(6))
    assert res.pairs == [] and res.boundary == [] and res.weight == 0.0 and res.M == 0
    fb = np.array([[1, -1, 1], [1, 1, 1]], np.int8)
    assert correct_logical(fb, np.array([0, 1]), [0, 1, 2]).tolist() == [-1, -1]


def test_detection_graph_structure():
    g = DetectionGraph.surface17("Z", 3)
    assert g.n_vertices == 16
    kinds = {k: sum(e.kind == k for e in g.edges) for k in ("time", "meas", "space", "diag")}
    assert kinds["time"] == 4 * 3
    assert kinds["space"] == 3 * 4          # three shared-qubit pairs per layer
    assert kinds["meas"] == 4 * 2           # m -> m+2 among aux layers and final
    # the logical string crosses the boundary an odd number of times overall
    assert g.boundary_parity.sum() >= 1
    with pytest.raises(ValueError):
        DetectionGraph.surface17("Y", 2)
    with pytest.raises(ValueError):
        DetectionGraph.surface17("Z", 0)


def _planted(seed, basis="Z", n=4, shots=100_000):
    g = DetectionGraph.surface17(basis, n)
    rng = np.random.default_rng(seed)
    pe = rng.uniform(0.002, 0.03, len(g.edges))
    pb = rng.uniform(0.002, 0.03, g.n_vertices)
    ev = planted_events(g, pe, pb, shots, rng)
    return g, pe, pb, estimate_edge_probabilities(g, ev)


def test_planted_edges_within_three_se():
    g, pe, pb, est = _planted(0)
    assert np.all(np.abs(est.edge_p - pe) < 3 * est.edge_se)
    assert np.all(np.abs(est.boundary_p - pb) < 3 * est.boundary_se)


def test_standard_errors_are_calibrated():
    z = []
    for seed in range(1, 9):
        g, pe, pb, est = _planted(seed, "X" if seed % 2 else "Z", 3, 50_000)
        z.append((est.edge_p - pe) / est.edge_se)
    z = np.concatenate(z)
    assert 0.85 < z.std() < 1.15
    assert abs(z.mean()) < 0.2
    assert np.mean(np.abs(z) > 3) < 0.01


def test_zero_noise_recovers_zero():
    g = DetectionGraph.surface17("X", 5)
    est = estimate_edge_probabilities(g, np.zeros((1000, g.n_vertices), bool))
    assert np.all(est.edge_p == 0) and np.all(est.boundary_p == 0)
    assert np.all(est.edge_se == 0)


def test_estimator_input_checks():
    g = DetectionGraph.surface17("Z", 2)
    with pytest.raises(ValueError):
        estimate_edge_probabilities(g, np.zeros((1000, 5), bool))
    with pytest.raises(ValueError):
        estimate_edge_probabilities(g, np.zeros((10, g.n_vertices), bool))


def test_path_sums_on_a_chain():
    # three vertices in a line; the 0-2 pair is reachable only through 1
    g = DetectionGraph.surface17("Z", 1)
    pe = np.zeros(len(g.edges))
    pb = np.zeros(g.n_vertices)
    probs = EdgeProbabilities(g, pe, pb)
    e0 = g.edges[0]
    pe[0] = 0.1
    ps = path_sum_probabilities(g, probs, cap=4)
    assert math.isclose(ps.pair_p[e0.u, e0.v], 0.1)
    assert ps.pair_parity[e0.u, e0.v] == e0.parity
    # a second edge from e0.v opens a two-step path with probability product
    other = next(k for k, e in enumerate(g.edges)
                 if k > 0 and e0.v in (e.u, e.v) and e0.u not in (e.u, e.v))
    pe[other] = 0.2
    e1 = g.edges[other]
    far = e1.v if e1.u == e0.v else e1.u
    ps = path_sum_probabilities(g, EdgeProbabilities(g, pe, pb), cap=4)
    assert math.isclose(ps.pair_p[e0.u, far], 0.02)
    ps1 = path_sum_probabilities(g, EdgeProbabilities(g, pe, pb), cap=1)
    assert ps1.pair_p[e0.u, far] == 0.0
    with pytest.raises(ValueError):
        path_sum_probabilities(g, probs, cap=0)


def test_weights_dict_roundtrip():
    g, pe, pb, est = _planted(3, "X", 2, 20_000)
    doc = weights_to_dict(est, 4, {"state": "+L"})
    back, cap = weights_from_dict(doc)
    assert cap == 4
    assert np.allclose(back.edge_p, est.edge_p) and np.allclose(back.boundary_p, est.boundary_p)
    a = weights_from_probabilities(est, 4)
    b = weights_from_probabilities(back, cap)
    assert np.array_equal(a.w, b.w)
    e = doc["edges"][0]
    assert math.isclose(e["w"], -math.log(e["p"]))
