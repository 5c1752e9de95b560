"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (see conftest) and then asserts, so the
summary lists every criterion even when some fail.
"""

import math
import time

import numpy as np
import pytest

from _oracles import brute_force_matching, planted_events
from surface17.analysis import (build_correctable_subspace, decode_batch_point,
                                epsilon_from_lifetime, exact_correlators, fidelity_correctable,
                                fidelity_physical, fit_retention, logical_decay_fit,
                                mixed_correlators, run_stabilizer, scaling_study,
                                stabilizer_survey)
from surface17.calibration import (compensation_rounds, dephasing_to_flip, fit_gmm3,
                                   readout_error, synthesize_iq)
from surface17.circuit import memory_circuit, reference_tableau
from surface17.code import STABILIZER_ORDER, build_surface17
from surface17.decoder import (DetectionGraph, EdgeProbabilities, WeightMatrix, decode_shots,
                               estimate_edge_probabilities, mwpm_decode,
                               weights_from_probabilities)
from surface17.experiment import RunConfig, reject_leakage, run_memory_experiment, single_fault_batch
from surface17.noise import average_device, bundled_device
from surface17.pauli import PauliString
from surface17.tableau import Tableau

CYCLES = (1, 2, 4, 8, 16)
SHOTS = 100_000
CODE = build_surface17()


@pytest.fixture(scope="module")
def memory_runs():
    """Bundled-device memory runs shared by criteria 3, 4 and 8."""
    dev = bundled_device()
    out = {}
    for state in ("0L", "+L"):
        points, retention = [], {m: [] for m in ("both", "aux_only", "data_only")}
        for n in CYCLES:
            batch = run_memory_experiment(RunConfig(state, n, SHOTS, 0), dev)
            points.append(decode_batch_point(batch, "both"))
            for mode in retention:
                retention[mode].append(reject_leakage(batch, mode)[1].fraction)
        fit = logical_decay_fit(CYCLES, [p.mean for p in points], [p.stderr for p in points],
                                dev.timing.cycle_ns * 1e-3)
        out[state] = (points, fit, retention)
    return out


def test_criterion_01_exhaustive_single_faults(acceptance):
    t0 = time.time()
    failures, decoded, caught = 0, 0, 0
    dev = bundled_device()
    for state in ("0L", "+L"):
        for n in (1, 2, 3, 4):
            batch, faults = single_fault_batch(dev, state, n)
            g = DetectionGraph.surface17(batch.basis, n)
            wm = weights_from_probabilities(EdgeProbabilities(
                g, np.full(len(g.edges), 0.01), np.full(g.n_vertices, 0.01)))
            ok = batch.herald_ok
            z = decode_shots(batch.subset(ok), wm) * batch.reference_logical
            failures += int((z < 0).sum())
            decoded += int(ok.sum())
            caught += int((~ok).sum())
    dt = time.time() - t0
    passed = failures == 0 and dt < 60
    acceptance(1, "every single fault decodes correctly, n<=4, both bases", passed,
               f"{decoded} faults decoded, {failures} failures, {caught} caught by herald, {dt:.1f} s")
    assert passed


def test_criterion_02_epsilon_formula(acceptance):
    a = epsilon_from_lifetime(16.4, 1.1)
    b = epsilon_from_lifetime(18.2, 1.1)
    passed = abs(a - 0.032) <= 0.001 and abs(b - 0.029) <= 0.001
    acceptance(2, "eps_L from lifetime", passed, f"T=16.4 -> {a:.4f}, T=18.2 -> {b:.4f}")
    assert passed


def test_criterion_03_logical_lifetimes(acceptance, memory_runs):
    t1 = memory_runs["0L"][1].T
    t2 = memory_runs["+L"][1].T
    passed = 15 <= t1 <= 35 and 15 <= t2 <= 35
    acceptance(3, "logical T1 and T2 in [15, 35] us", passed, f"T1L={t1:.1f} us, T2L={t2:.1f} us")
    assert passed


def test_criterion_04_mean_syndrome(acceptance, memory_runs):
    sig = np.mean([memory_runs[s][0][-1].sigma_mean for s in ("0L", "+L")])
    passed = 0.09 <= sig <= 0.19
    acceptance(4, "mean syndrome element in [0.09, 0.19]", passed, f"sigma={sig:.3f} at n=16")
    assert passed


def test_criterion_05_scaling_exponent(acceptance):
    res = scaling_study((1, 2, 5, 10), CYCLES, shots=20_000, seed=0)
    k = res.exponent
    passed = k is not None and -2.3 <= k <= -1.7
    acceptance(5, "scaling exponent in [-2.3, -1.7]", passed,
               f"k={k:.2f}, eps_L={np.round(res.epsilon_L, 5).tolist()}")
    assert passed


def test_criterion_06_weight_estimation(acceptance):
    g = DetectionGraph.surface17("Z", 4)
    rng = np.random.default_rng(0)
    pe = rng.uniform(0.002, 0.03, len(g.edges))
    pb = rng.uniform(0.002, 0.03, g.n_vertices)
    est = estimate_edge_probabilities(g, planted_events(g, pe, pb, SHOTS, rng))
    z = np.concatenate([(est.edge_p - pe) / est.edge_se, (est.boundary_p - pb) / est.boundary_se])
    zero = estimate_edge_probabilities(g, np.zeros((SHOTS, g.n_vertices), bool))
    zeros_ok = not zero.edge_p.any() and not zero.boundary_p.any()
    passed = bool(np.all(np.abs(z) < 3)) and zeros_ok
    acceptance(6, "planted edges within 3 SE; zero noise gives zeros", passed,
               f"max |z|={np.abs(z).max():.2f} over {len(z)} estimates, zeros={zeros_ok}")
    assert passed


def test_criterion_07_matching_equals_brute_force(acceptance):
    mismatches = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        V = int(rng.integers(2, 16))
        w = np.full((V, V), np.inf)
        for i in range(V):
            for j in range(i + 1, V):
                if rng.random() < 0.6:
                    w[i, j] = w[j, i] = rng.uniform(0.5, 6.0)
        par = np.triu(rng.integers(0, 2, (V, V)), 1).astype(np.uint8)
        wm = WeightMatrix(w, par + par.T, rng.uniform(0.5, 6.0, V),
                          rng.integers(0, 2, V).astype(np.uint8))
        ev = np.zeros(V, np.uint8)
        ev[rng.choice(V, int(rng.integers(1, min(8, V) + 1)), replace=False)] = 1
        got = mwpm_decode(wm, ev).weight
        ref = brute_force_matching(np.flatnonzero(ev), wm.w, wm.boundary_w)
        mismatches += not math.isclose(got, ref, rel_tol=1e-12, abs_tol=1e-12)
    acceptance(7, "MWPM weight equals brute force on 100 graphs", mismatches == 0,
               f"{mismatches} mismatches")
    assert mismatches == 0


def test_criterion_08_retained_fractions(acceptance, memory_runs):
    _, _, retention = memory_runs["0L"]
    rc = {m: fit_retention(CYCLES, f).r_c for m, f in retention.items()}
    passed = (abs(rc["both"] - 0.921) <= 0.01 and abs(rc["aux_only"] - 0.925) <= 0.01
              and abs(rc["data_only"] - 0.985) <= 0.005)
    acceptance(8, "retained fraction per cycle", passed,
               ", ".join(f"{m}={v:.4f}" for m, v in rc.items()))
    assert passed


def _subspace_ok(seed) -> bool:
    sub = build_correctable_subspace(seed)
    if sub.flip[0] or sub.weight[0]:
        return False
    if not all(sub.contains(PauliString.single(9, q, op)) for q in range(9) for op in "XYZ"):
        return False
    for n, e in enumerate(sub.errors()):
        anti = [0 if e.commutes(CODE.stabilizer(a).pauli()) else 1 for a in STABILIZER_ORDER]
        if sum(b << k for k, b in enumerate(anti)) != n or not sub.contains(e):
            return False
    return True


def test_criterion_09_fidelity_machinery(acceptance):
    circ = memory_circuit(bundled_device().noiseless(), "0L", 1)
    exact = exact_correlators(reference_tableau(circ, stop_at_tag=("aux", 1, "X4")))
    f0, _, _ = fidelity_physical(exact)
    fc0 = fidelity_correctable(exact, 50).F_c
    fm, _, _ = fidelity_physical(mixed_correlators())
    fcm = fidelity_correctable(mixed_correlators(), 50).F_c
    _, p_l, _ = fidelity_physical(exact_correlators(Tableau(9)))
    bad_seeds = [s for s in range(500) if not _subspace_ok(s)]
    passed = (math.isclose(f0, 1) and math.isclose(fc0, 1) and math.isclose(fm, 1 / 512)
              and math.isclose(fcm, 0.5) and math.isclose(p_l, 1 / 16) and not bad_seeds)
    acceptance(9, "fidelity identities and 500 correctable subspaces", passed,
               f"F_phys={f0:.6f}/{fm:.6f}, F_c={fc0:.6f}/{fcm:.6f}, P_L={p_l:.6f}, "
               f"bad seeds={len(bad_seeds)}")
    assert passed


def test_criterion_10_stabilizer_harness(acceptance):
    clean = bundled_device().noiseless()
    zero = {a: run_stabilizer(clean, a, 500).epsilon for a in STABILIZER_ORDER}
    survey = stabilizer_survey(average_device(), shots=4000, seed=0)
    w2 = survey["weight_two_mean"]
    passed = all(v == 0 for v in zero.values()) and 0.02 <= w2 <= 0.06
    acceptance(10, "stabilizer harness", passed,
               f"zero-noise max eps={max(zero.values())}, weight-two mean={w2:.4f}, "
               f"weight-four mean={survey['weight_four_mean']:.4f}")
    assert passed


def test_criterion_11_calibration(acceptance):
    means = np.array([(1.0, 1.0), (4.0, 1.5), (2.5, 4.0)])
    covs = np.array([np.eye(2) * 0.4, np.eye(2) * 0.35, np.eye(2) * 0.45])
    batch = synthesize_iq(means, covs, SHOTS, np.random.default_rng(0))
    g = fit_gmm3(batch)
    rel = max(np.max(np.abs(g.means - means) / np.abs(means)),
              np.max(np.abs(g.covs - covs)[:, [0, 1], [0, 1]] / covs[:, [0, 1], [0, 1]]))

    rng = np.random.default_rng(0)
    C = np.eye(17) + (1 - np.eye(17)) * 10 ** rng.uniform(-4, -2, (17, 17))
    supp = compensation_rounds(C, 1e-5, np.random.default_rng(1)).suppression

    labels = np.repeat([0, 1, 2], 100)
    assigned = labels.copy()
    assigned[:7] = 2
    assigned[100:103] = 0
    eps3_err = abs(readout_error(assigned, labels, 3) - (1 - (0.93 + 0.97 + 1.0) / 3))
    eps2_err = abs(readout_error(assigned[:200], labels[:200], 2) - (1 - (0.93 + 0.97) / 2))
    pphi_err = abs(dephasing_to_flip(0.8, 600) - 0.5 * (1 - math.exp(-0.48)))

    passed = rel < 0.01 and supp >= 100 and max(eps3_err, eps2_err, pphi_err) < 1e-12
    acceptance(11, "calibration", passed,
               f"GMM max rel err={rel:.4f}, flux suppression={supp:.0f}x, "
               f"closed-form max err={max(eps3_err, eps2_err, pphi_err):.1e}")
    assert passed
