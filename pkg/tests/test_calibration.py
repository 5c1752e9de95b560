import math

import numpy as np
import pytest
from scipy.stats import multivariate_normal, norm

from surface17.calibration import (BELOW_FLOOR, DegenerateMixtureError, GaussianMixture3, IQBatch,
                                   IllConditionedError, compensation_rounds, confusion_matrix,
                                   dephasing_to_flip, drive_crosstalk_ratio, fit_gmm3,
                                   flux_compensation, read_matrix_csv, readout_error,
                                   synthesize_iq, write_matrix_csv)

MEANS = np.array([(1.0, 1.0), (4.0, 1.5), (2.5, 4.0)])
COVS = np.array([[[0.40, 0.05], [0.05, 0.30]],
                 [[0.35, -0.04], [-0.04, 0.45]],
                 [[0.50, 0.00], [0.00, 0.40]]])


@pytest.fixture(scope="module")
def planted_fit():
    batch = synthesize_iq(MEANS, COVS, 100_000, np.random.default_rng(3))
    return batch, fit_gmm3(batch)


def test_gmm_recovers_planted_parameters(planted_fit):
    _, g = planted_fit
    assert np.all(np.abs(g.means - MEANS) / np.abs(MEANS) < 0.01)
    diag = np.abs(np.diagonal(g.covs, axis1=1, axis2=2) - np.diagonal(COVS, axis1=1, axis2=2))
    assert np.all(diag / np.diagonal(COVS, axis1=1, axis2=2) < 0.01)
    assert np.allclose(g.weights, 1 / 3, rtol=0.01)


def test_gmm_error_matches_integrated_overlap(planted_fit):
    batch, g = planted_fit
    # numerical integration of the planted densities over the fitted decision regions
    xs = np.linspace(-3, 8, 551)
    ys = np.linspace(-3, 8, 551)
    X, Y = np.meshgrid(xs, ys)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    cell = (xs[1] - xs[0]) * (ys[1] - ys[0])
    region = g.predict(pts, equal_priors=True)
    stay = [multivariate_normal(MEANS[k], COVS[k]).pdf(pts)[region == k].sum() * cell
            for k in range(3)]
    oracle = 1 - np.mean(stay)
    got = readout_error(g.predict(batch.u, equal_priors=True), batch.label)
    # binomial SE on 3e5 shots is about 2e-4
    assert abs(got - oracle) < 1.5e-3


def test_two_state_error_for_isotropic_pair():
    rng = np.random.default_rng(5)
    means = [(0.0, 0.0), (2.0, 0.0), (1.0, 5.0)]
    batch = synthesize_iq(means, [np.eye(2) * 0.25] * 3, 60_000, rng)
    g = fit_gmm3(batch)
    a2 = g.predict(batch.u, (0, 1), equal_priors=True)
    exact = norm.cdf(-1.0 / 0.5)    # half the separation over sigma
    keep = batch.label < 2
    assert abs(readout_error(a2[keep], batch.label[keep], 2) - exact) < 4e-3


def test_em_log_likelihood_is_monotone(planted_fit):
    batch, g = planted_fit
    # the fit asserts monotonicity internally; restarting from the result cannot improve it
    again = fit_gmm3(batch)
    assert again.log_likelihood == pytest.approx(g.log_likelihood, rel=1e-12)
    assert g.n_iter >= 1 and np.isfinite(g.log_likelihood)
    back = GaussianMixture3.from_dict(g.as_dict())
    assert np.array_equal(back.predict(batch.u[:50]), g.predict(batch.u[:50]))


def test_degenerate_mixture_raises():
    rng = np.random.default_rng(1)
    batch = synthesize_iq([(1, 1), (1, 1), (4, 4)], [np.eye(2) * 0.3] * 3, 2000, rng)
    with pytest.raises(DegenerateMixtureError):
        fit_gmm3(batch)
    with pytest.raises(ValueError):
        fit_gmm3(IQBatch(batch.u[:10], np.zeros(10)))
    with pytest.raises(ValueError):
        IQBatch(np.zeros((3, 3)), np.zeros(3))


def test_iq_json_roundtrip():
    b = synthesize_iq(MEANS, COVS, 5, np.random.default_rng(0))
    back = IQBatch.from_json(b.to_json())
    assert np.array_equal(back.u, b.u) and np.array_equal(back.label, b.label)


def test_readout_error_closed_form():
    labels = np.repeat([0, 1, 2], [1000, 1000, 1000])
    assigned = labels.copy()
    assigned[:13] = 1                  # P(0|0) = 0.987
    assigned[1000:1050] = 0            # P(1|1) = 0.95
    assigned[2000:2100] = 1            # P(2|2) = 0.90
    M = confusion_matrix(assigned, labels)
    assert np.allclose(M.sum(1), 1.0)
    eps3 = 1 - (0.987 + 0.95 + 0.90) / 3
    eps2 = 1 - (0.987 + 0.95) / 2
    assert abs(readout_error(assigned, labels, 3) - eps3) < 1e-12
    assert abs(readout_error(assigned[:2000], labels[:2000], 2) - eps2) < 1e-12
    with pytest.raises(ValueError):
        readout_error(assigned, labels, 4)


# ---------------------------------------------------------------------------
# flux crosstalk


def _crosstalk(n, rng):
    off = 10 ** rng.uniform(-4, -2, (n, n)) * rng.choice([-1, 1], (n, n))
    return np.eye(n) + off * (1 - np.eye(n))


def test_flux_compensation_suppression():
    C = _crosstalk(17, np.random.default_rng(0))
    rep = compensation_rounds(C, 1e-5, np.random.default_rng(1))
    assert rep.suppression >= 100
    assert rep.after_true < rep.before / 100
    two = compensation_rounds(C, 1e-5, np.random.default_rng(1), rounds=2)
    assert two.after_true <= 2 * rep.after_true


def test_flux_solution_and_conditioning():
    C = _crosstalk(5, np.random.default_rng(2))
    phi = np.array([0.1, -0.2, 0.0, 0.3, 0.05])
    v, cond = flux_compensation(C, phi)
    assert np.allclose(C @ v, phi, atol=1e-14) and cond >= 1
    singular = np.ones((3, 3))
    with pytest.raises(IllConditionedError):
        flux_compensation(singular, np.zeros(3))
    with pytest.raises(ValueError):
        flux_compensation(np.zeros((2, 3)), np.zeros(2))
    with pytest.raises(ValueError):
        compensation_rounds(C, 1e-5, np.random.default_rng(0), rounds=0)


def test_matrix_csv_roundtrip(tmp_path):
    C = _crosstalk(4, np.random.default_rng(3))
    write_matrix_csv(tmp_path / "c.csv", C)
    assert np.allclose(read_matrix_csv(tmp_path / "c.csv"), C, rtol=1e-11)


# ---------------------------------------------------------------------------
# drive crosstalk and dephasing


def test_drive_crosstalk_ratio():
    assert drive_crosstalk_ratio(1.0, 0.1) == pytest.approx(1.0, abs=1e-12)
    assert drive_crosstalk_ratio(1.0, 0.03) == pytest.approx(-math.log10(0.03), abs=1e-12)
    assert drive_crosstalk_ratio(1.0, 0.01) == BELOW_FLOOR
    with pytest.raises(ValueError):
        drive_crosstalk_ratio(0.0, 0.1)


@pytest.mark.parametrize("gamma,tau", [(0.0, 500.0), (0.5, 420.0), (2.0, 1000.0), (1e-3, 1.0)])
def test_dephasing_closed_form(gamma, tau):
    exact = 0.5 * (1 - math.exp(-gamma * tau / 1000))
    assert abs(dephasing_to_flip(gamma, tau) - exact) < 1e-12
    assert 0 <= dephasing_to_flip(gamma, tau) < 0.5
    with pytest.raises(ValueError):
        dephasing_to_flip(-1.0, tau)
