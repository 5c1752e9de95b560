"""Calibration analyses on synthetic data.

Three-state readout classification with a Gaussian mixture, flux-crosstalk
compensation, drive-crosstalk ratios and measurement-induced dephasing.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

# ---------------------------------------------------------------------------
# readout: IQ data and three-component Gaussian mixture


@dataclass
class IQBatch:
    u: np.ndarray        # (shots, 2) integrated quadratures
    label: np.ndarray    # (shots,) prepared state 0, 1 or 2

    def __post_init__(self):
        self.u = np.asarray(self.u, float)
        self.label = np.asarray(self.label, int)
        if self.u.ndim != 2 or self.u.shape[1] != 2:
            raise ValueError("u must have shape (shots, 2)")
        if len(self.label) != len(self.u):
            raise ValueError("one label per shot required")
        if not np.all(np.isfinite(self.u)):
            raise ValueError("IQ values must be finite")

    def to_json(self) -> str:
        return json.dumps({"u": self.u.tolist(), "label": self.label.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "IQBatch":
        d = json.loads(text)
        return cls(np.array(d["u"], float), np.array(d["label"], int))


def synthesize_iq(means, covs, shots_per_state: int, rng: np.random.Generator) -> IQBatch:
    """Draw ``shots_per_state`` points from each planted Gaussian."""
    us, labels = [], []
    for k, (m, c) in enumerate(zip(means, covs)):
        us.append(rng.multivariate_normal(np.asarray(m, float), np.asarray(c, float),
                                          shots_per_state))
        labels.append(np.full(shots_per_state, k))
    return IQBatch(np.concatenate(us), np.concatenate(labels))


class DegenerateMixtureError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


def _logpdf(u, mean, cov):
    d = u - mean
    chol = np.linalg.cholesky(cov)
    sol = np.linalg.solve(chol, d.T)
    return -0.5 * np.sum(sol * sol, 0) - np.log(np.diag(chol)).sum() - math.log(2 * math.pi)


@dataclass
class GaussianMixture3:
    means: np.ndarray     # (3, 2)
    covs: np.ndarray      # (3, 2, 2)
    weights: np.ndarray   # (3,)
    log_likelihood: float = float("nan")
    n_iter: int = 0

    def log_joint(self, u, equal_priors: bool = False) -> np.ndarray:
        u = np.asarray(u, float)
        w = np.full(3, 1 / 3) if equal_priors else self.weights
        return np.stack([np.log(w[k]) + _logpdf(u, self.means[k], self.covs[k])
                         for k in range(3)], axis=1)

    def predict(self, u, components=(0, 1, 2), equal_priors: bool = False) -> np.ndarray:
        """Maximum-likelihood assignment restricted to ``components``."""
        lj = self.log_joint(u, equal_priors)[:, list(components)]
        return np.asarray(components)[np.argmax(lj, axis=1)]

    def as_dict(self) -> dict:
        return {"means": self.means.tolist(), "covs": self.covs.tolist(),
                "weights": self.weights.tolist(), "log_likelihood": self.log_likelihood,
                "n_iter": self.n_iter}

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianMixture3":
        return cls(np.array(d["means"], float), np.array(d["covs"], float),
                   np.array(d["weights"], float), d.get("log_likelihood", float("nan")),
                   d.get("n_iter", 0))


def _check_separation(means, covs, min_distance: float):
    for a in range(3):
        for b in range(a + 1, 3):
            d = means[a] - means[b]
            pooled = 0.5 * (covs[a] + covs[b])
            dist = math.sqrt(float(d @ np.linalg.solve(pooled, d)))
            if dist < min_distance:
                raise DegenerateMixtureError(
                    f"components {a} and {b} are not separable (Mahalanobis distance {dist:.3g})")


def fit_gmm3(batch: IQBatch, max_iter: int = 500, tol: float = 1e-9,
             min_separation: float = 0.1, reg: float = 1e-9) -> GaussianMixture3:
    """EM fit of three 2-D Gaussians, started from the per-label statistics.

    The log-likelihood is checked to be non-decreasing at every iteration.
    Raises ``DegenerateMixtureError`` when two components coincide.
    """
    u = batch.u
    present = set(np.unique(batch.label).tolist())
    if present != {0, 1, 2}:
        raise ValueError(f"need shots prepared in 0, 1 and 2; got {sorted(present)}")
    n = len(u)
    means = np.array([u[batch.label == k].mean(0) for k in range(3)])
    covs = np.array([np.cov(u[batch.label == k].T) + reg * np.eye(2) for k in range(3)])
    weights = np.array([np.mean(batch.label == k) for k in range(3)])
    _check_separation(means, covs, min_separation)

    prev = -np.inf
    for it in range(1, max_iter + 1):
        lj = np.stack([np.log(weights[k]) + _logpdf(u, means[k], covs[k]) for k in range(3)], 1)
        norm = logsumexp(lj, axis=1)
        ll = float(norm.sum())
        if ll < prev - 1e-9 * abs(prev):
            raise AssertionError(f"EM log-likelihood decreased at iteration {it}: {prev} -> {ll}")
        resp = np.exp(lj - norm[:, None])
        nk = resp.sum(0)
        if np.any(nk < 1e-9 * n):
            raise DegenerateMixtureError("a mixture component lost all its weight")
        weights = nk / n
        means = (resp.T @ u) / nk[:, None]
        for k in range(3):
            d = u - means[k]
            covs[k] = (resp[:, k, None] * d).T @ d / nk[k] + reg * np.eye(2)
        if ll - prev < tol * abs(ll):
            _check_separation(means, covs, min_separation)
            return GaussianMixture3(means, covs, weights, ll, it)
        prev = ll
    raise ConvergenceError(f"EM did not converge in {max_iter} iterations")


def confusion_matrix(assigned, labels, n_states: int = 3) -> np.ndarray:
    """P(assigned j | prepared i), rows = prepared."""
    assigned = np.asarray(assigned)
    labels = np.asarray(labels)
    out = np.zeros((n_states, n_states))
    for i in range(n_states):
        sel = labels == i
        if not sel.any():
            raise ValueError(f"no shots prepared in state {i}")
        out[i] = np.bincount(assigned[sel], minlength=n_states)[:n_states] / sel.sum()
    return out


def readout_error(assigned, labels, n_states: int = 3) -> float:
    """eps^(N) = 1 - (1/N) sum_i P(i|i), over prepared states 0..N-1."""
    if n_states not in (2, 3):
        raise ValueError("N must be 2 or 3")
    return float(1.0 - np.mean(np.diag(confusion_matrix(assigned, labels, n_states))))


# ---------------------------------------------------------------------------
# flux crosstalk


class IllConditionedError(ValueError):
    pass


def flux_compensation(C, phi_target, max_condition: float = 1e10) -> tuple[np.ndarray, float]:
    """Voltages V' = C^-1 Phi' and the condition number of C."""
    C = np.asarray(C, float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError("crosstalk matrix must be square")
    if np.any(np.diag(C) == 0):
        raise ValueError("crosstalk matrix needs a nonzero diagonal")
    cond = float(np.linalg.cond(C))
    if not np.isfinite(cond) or cond > max_condition:
        raise IllConditionedError(f"crosstalk matrix is ill conditioned (cond = {cond:.3g})")
    return np.linalg.solve(C, np.asarray(phi_target, float)), cond


def normalized(C) -> np.ndarray:
    """Each column (flux line) divided by its diagonal element."""
    C = np.asarray(C, float)
    return C / np.diag(C)[None, :]


def off_diagonal(M) -> np.ndarray:
    M = np.asarray(M)
    return M[~np.eye(len(M), dtype=bool)]


def measure_crosstalk(C_true, noise: float, rng: np.random.Generator) -> np.ndarray:
    """Simulated characterization: C_true plus Gaussian noise on every element."""
    C_true = np.asarray(C_true, float)
    return C_true + noise * rng.standard_normal(C_true.shape)


@dataclass
class CompensationReport:
    rounds: int
    residual_true: np.ndarray       # C_true K, normalized
    residual_measured: np.ndarray   # its noisy re-measurement
    before: float                   # mean |off-diagonal| of normalized C_true
    after_true: float
    after_measured: float
    condition: float

    @property
    def suppression(self) -> float:
        return self.before / self.after_measured if self.after_measured > 0 else math.inf

    def as_dict(self) -> dict:
        return {"rounds": self.rounds, "before": self.before, "after_true": self.after_true,
                "after_measured": self.after_measured, "suppression": self.suppression,
                "condition": self.condition}


def compensation_rounds(C_true, noise: float, rng: np.random.Generator,
                        rounds: int = 1) -> CompensationReport:
    """Measure C, compensate with its inverse, re-measure; repeat ``rounds`` times.

    Round r uses K_r = K_{r-1} C~_{r-1}^-1, where C~ is the measured
    crosstalk with the previous compensation active.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    C_true = np.asarray(C_true, float)
    K = np.eye(len(C_true))
    measured = measure_crosstalk(C_true, noise, rng)
    cond = 0.0
    for _ in range(rounds):
        _, cond = flux_compensation(measured, np.zeros(len(C_true)))
        K = K @ np.linalg.inv(measured)
        residual = C_true @ K
        measured = measure_crosstalk(residual, noise, rng)
    before = float(np.mean(np.abs(off_diagonal(normalized(C_true)))))
    res_true = normalized(residual)
    res_meas = normalized(measured)
    return CompensationReport(rounds, res_true, res_meas, before,
                              float(np.mean(np.abs(off_diagonal(res_true)))),
                              float(np.mean(np.abs(off_diagonal(res_meas)))), cond)


def read_matrix_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def write_matrix_csv(path, M) -> None:
    np.savetxt(path, np.asarray(M, float), delimiter=",", fmt="%.12g")


# ---------------------------------------------------------------------------
# drive crosstalk and measurement-induced dephasing

DRIVE_FLOOR = 1.6
BELOW_FLOOR = "< -1.6"


def drive_crosstalk_ratio(a_target: float, a_cross: float, floor: float = DRIVE_FLOOR):
    """-log10(a_cross / a_target); suppression beyond ``floor`` decades returns a sentinel."""
    if a_target <= 0 or a_cross <= 0:
        raise ValueError("amplitudes must be positive")
    value = -math.log10(a_cross / a_target)
    if value > floor:
        return BELOW_FLOOR
    return value


def dephasing_to_flip(gamma_per_us: float, tau_ns: float) -> float:
    """Phase-flip probability (1 - exp(-Gamma tau)) / 2."""
    if gamma_per_us < 0 or tau_ns < 0:
        raise ValueError("rate and duration must be non-negative")
    return 0.5 * (1.0 - math.exp(-gamma_per_us * tau_ns * 1e-3))
