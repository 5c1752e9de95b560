"""Exponential decay fits for logical expectation values and retained fractions."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

CYCLE_US = 1.1


class FitError(RuntimeError):
    pass


def epsilon_from_lifetime(T_us: float, t_cycle_us: float = CYCLE_US) -> float:
    """Logical error per cycle, (1 - exp(-t_c/T)) / 2."""
    if T_us <= 0:
        raise ValueError("lifetime must be positive")
    if math.isinf(T_us):
        return 0.0
    return 0.5 * (1.0 - math.exp(-t_cycle_us / T_us))


def error_probability(values) -> np.ndarray:
    """E_L = (1 - |<O_L>|) / 2 per point."""
    return 0.5 * (1.0 - np.abs(np.asarray(values, float)))


@dataclass
class DecayFit:
    A: float
    T: float                # microseconds, inf for a flat series
    A_err: float
    T_err: float
    n: np.ndarray
    values: np.ndarray
    stderr: np.ndarray | None
    residuals: np.ndarray
    t_cycle_us: float = CYCLE_US

    @property
    def epsilon_L(self) -> float:
        return epsilon_from_lifetime(self.T, self.t_cycle_us)

    @property
    def epsilon_L_err(self) -> float:
        if not math.isfinite(self.T):
            return 0.0
        # d eps / d T
        slope = 0.5 * math.exp(-self.t_cycle_us / self.T) * self.t_cycle_us / self.T ** 2
        return slope * self.T_err

    def predict(self, n) -> np.ndarray:
        return self.A * np.exp(-np.asarray(n, float) * self.t_cycle_us / self.T)

    def as_dict(self) -> dict:
        return {"A": self.A, "T_us": self.T, "A_err": self.A_err, "T_err_us": self.T_err,
                "epsilon_L": self.epsilon_L, "epsilon_L_err": self.epsilon_L_err,
                "n": self.n.tolist(), "values": self.values.tolist(),
                "residuals": self.residuals.tolist()}


def logical_decay_fit(n_values, values, stderr=None, t_cycle_us: float = CYCLE_US) -> DecayFit:
    """Least-squares fit of <O_L>(n) = A exp(-n t_c / T), A free, no offset."""
    n = np.asarray(n_values, float)
    v = np.asarray(values, float)
    if n.shape != v.shape:
        raise ValueError("n_values and values must have the same length")
    if len(np.unique(n)) < 3:
        raise ValueError("need at least three distinct cycle counts")
    se = None if stderr is None else np.asarray(stderr, float)
    if np.allclose(v, v[0]) and v[0] > 0:
        # no decay at all: the lifetime is unbounded
        return DecayFit(float(v[0]), math.inf, 0.0, 0.0, n, v, se, np.zeros_like(v), t_cycle_us)
    t = n * t_cycle_us
    model = lambda t, A, T: A * np.exp(-t / T)  # noqa: E731
    # log-linear start values
    pos = v > 0
    if pos.sum() >= 2:
        slope, icpt = np.polyfit(t[pos], np.log(v[pos]), 1)
        p0 = (math.exp(icpt), -1.0 / slope if slope < 0 else 1e3)
    else:
        p0 = (1.0, t.max())
    sigma = None if se is None else np.where(se > 0, se, np.min(se[se > 0], initial=1e-6))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", OptimizeWarning)
            popt, pcov = curve_fit(model, t, v, p0=p0, sigma=sigma,
                                   absolute_sigma=sigma is not None, maxfev=20000)
    except (RuntimeError, OptimizeWarning) as exc:
        raise FitError(f"decay fit did not converge: {exc}") from exc
    A, T = map(float, popt)
    if not T > 0:
        raise FitError(f"fitted lifetime {T} is not positive")
    err = np.sqrt(np.clip(np.diag(pcov), 0, None))
    return DecayFit(A, T, float(err[0]), float(err[1]), n, v, se, v - model(t, A, T), t_cycle_us)


def direct_epsilon(n_values, values) -> float:
    """Per-cycle error from ratios of successive points, averaged over pairs.

    Independent of the fit: (1 - (v_b / v_a)^(1/(n_b - n_a))) / 2.
    """
    n = np.asarray(n_values, float)
    v = np.asarray(values, float)
    order = np.argsort(n)
    n, v = n[order], v[order]
    eps = []
    for a, b in zip(range(len(n) - 1), range(1, len(n))):
        if v[a] > 0 and v[b] > 0 and n[b] > n[a]:
            eps.append(0.5 * (1.0 - (v[b] / v[a]) ** (1.0 / (n[b] - n[a]))))
    if not eps:
        raise FitError("no usable pairs of points")
    w = np.diff(n)[: len(eps)]
    return float(np.average(eps, weights=w))


@dataclass
class RetentionFit:
    A: float
    r_c: float
    r_c_err: float
    n: np.ndarray
    fractions: np.ndarray


def fit_retention(n_values, fractions) -> RetentionFit:
    """Fit r(n) = A r_c^n to retained fractions."""
    n = np.asarray(n_values, float)
    f = np.asarray(fractions, float)
    if len(np.unique(n)) < 2:
        raise ValueError("need at least two distinct cycle counts")
    try:
        popt, pcov = curve_fit(lambda n, A, r: A * r ** n, n, f, p0=(1.0, 0.9),
                               bounds=([0, 0], [2, 1]))
    except RuntimeError as exc:
        raise FitError(f"retention fit did not converge: {exc}") from exc
    err = np.sqrt(np.clip(np.diag(pcov), 0, None))
    return RetentionFit(float(popt[0]), float(popt[1]), float(err[1]), n, f)
