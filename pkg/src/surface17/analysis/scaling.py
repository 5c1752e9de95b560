"""Projected logical error versus a uniform improvement of every physical error."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..noise import DeviceParams, average_device
from .memory import memory_sweep

DEFAULT_FACTORS = (1.0, 2.0, 5.0, 10.0)


@dataclass
class ScalingResult:
    factors: np.ndarray
    epsilon_L: np.ndarray           # mean over states, per factor
    per_state: dict                 # state -> array of eps_L per factor
    exponent: float | None
    exponent_err: float | None
    prefactor: float | None
    fits: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"factors": self.factors.tolist(), "epsilon_L": self.epsilon_L.tolist(),
                "per_state": {k: v.tolist() for k, v in self.per_state.items()},
                "exponent": self.exponent, "exponent_err": self.exponent_err,
                "prefactor": self.prefactor}


def power_law_fit(x, y) -> tuple[float, float, float]:
    """Fit y = c x^k on log-log axes; returns (k, k_err, c)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    ok = (x > 0) & (y > 0)
    if ok.sum() < 2:
        raise ValueError("need two positive points for a power-law fit")
    lx, ly = np.log(x[ok]), np.log(y[ok])
    if ok.sum() == 2:
        k = (ly[1] - ly[0]) / (lx[1] - lx[0])
        return float(k), float("nan"), float(np.exp(ly[0] - k * lx[0]))
    coef, cov = np.polyfit(lx, ly, 1, cov=True)
    return float(coef[0]), float(np.sqrt(cov[0, 0])), float(np.exp(coef[1]))


def scaling_study(factors=DEFAULT_FACTORS, n_values=(1, 2, 4, 8, 16), shots: int = 20000,
                  seed: int = 0, device: DeviceParams | None = None,
                  states=("0L", "+L"), workers: int = 1) -> ScalingResult:
    """eps_L(x) for a uniform device whose error parameters are divided by x.

    The base device defaults to the table's average column without leakage.
    """
    factors = np.asarray(factors, float)
    if np.any(factors < 1):
        raise ValueError("improvement factors must be >= 1")
    base = device or average_device()
    per_state = {s: np.zeros(len(factors)) for s in states}
    fits = {}
    for i, x in enumerate(factors):
        dev = base.scaled(float(x))
        for s in states:
            _, fit = memory_sweep(dev, s, n_values, shots, seed, rejection="none",
                                  workers=workers)
            per_state[s][i] = fit.epsilon_L
            fits[(float(x), s)] = fit
    eps = np.mean([per_state[s] for s in states], axis=0)
    try:
        k, k_err, c = power_law_fit(factors, eps)
    except ValueError:
        k = k_err = c = None
    return ScalingResult(factors, eps, per_state, k, k_err, c, fits)
