"""Closed-form results of the constant-speed two-state (dichotomous) model.

Baseline quantities for a single microtubule whose tip switches between
growth at speed ``v_plus`` and shrinkage at speed ``v_minus``.  Speeds do
not depend on tubulin concentration here.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import RegimeError

__all__ = [
    "DmnParams",
    "transition_matrix",
    "stationary_distribution",
    "mean_velocity",
    "drift_J",
    "d_eff",
    "mean_length",
    "classical_report",
]


@dataclass(frozen=True)
class DmnParams:
    v_plus: float
    v_minus: float
    f_cat: float
    f_res: float

    def __post_init__(self):
        for name, val in asdict(self).items():
            if not val > 0:
                raise ValueError(f"DmnParams.{name} must be positive, got {val!r}")

    @property
    def total_rate(self) -> float:
        return self.f_cat + self.f_res

    @property
    def tau_c(self) -> float:
        """Velocity relaxation time."""
        return 1.0 / self.total_rate


def transition_matrix(p: DmnParams, t: float) -> np.ndarray:
    """P[i, j] = Pr(state i at t | state j at 0), states ordered (shrinking, growing).

    Columns sum to one.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    e = np.exp(-t * p.total_rate)
    return p.tau_c * np.array([
        [p.f_cat + p.f_res * e, p.f_cat * (1 - e)],
        [p.f_res * (1 - e), p.f_res + p.f_cat * e],
    ])


def stationary_distribution(p: DmnParams) -> tuple[float, float]:
    """(Pr growing, Pr shrinking) in the stationary state."""
    return p.f_res * p.tau_c, p.f_cat * p.tau_c


def mean_velocity(p: DmnParams, p_plus_0: float, t: float) -> float:
    if not 0.0 <= p_plus_0 <= 1.0:
        raise ValueError(f"p_plus_0 must be a probability, got {p_plus_0}")
    v0 = p.v_plus * p_plus_0 - p.v_minus * (1.0 - p_plus_0)
    vinf = drift_J(p)
    return vinf + (v0 - vinf) * np.exp(-p.total_rate * t)


def drift_J(p: DmnParams) -> float:
    """Mean tip velocity; positive means unbounded growth."""
    return (p.v_plus * p.f_res - p.v_minus * p.f_cat) / p.total_rate


def d_eff(p: DmnParams) -> float:
    return p.f_cat * p.f_res * (p.v_plus + p.v_minus) ** 2 / p.total_rate**3


def mean_length(p: DmnParams) -> float:
    """Mean of the exponential length distribution in the bounded regime (J < 0)."""
    denom = p.v_minus * p.f_cat - p.v_plus * p.f_res
    if denom <= 0:
        raise RegimeError(f"mean length undefined: J = {drift_J(p)!r} >= 0 (unbounded growth)")
    return p.v_minus * p.v_plus / denom


def classical_report(p: DmnParams) -> dict:
    J = drift_J(p)
    out = {
        "params": asdict(p),
        "tau_c": p.tau_c,
        "J": J,
        "D_eff": d_eff(p),
        "stationary": dict(zip(("p_plus", "p_minus"), stationary_distribution(p))),
        "regime": "bounded" if J < 0 else ("transition" if J == 0 else "unbounded"),
        "mean_length": mean_length(p) if J < 0 else None,
    }
    return out
