"""Confidence radii for smoothed transition estimates and stationary frequencies.

All logarithms are natural.  Every function accepts scalars or numpy arrays
and broadcasts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np

from .errors import InvalidConfig


@dataclass(frozen=True)
class ConfidenceConfig:
    n: int
    delta: float
    K: int
    S: int
    c: float = 1.1

    def __post_init__(self):
        if not self.c > 1:
            raise InvalidConfig(f"peeling base c must exceed 1, got {self.c}")
        if not 0 < self.delta < 1:
            raise InvalidConfig(f"delta must lie in (0, 1), got {self.delta}")
        if self.n < 1:
            raise InvalidConfig(f"budget n must be >= 1, got {self.n}")
        if self.K < 1 or self.S < 1:
            raise InvalidConfig("K and S must be positive")


def peeling_log(n: int, delta: float, c: float, multiplicity: float) -> float:
    """``c * log(ceil(log n / log c) * multiplicity / delta)``."""
    if n < 2:
        raise InvalidConfig("the peeling log term needs n >= 2")
    if not c > 1 or not 0 < delta < 1:
        raise InvalidConfig("need c > 1 and 0 < delta < 1")
    slices = math.ceil(math.log(n) / math.log(c))
    return c * math.log(slices * multiplicity / delta)


def beta(cfg: ConfidenceConfig) -> float:
    """Confidence level of the index and of the event C (union over ``6 K S^2`` events)."""
    return peeling_log(cfg.n, cfg.delta, cfg.c, 6 * cfg.K * cfg.S ** 2)


def zeta(n: int, delta: float, S: int, c: float = 1.1) -> float:
    """Single-chain level with a union over ``2 S^2`` events."""
    return peeling_log(n, delta, c, 2 * S ** 2)


def sub_gamma_radius(v, b, z):
    """Inverse of the sub-Gamma Legendre transform: ``sqrt(2 v z) + b z``."""
    return np.sqrt(2.0 * v * z) + b * z


def bernstein_markov_radius(P, T_x, zeta_, alpha: float, S: int):
    """Per-entry radius of the smoothed estimator when ``P`` is known."""
    P = np.asarray(P, dtype=np.float64)
    d = np.asarray(T_x, dtype=np.float64) + alpha * S
    if np.ndim(d) == 1 and P.ndim == 2:
        d = d[:, None]
    T = d - alpha * S
    var = P * (1.0 - P)
    return np.sqrt((T / d) * 2.0 * var * zeta_ / d) + (zeta_ / 3.0 + alpha * np.abs(1.0 - S * P)) / d


@dataclass(frozen=True)
class EmpiricalBernsteinConstants:
    zeta: float
    zeta_prime: float
    c1: float
    c2: float

    @classmethod
    def from_zeta(cls, zeta_: float, alpha: float, S: int) -> "EmpiricalBernsteinConstants":
        zp = zeta_ / 3.0 + alpha * (S - 1)
        r8 = math.sqrt(8.0 * zeta_)
        c1 = r8 * (2.0 * zeta_ + zp)
        c2 = (zp ** 2
              + 4.0 * zeta_ * (4.0 * zeta_ + zp + 2.0 * math.sqrt(zeta_ * zp))
              + zp * r8 * (5.3 * math.sqrt(zeta_) + math.sqrt(2.0 * zp)))
        return cls(zeta_, zp, c1, c2)


def empirical_bernstein_radius(P_hat, T_x, consts: EmpiricalBernsteinConstants, alpha: float, S: int):
    """Per-entry radius computed from the estimate itself."""
    P_hat = np.asarray(P_hat, dtype=np.float64)
    T = np.asarray(T_x, dtype=np.float64)
    if np.ndim(T) == 1 and P_hat.ndim == 2:
        T = T[:, None]
    d2 = (T + alpha * S) ** 2
    tv = T * P_hat * (1.0 - P_hat)
    return np.sqrt((2.0 * tv * consts.zeta + consts.c1 * np.sqrt(tv) + consts.c2) / d2)


def stationary_radius(pi_x, gamma: float, n: int, delta: float, pi_min: float):
    """Deviation of the empirical occupancy of a state after ``n`` steps."""
    e = math.log((1.0 / delta) * math.sqrt(2.0 / pi_min))
    pi_x = np.asarray(pi_x, dtype=np.float64)
    return np.sqrt(8.0 * pi_x * (1.0 - pi_x) * e / (gamma * n)) + 20.0 * e / (gamma * n)


def event_c_radius(P, T_x, beta_: float, alpha: float, S: int):
    """Radius defining the event C for entries ``(x, y)``; broadcasts over leading axes."""
    P = np.asarray(P, dtype=np.float64)
    T = np.asarray(T_x, dtype=np.float64)[..., None]
    d = T + alpha * S
    return np.sqrt(2.0 * T * P * (1.0 - P) * beta_) / d + beta_ / (3.0 * d)


def event_c_curve(P, visits: np.ndarray, P_hat: np.ndarray, beta_: float, alpha: float) -> np.ndarray:
    """For each snapshot (leading axis) whether every entry lies inside its radius."""
    S = np.asarray(P).shape[0]
    rad = event_c_radius(P, visits, beta_, alpha, S)
    return np.all(np.abs(P_hat - P) <= rad, axis=(-2, -1))


def event_C_holds(history: Iterable[Tuple[int, np.ndarray, np.ndarray]], truth, cfg: ConfidenceConfig,
                  alpha: float) -> bool:
    """Check the event C over a snapshot history.

    Args:
        history: ``(chain k, P_hat_k, visits_k)`` tuples, one per chain and
            time step that should be covered.
        truth: the ProblemInstance holding the true matrices.
        cfg: budget and confidence level defining beta.
        alpha: smoothing constant used by the estimates.
    """
    b = beta(cfg)
    for k, P_hat, visits in history:
        P = truth.matrices[k].matrix
        if not event_c_curve(P, np.asarray(visits), np.asarray(P_hat), b, alpha):
            return False
    return True


def n_cutoff(instance, delta: float) -> int:
    """Budget beyond which the refined loss bound applies.

    Uses the (truncated) pseudo-spectral gap of every chain.
    """
    K = instance.K
    worst = 0.0
    for a in instance.analyses:
        inner = 300.0 / (a.pseudo_spectral_gap * a.min_stationary) * math.log(
            (2.0 * K / delta) * math.sqrt(1.0 / a.min_stationary))
        worst = max(worst, inner ** 2)
    return int(math.ceil(K * worst))
