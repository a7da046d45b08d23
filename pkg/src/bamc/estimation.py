"""Sufficient statistics of the observation stream, the smoothed estimator and losses."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .errors import NoSamples


@dataclass
class ChainCounts:
    """Counts for a single chain.

    ``transitions[x, y]`` counts consecutive observations ``(x, y)``.  The
    most recent observation has no outgoing transition yet, hence
    ``transitions.sum(1) == visits - onehot(last_state)``.
    """

    visits: np.ndarray
    transitions: np.ndarray
    last_state: Optional[int] = None

    @classmethod
    def empty(cls, S: int) -> "ChainCounts":
        return cls(np.zeros(S, dtype=np.int64), np.zeros((S, S), dtype=np.int64))

    @property
    def total(self) -> int:
        return int(self.visits.sum())

    @property
    def S(self) -> int:
        return self.visits.shape[0]

    def copy(self) -> "ChainCounts":
        return ChainCounts(self.visits.copy(), self.transitions.copy(), self.last_state)


@dataclass
class ObservationCounts:
    chains: List[ChainCounts]
    t: int = 0

    @classmethod
    def empty(cls, K: int, S: int) -> "ObservationCounts":
        return cls([ChainCounts.empty(S) for _ in range(K)])

    @property
    def pulls(self) -> np.ndarray:
        return np.array([c.total for c in self.chains], dtype=np.int64)

    def __getitem__(self, k: int) -> ChainCounts:
        return self.chains[k]


@dataclass(frozen=True)
class SmoothingConfig:
    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    @classmethod
    def default(cls, S: int) -> "SmoothingConfig":
        return cls(1.0 / (3 * S))


def record_observation(counts: ObservationCounts, k: int, x: int) -> ObservationCounts:
    """Register that chain ``k`` was pulled and observed in state ``x`` (in place)."""
    c = counts.chains[k]
    if not 0 <= x < c.S:
        raise IndexError(f"state {x} outside [0, {c.S})")
    if c.last_state is not None:
        c.transitions[c.last_state, x] += 1
    c.visits[x] += 1
    c.last_state = x
    counts.t += 1
    return counts


def _alpha(cfg) -> float:
    return cfg.alpha if isinstance(cfg, SmoothingConfig) else float(cfg)


def smoothed_estimate(counts_k: ChainCounts, cfg) -> np.ndarray:
    """``(alpha + N(x, y)) / (alpha S + T_x)``.

    The denominator is the visit count, so the row of the last observed
    state sums to slightly less than one.
    """
    a = _alpha(cfg)
    S = counts_k.S
    return (a + counts_k.transitions) / (a * S + counts_k.visits)[:, None]


def empirical_stationary(counts_k: ChainCounts) -> np.ndarray:
    T = counts_k.total
    if T == 0:
        raise NoSamples("chain has not been sampled")
    return counts_k.visits / T


def empirical_gini(P_hat: np.ndarray) -> np.ndarray:
    P_hat = np.asarray(P_hat, dtype=np.float64)
    return np.sum(P_hat * (1.0 - P_hat), axis=-1)


def row_errors(P, P_hat) -> np.ndarray:
    """Squared L2 distance between matching rows."""
    d = np.asarray(P, dtype=np.float64) - P_hat
    return np.sum(d * d, axis=-1)


@dataclass
class LossReport:
    """Per-chain and max losses after ``n`` rounds.

    ``weighted`` uses the empirical occupancy, ``unweighted`` unit weights,
    ``pseudo`` the true stationary distribution.
    """

    per_chain: np.ndarray
    per_chain_unweighted: np.ndarray
    per_chain_pseudo: Optional[np.ndarray]
    fractions: np.ndarray

    @property
    def weighted(self) -> float:
        return float(self.per_chain.max())

    @property
    def unweighted(self) -> float:
        return float(self.per_chain_unweighted.max())

    @property
    def pseudo(self) -> Optional[float]:
        return None if self.per_chain_pseudo is None else float(self.per_chain_pseudo.max())


def _true(truth, k):
    return np.asarray(truth.matrices[k].matrix if hasattr(truth, "matrices") else truth[k])


def loss_weighted(counts: ObservationCounts, estimates: Sequence[np.ndarray], truth):
    """Return ``(L_k for every chain, max_k L_k)``.

    ``truth`` is a ProblemInstance or a sequence of true matrices.
    """
    per = np.empty(len(estimates))
    for k, P_hat in enumerate(estimates):
        pi_hat = empirical_stationary(counts.chains[k])
        per[k] = float(pi_hat @ row_errors(_true(truth, k), P_hat))
    return per, float(per.max())


def loss_unweighted(estimates: Sequence[np.ndarray], truth):
    per = np.array([row_errors(_true(truth, k), P_hat).sum() for k, P_hat in enumerate(estimates)])
    return per, float(per.max())


def loss_pseudo(estimates: Sequence[np.ndarray], truth):
    """Loss weighted by the true stationary distributions (needs a ProblemInstance)."""
    per = np.array([
        float(truth.analyses[k].stationary @ row_errors(_true(truth, k), P_hat))
        for k, P_hat in enumerate(estimates)
    ])
    return per, float(per.max())


def loss_report(counts: ObservationCounts, truth, cfg) -> LossReport:
    estimates = [smoothed_estimate(c, cfg) for c in counts.chains]
    per, _ = loss_weighted(counts, estimates, truth)
    per_u, _ = loss_unweighted(estimates, truth)
    per_p = None
    if all(a is not None for a in truth.analyses):
        per_p, _ = loss_pseudo(estimates, truth)
    pulls = counts.pulls
    return LossReport(per, per_u, per_p, pulls / pulls.sum())


# -- counts along a whole trajectory ------------------------------------------

def count_curves(trajectory: np.ndarray, S: int):
    """Counts after every prefix of a chain's observation sequence.

    Returns ``(visits, transitions)`` of shapes ``(M + 1, S)`` and
    ``(M + 1, S, S)`` where row ``m`` holds the counts after ``m`` pulls,
    exactly as repeated :func:`record_observation` would produce them.
    """
    traj = np.asarray(trajectory, dtype=np.int64)
    M = traj.shape[0]
    visits = np.zeros((M + 1, S), dtype=np.int64)
    np.cumsum(np.eye(S, dtype=np.int64)[traj], axis=0, out=visits[1:])
    trans = np.zeros((M + 1, S * S), dtype=np.int64)
    if M >= 2:
        pairs = traj[:-1] * S + traj[1:]
        np.cumsum(np.eye(S * S, dtype=np.int64)[pairs], axis=0, out=trans[2:])
    return visits, trans.reshape(M + 1, S, S)


def counts_at(trajectory: np.ndarray, S: int, m: int) -> ChainCounts:
    """Counts after the first ``m`` observations."""
    traj = np.asarray(trajectory[:m], dtype=np.int64)
    visits = np.bincount(traj, minlength=S).astype(np.int64)
    trans = np.zeros((S, S), dtype=np.int64)
    if m >= 2:
        np.add.at(trans, (traj[:-1], traj[1:]), 1)
    return ChainCounts(visits, trans, int(traj[-1]) if m else None)
