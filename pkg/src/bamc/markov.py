"""Finite Markov chains: validation, structural quantities and simulation.

Everything here is float64 numpy.  Matrices handed out by this module are
read-only so that instances can be shared between replications.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateInstance, NoConvergence, NotErgodic, NotReversible, NotStochastic

ROW_SUM_TOL = 1e-12
REVERSIBILITY_TOL = 1e-10


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TransitionMatrix:
    """A validated row-stochastic ``S x S`` matrix.

    ``ergodic`` is False only for chains admitted through the permissive
    validation mode.
    """

    matrix: np.ndarray
    ergodic: bool = True

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


@dataclass(frozen=True)
class ChainAnalysis:
    stationary: np.ndarray
    min_stationary: float
    gini: np.ndarray
    inv_stationary_sum: float
    reversible: bool
    spectral_gap: Optional[float]
    pseudo_spectral_gap: float

    @property
    def mixing_gap(self) -> float:
        """Spectral gap for reversible chains, pseudo-spectral gap otherwise."""
        return self.spectral_gap if self.reversible else self.pseudo_spectral_gap


@dataclass(frozen=True)
class ProblemInstance:
    matrices: tuple
    analyses: tuple
    lambda_total: float
    eta: np.ndarray
    initial_dists: tuple

    @property
    def K(self) -> int:
        return len(self.matrices)

    @property
    def S(self) -> int:
        return self.matrices[0].size

    @property
    def gini_sums(self) -> np.ndarray:
        return self.eta * self.lambda_total

    @property
    def chains(self):
        return list(zip(self.matrices, self.analyses))


def positivity_pattern_primitive(P: np.ndarray) -> bool:
    """True iff some power of ``P`` is entrywise positive.

    Squares the boolean pattern until the exponent reaches ``S**2``, which
    exceeds Wielandt's bound ``(S-1)**2 + 1``.
    """
    S = P.shape[0]
    A = (P > 0).astype(np.float64)
    exponent = 1
    while exponent < S * S:
        A = ((A @ A) > 0).astype(np.float64)
        exponent *= 2
    return bool(A.all())


def validate_chain(P, allow_non_ergodic: bool = False) -> TransitionMatrix:
    """Check that ``P`` is a row-stochastic, ergodic transition matrix.

    Args:
        P: square array-like of transition probabilities.
        allow_non_ergodic: accept reducible or periodic chains (only the
            generic loss bound applies to them).

    Raises:
        NotStochastic: negative entry, entry above one, or a row sum more
            than ``1e-12`` away from one.
        NotErgodic: no power of ``P`` is entrywise positive.
    """
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise NotStochastic(f"expected a square matrix, got shape {P.shape}")
    if P.shape[0] < 2:
        raise NotStochastic("need at least two states")
    if not np.all(np.isfinite(P)):
        raise NotStochastic("non-finite entry")
    if np.any(P < 0) or np.any(P > 1):
        bad = np.argwhere((P < 0) | (P > 1))[0]
        raise NotStochastic(f"entry ({bad[0]}, {bad[1]}) = {P[tuple(bad)]!r} outside [0, 1]")
    sums = P.sum(axis=1)
    off = np.abs(sums - 1.0)
    if np.any(off > ROW_SUM_TOL):
        row = int(np.argmax(off))
        raise NotStochastic(f"row {row} sums to {sums[row]!r}")
    ergodic = positivity_pattern_primitive(P)
    if not ergodic and not allow_non_ergodic:
        raise NotErgodic("chain is reducible or periodic (no power is entrywise positive)")
    return TransitionMatrix(_frozen(P), ergodic=ergodic)


def _matrix(P) -> np.ndarray:
    return P.matrix if isinstance(P, TransitionMatrix) else np.asarray(P, dtype=np.float64)


def stationary_distribution(P, tol: float = 1e-12, max_iter: int = 100_000) -> np.ndarray:
    """Stationary distribution of an ergodic chain.

    Solves ``(I - P^T + 1 1^T) pi = 1`` directly; falls back to power
    iteration when the system is singular or the residual exceeds ``tol``.
    """
    P = _matrix(P)
    S = P.shape[0]
    A = np.eye(S) - P.T + np.ones((S, S))
    pi = None
    try:
        pi = np.linalg.solve(A, np.ones(S))
        for _ in range(3):
            # iterative refinement
            r = np.ones(S) - A @ pi
            pi = pi + np.linalg.solve(A, r)
    except np.linalg.LinAlgError:
        pi = None
    if pi is not None and np.all(pi > 0):
        pi = pi / pi.sum()
        if np.max(np.abs(pi @ P - pi)) <= tol:
            return pi

    pi = np.full(S, 1.0 / S)
    # lazy version shares pi and is aperiodic
    L = 0.5 * (np.eye(S) + P)
    for _ in range(max_iter):
        nxt = pi @ L
        nxt /= nxt.sum()
        if np.max(np.abs(nxt @ P - nxt)) <= tol:
            if np.all(nxt > 0):
                return nxt
            break
        pi = nxt
    raise NoConvergence(f"stationary distribution did not reach tolerance {tol}")


def gini_index(P) -> np.ndarray:
    """Per-state Gini index ``G(x) = sum_y P(x,y) (1 - P(x,y))``."""
    P = _matrix(P)
    return np.sum(P * (1.0 - P), axis=1)


def is_reversible(P, pi, tol: float = REVERSIBILITY_TOL) -> bool:
    P = _matrix(P)
    flow = pi[:, None] * P
    return bool(np.max(np.abs(flow - flow.T)) <= tol)


def _symmetrized(P, pi) -> np.ndarray:
    r = np.sqrt(pi)
    return r[:, None] * P / r[None, :]


def spectral_gap(P, pi) -> float:
    """Absolute spectral gap ``1 - lambda_star`` of a reversible chain.

    Raises:
        NotReversible: detailed balance fails by more than ``1e-10``.
    """
    P = _matrix(P)
    pi = np.asarray(pi, dtype=np.float64)
    if not is_reversible(P, pi):
        raise NotReversible("detailed balance does not hold")
    A = _symmetrized(P, pi)
    A = 0.5 * (A + A.T)
    mags = np.sort(np.abs(np.linalg.eigvalsh(A)))[::-1]
    return float(1.0 - mags[1])


def pseudo_spectral_gap(P, pi, l_max: int = 32) -> float:
    """Pseudo-spectral gap truncated to ``l <= l_max``.

    The true quantity is a supremum over all ``l >= 1``; the truncation is
    therefore a lower bound.  ``(P*)^l P^l`` is self-adjoint in ``L2(pi)`` and
    similar to ``Q^T Q`` with ``Q = D^{1/2} P^l D^{-1/2}``, so its gap is
    ``1 - s_2(Q)^2``.
    """
    if l_max < 1:
        raise ValueError("l_max must be >= 1")
    P = _matrix(P)
    pi = np.asarray(pi, dtype=np.float64)
    Q1 = _symmetrized(P, pi)
    Q = np.eye(P.shape[0])
    best = 0.0
    for ell in range(1, l_max + 1):
        Q = Q @ Q1
        s = np.linalg.svd(Q, compute_uv=False)
        gap = 1.0 - s[1] ** 2
        best = max(best, gap / ell)
    return float(best)


def analyze_chain(P, l_max: int = 32) -> ChainAnalysis:
    P = _matrix(P)
    pi = stationary_distribution(P)
    try:
        gamma = spectral_gap(P, pi)
        reversible = True
    except NotReversible:
        gamma = None
        reversible = False
    return ChainAnalysis(
        stationary=_frozen(pi),
        min_stationary=float(pi.min()),
        gini=_frozen(gini_index(P)),
        inv_stationary_sum=float(np.sum(1.0 / pi)),
        reversible=reversible,
        spectral_gap=gamma,
        pseudo_spectral_gap=pseudo_spectral_gap(P, pi, l_max),
    )


def build_instance(matrices: Sequence, initial_dists: Optional[Sequence] = None,
                   allow_non_ergodic: bool = False) -> ProblemInstance:
    """Validate ``K`` chains and compute the allocation summary.

    Initial distributions default to uniform.  Non-ergodic chains (permissive
    mode only) carry ``None`` in place of their analysis.
    """
    if len(matrices) < 1:
        raise DegenerateInstance("need at least one chain")
    mats = [m if isinstance(m, TransitionMatrix) else validate_chain(m, allow_non_ergodic)
            for m in matrices]
    S = mats[0].size
    if any(m.size != S for m in mats):
        raise NotStochastic("all chains must share the same state space size")
    analyses = [analyze_chain(m) if m.ergodic else None for m in mats]
    sums = np.array([gini_index(m).sum() for m in mats])
    if np.any(sums <= 0):
        k = int(np.argmin(sums))
        raise DegenerateInstance(f"chain {k} is deterministic (zero total Gini index)")
    lam = float(sums.sum())
    eta = sums / lam
    if initial_dists is None:
        inits = [np.full(S, 1.0 / S) for _ in mats]
    else:
        if len(initial_dists) != len(mats):
            raise ValueError("one initial distribution per chain")
        inits = []
        for k, p in enumerate(initial_dists):
            p = np.asarray(p, dtype=np.float64)
            if p.shape != (S,) or np.any(p < 0) or abs(p.sum() - 1.0) > ROW_SUM_TOL:
                raise NotStochastic(f"initial distribution {k} is not a probability vector")
            inits.append(p)
    return ProblemInstance(
        matrices=tuple(mats),
        analyses=tuple(analyses),
        lambda_total=lam,
        eta=_frozen(eta),
        initial_dists=tuple(_frozen(p) for p in inits),
    )


# -- simulation ---------------------------------------------------------------

def chain_stream(seed: int, chain_id: int) -> np.random.Generator:
    """Counter-based stream keyed by ``(seed, chain_id)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(chain_id,))))


def _cdf(p: np.ndarray) -> np.ndarray:
    # u < 1 always lands on the last positive-probability state
    cdf = np.cumsum(p)
    cdf[np.flatnonzero(p)[-1]:] = 1.0
    return cdf


def _cdf_table(P: np.ndarray) -> np.ndarray:
    return np.stack([_cdf(row) for row in P])


@dataclass
class ChainProcessState:
    """Position of one chain's observation process.

    ``current_state`` is ``None`` before the first pull.  It changes only via
    :func:`step_chain`.
    """

    chain_id: int
    rng: np.random.Generator
    current_state: Optional[int] = None
    steps: int = 0

    @classmethod
    def start(cls, seed: int, chain_id: int) -> "ChainProcessState":
        return cls(chain_id=chain_id, rng=chain_stream(seed, chain_id))


def step_chain(state: ChainProcessState, P, p_init) -> int:
    """Advance the chain one step and return the observed state.

    One uniform variate is consumed per step (inverse-CDF sampling), so the
    bulk sampler :func:`sample_trajectory` reproduces the same path.
    """
    u = state.rng.random()
    if state.current_state is None:
        cdf = _cdf(np.asarray(p_init, dtype=np.float64))
    else:
        cdf = _cdf(_matrix(P)[state.current_state])
    x = int(np.searchsorted(cdf, u, side="right"))
    state.current_state = x
    state.steps += 1
    return x


def sample_trajectory(P, p_init, rng: np.random.Generator, length: int) -> np.ndarray:
    """First ``length`` observations of a chain, identical to repeated :func:`step_chain`."""
    P = _matrix(P)
    out = np.empty(length, dtype=np.int64)
    if length == 0:
        return out
    u = rng.random(length)
    out[0] = np.searchsorted(_cdf(np.asarray(p_init, dtype=np.float64)), u[0], side="right")
    table = _cdf_table(P)
    # next state for every (current state, step) pair, then a cheap sequential walk
    jumps = [np.searchsorted(table[x], u, side="right").tolist() for x in range(P.shape[0])]
    x = int(out[0])
    path = [x]
    for i in range(1, length):
        x = jumps[x][i]
        path.append(x)
    out[:] = path
    return out
