"""The BA-MC index policy, baseline allocations and closed-form loss bounds.

Chain ids are 0-based throughout; rounds ``t`` are 1-based.

Simulation engine
-----------------
Each chain consumes its own random stream and does not move between pulls,
so the ``m``-th observation of chain ``k`` is fixed by its stream no matter
when the pull happens.  :func:`run_policy` therefore samples every chain's
path up front, computes its index after each possible pull count in one
vectorised pass, and replays the allocation rule on those curves.  Passing
``stepwise=True`` runs the literal round-by-round protocol instead; both
routes are bit-identical (see ``tests/test_policies.py``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from . import concentration as conc
from .errors import BudgetTooSmall, NotSampled
from .estimation import (
    ChainCounts,
    LossReport,
    ObservationCounts,
    count_curves,
    counts_at,
    loss_report,
    record_observation,
)
from .markov import ChainProcessState, ProblemInstance, chain_stream, sample_trajectory, step_chain

GINI_WEIGHT = 2.0
DEVIATION_WEIGHT = 6.6
CORRECTION_WEIGHT = 28.0


class Policy(str, enum.Enum):
    BAMC = "bamc"
    UNIFORM = "uniform"
    ORACLE_STATIC = "oracle-static"

    @classmethod
    def parse(cls, value) -> "Policy":
        if isinstance(value, cls):
            return value
        return cls(str(value).strip().lower().replace("_", "-"))


class SnapshotMode(str, enum.Enum):
    OFF = "off"
    CHECKPOINTS = "checkpoints"
    FULL = "full"


@dataclass(frozen=True)
class IndexSnapshot:
    term_gini: float
    term_deviation: float
    term_correction: float

    @property
    def b(self) -> float:
        return self.term_gini + self.term_deviation + self.term_correction


def index_terms(visits: np.ndarray, transitions: np.ndarray, beta: float, alpha: float):
    """The three index terms for a batch of count snapshots.

    ``visits`` has shape ``(..., S)`` and ``transitions`` ``(..., S, S)``.
    Snapshots with no pulls yield ``nan``.
    """
    visits = np.asarray(visits)
    S = visits.shape[-1]
    T_x = visits.astype(np.float64)
    d = T_x + alpha * S
    P_hat = (alpha + transitions) / d[..., None]
    var = P_hat * (1.0 - P_hat)
    seen = visits > 0
    T = T_x.sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        gini = GINI_WEIGHT * beta / T * np.sum(np.where(seen, var.sum(axis=-1), 0.0), axis=-1)
        dev = (DEVIATION_WEIGHT * beta ** 1.5 / T
               * np.sum(T_x ** 1.5 / d ** 2 * np.sqrt(var).sum(axis=-1), axis=-1))
        corr = CORRECTION_WEIGHT * beta ** 2 * S / T * np.sum(np.where(seen, 1.0 / d, 0.0), axis=-1)
    return gini, dev, corr


def compute_index(counts_k: ChainCounts, beta: float, alpha: float) -> IndexSnapshot:
    """Index of one chain from its current counts.

    Raises:
        NotSampled: the chain has never been pulled.
    """
    if counts_k.total == 0:
        raise NotSampled("index undefined before the first pull")
    g, d, c = index_terms(counts_k.visits[None], counts_k.transitions[None], beta, alpha)
    return IndexSnapshot(float(g[0]), float(d[0]), float(c[0]))


def index_curve(trajectory: np.ndarray, S: int, beta: float, alpha: float) -> np.ndarray:
    """``b`` after every pull count ``m = 0..len(trajectory)``; entry 0 is ``inf``."""
    visits, trans = count_curves(trajectory, S)
    g, d, c = index_terms(visits, trans, beta, alpha)
    b = g + d + c
    b[0] = np.inf
    return b


def bamc_select(indices: Sequence[float], t: int, K: int, n: int) -> int:
    """Chain pulled at round ``t``.

    Rounds ``1..2K`` pull chain 0 twice, then chain 1 twice, and so on.
    Afterwards the largest index wins, ties going to the lowest id.
    """
    if n < 2 * K:
        raise BudgetTooSmall(f"BA-MC needs n >= 2K = {2 * K}, got {n}")
    if t <= 2 * K:
        return (t - 1) // 2
    return max(range(K), key=indices.__getitem__)


def uniform_policy(t: int, K: int) -> int:
    return (t - 1) % K


def oracle_static_allocation(instance_or_eta, n: int) -> np.ndarray:
    """Integer allocation closest to ``eta * n`` (largest remainder).

    Leftover units go to the largest fractional parts, ties to the lowest id.
    Every chain receives at least one pull; a chain rounded down to zero
    takes its unit from the chain with the largest surplus over ``eta n``.
    """
    eta = np.asarray(getattr(instance_or_eta, "eta", instance_or_eta), dtype=np.float64)
    K = eta.shape[0]
    if n < K:
        raise BudgetTooSmall(f"need n >= K = {K}, got {n}")
    exact = eta * n
    alloc = np.floor(exact).astype(np.int64)
    frac = np.round(exact - alloc, 12)
    order = sorted(range(K), key=lambda k: (-frac[k], k))
    for k in order[: n - int(alloc.sum())]:
        alloc[k] += 1
    for k in range(K):
        if alloc[k] == 0:
            # take the unit from the most over-served chain that can spare one
            surplus = np.where(alloc > 1, alloc - exact, -np.inf)
            donor = int(np.argmax(surplus))
            alloc[donor] -= 1
            alloc[k] = 1
    return alloc


@dataclass
class PolicyState:
    """Live state of a stepwise BA-MC run."""

    beta: float
    index: List[float]
    history: List[int]


@dataclass
class AllocationResult:
    """Outcome of one run.

    ``event_c``, ``index_lower_violations`` and ``loss_ucb_violated`` are
    ``None`` unless snapshots were requested.  ``index_lower_violations``
    counts snapshots where ``b < 2 beta / T * sum_{x seen} G(x)``;
    ``loss_ucb_violated`` flags any snapshot where ``b < L_k``.
    """

    policy: Policy
    n: int
    seed: int
    beta: float
    alpha: float
    pulls: np.ndarray
    loss: LossReport
    final_index: np.ndarray
    trajectory: Optional[np.ndarray] = None
    event_c: Optional[bool] = None
    index_lower_violations: Optional[int] = None
    loss_ucb_violated: Optional[bool] = None


@dataclass(frozen=True)
class TheoryBounds:
    beta: float
    thm1_bound: float
    thm1_second_order: float
    thm2_main: float
    thm2_excess: float
    C0: float
    asymptotic_target: float
    n_cutoff: int


def theory_bounds(instance: ProblemInstance, n: int, delta: float, c: float = 1.1) -> TheoryBounds:
    """Closed-form leading terms of the loss bounds; higher-order residues are omitted.

    ``thm1_second_order`` is the explicit ``564 K^2 S^2 beta^2 / (n - 2K)^2`` term.
    """
    K, S, lam = instance.K, instance.S, instance.lambda_total
    b = conc.beta(conc.ConfidenceConfig(n, delta, K, S, c))
    H = np.array([a.inv_stationary_sum for a in instance.analyses])
    eta = instance.eta
    C0 = 150.0 * K * math.sqrt(S * lam * H.max()) + 3.0 * math.sqrt(S * lam) * float(np.max(H / eta))
    second = 564.0 * K ** 2 * S ** 2 * b ** 2 / (n - 2 * K) ** 2 if n > 2 * K else math.inf
    return TheoryBounds(
        beta=b,
        thm1_bound=304.0 * K * S ** 2 * b ** 2 / n,
        thm1_second_order=second,
        thm2_main=2.0 * b * lam / n,
        thm2_excess=C0 * b ** 1.5 / n ** 1.5,
        C0=C0,
        asymptotic_target=lam / n,
        n_cutoff=conc.n_cutoff(instance, delta),
    )


# -- runs ---------------------------------------------------------------------

def checkpoint_grid(T: int, ratio: float = 1.1) -> np.ndarray:
    """Geometric pull counts ``0, 1, 2, ..., T`` with spacing ratio ``ratio``."""
    if T <= 0:
        return np.zeros(1, dtype=np.int64)
    j = np.arange(int(math.log(T) / math.log(ratio)) + 2)
    grid = np.floor(ratio ** j).astype(np.int64)
    return np.unique(np.concatenate([[0], grid[grid <= T], [T]]))


def _min_budget(policy: Policy, K: int) -> int:
    return 2 * K if policy is Policy.BAMC else K


def _run_fast(instance, policy, n, seed, beta, alpha, record_trajectory):
    K, S = instance.K, instance.S
    streams = [chain_stream(seed, k) for k in range(K)]
    choices = None
    if policy is Policy.BAMC:
        M = n - 2 * (K - 1)
        paths = [sample_trajectory(instance.matrices[k], instance.initial_dists[k], streams[k], M)
                 for k in range(K)]
        curves = [index_curve(p, S, beta, alpha).tolist() for p in paths]
        T = [2] * K
        vals = [curves[k][2] for k in range(K)]
        pick = vals.__getitem__
        chain_ids = range(K)
        chosen = [] if record_trajectory else None
        for _ in range(2 * K + 1, n + 1):
            k = max(chain_ids, key=pick)
            T[k] += 1
            vals[k] = curves[k][T[k]]
            if chosen is not None:
                chosen.append(k)
        pulls = np.array(T, dtype=np.int64)
        paths = [p[:T[k]] for k, p in enumerate(paths)]
        if record_trajectory:
            choices = np.concatenate([np.repeat(np.arange(K), 2), np.array(chosen, dtype=np.int64)])
    else:
        if policy is Policy.UNIFORM:
            pulls = np.array([n // K + (1 if k < n % K else 0) for k in range(K)], dtype=np.int64)
            if record_trajectory:
                choices = np.arange(n, dtype=np.int64) % K
        else:
            pulls = oracle_static_allocation(instance, n)
            if record_trajectory:
                choices = np.repeat(np.arange(K), pulls)
        paths = [sample_trajectory(instance.matrices[k], instance.initial_dists[k], streams[k], int(pulls[k]))
                 for k in range(K)]
    return pulls, paths, choices


def _run_stepwise(instance, policy, n, seed, beta, alpha):
    K, S = instance.K, instance.S
    procs = [ChainProcessState.start(seed, k) for k in range(K)]
    counts = ObservationCounts.empty(K, S)
    state = PolicyState(beta=beta, index=[math.inf] * K, history=[])
    schedule = None
    if policy is Policy.ORACLE_STATIC:
        schedule = np.repeat(np.arange(K), oracle_static_allocation(instance, n)).tolist()
    observed = [[] for _ in range(K)]
    for t in range(1, n + 1):
        if policy is Policy.BAMC:
            k = bamc_select(state.index, t, K, n)
        elif policy is Policy.UNIFORM:
            k = uniform_policy(t, K)
        else:
            k = schedule[t - 1]
        x = step_chain(procs[k], instance.matrices[k], instance.initial_dists[k])
        record_observation(counts, k, x)
        observed[k].append(x)
        state.history.append(k)
        if policy is Policy.BAMC:
            # only the pulled chain's index changes
            state.index[k] = compute_index(counts[k], beta, alpha).b
    paths = [np.array(o, dtype=np.int64) for o in observed]
    return counts.pulls, paths, np.array(state.history, dtype=np.int64)


def _snapshot_checks(instance, paths, beta, alpha, mode: SnapshotMode):
    S = instance.S
    event_c = True
    lower_violations = 0
    ucb_violated = False
    for k, path in enumerate(paths):
        P = instance.matrices[k].matrix
        G = instance.analyses[k].gini if instance.analyses[k] is not None else np.sum(P * (1 - P), axis=1)
        visits, trans = count_curves(path, S)
        if mode is SnapshotMode.CHECKPOINTS:
            grid = checkpoint_grid(len(path))
            visits, trans = visits[grid], trans[grid]
        P_hat = (alpha + trans) / (visits + alpha * S)[..., None]
        event_c &= bool(np.all(conc.event_c_curve(P, visits, P_hat, beta, alpha)))
        pulled = visits.sum(axis=-1) > 0
        v, tr = visits[pulled], trans[pulled]
        g, d, c = index_terms(v, tr, beta, alpha)
        b = g + d + c
        T = v.sum(axis=-1).astype(np.float64)
        lower = 2.0 * beta / T * np.sum(np.where(v > 0, G, 0.0), axis=-1)
        lower_violations += int(np.sum(b < lower))
        err = np.sum((P - P_hat[pulled]) ** 2, axis=-1)
        loss_k = np.sum(v / T[:, None] * err, axis=-1)
        ucb_violated |= bool(np.any(b < loss_k))
    return event_c, lower_violations, ucb_violated


def run_policy(instance: ProblemInstance, policy, n: int, delta: float, seed: int,
               snapshot_mode="off", c: float = 1.1, alpha: Optional[float] = None,
               record_trajectory: bool = False, stepwise: bool = False) -> AllocationResult:
    """Simulate one full allocation game of budget ``n``.

    Deterministic in ``(instance, policy, n, delta, seed)``: chain ``k``
    draws from the stream keyed by ``(seed, k)``.  ``alpha`` defaults to
    ``1/(3S)``.  beta is fixed from the final budget ``n``.
    """
    policy = Policy.parse(policy)
    mode = SnapshotMode(snapshot_mode)
    K, S = instance.K, instance.S
    if n < _min_budget(policy, K):
        raise BudgetTooSmall(f"{policy.value} needs n >= {_min_budget(policy, K)}, got {n}")
    alpha = 1.0 / (3 * S) if alpha is None else alpha
    beta = conc.beta(conc.ConfidenceConfig(n, delta, K, S, c))

    if stepwise:
        pulls, paths, choices = _run_stepwise(instance, policy, n, seed, beta, alpha)
        if not record_trajectory:
            choices = None
    else:
        pulls, paths, choices = _run_fast(instance, policy, n, seed, beta, alpha, record_trajectory)

    counts = ObservationCounts([counts_at(p, S, len(p)) for p in paths], t=n)
    report = loss_report(counts, instance, alpha)
    final_index = np.array([compute_index(counts[k], beta, alpha).b for k in range(K)])
    result = AllocationResult(policy, n, seed, beta, alpha, pulls, report, final_index, choices)
    if mode is not SnapshotMode.OFF:
        result.event_c, result.index_lower_violations, result.loss_ucb_violated = _snapshot_checks(
            instance, paths, beta, alpha, mode)
    return result
