"""Random problem-instance families."""

from __future__ import annotations

import numpy as np

from ..errors import BamcError, GenerationFailed
from ..markov import ProblemInstance, build_instance

MAX_RETRIES = 100
FAMILIES = ("dirichlet-rows", "lazy-two-state", "near-deterministic")


def lazy_two_state(epsilon: float) -> np.ndarray:
    """``[[1/2, 1/2], [eps, 1 - eps]]``: state 1 is sticky when ``eps`` is small."""
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    return np.array([[0.5, 0.5], [epsilon, 1.0 - epsilon]])


def _dirichlet_chain(rng, S, concentration):
    return rng.dirichlet(np.full(S, concentration), size=S)


def _near_deterministic_chain(rng, S, noise):
    targets = rng.integers(0, S, size=S)
    P = np.full((S, S), noise / S)
    P[np.arange(S), targets] += 1.0 - noise
    return P


def generate_instance(spec, seed: int) -> ProblemInstance:
    """Draw an instance from ``spec`` (a GeneratorSpec); deterministic in ``seed``.

    Raises:
        GenerationFailed: no valid (ergodic, non-degenerate) instance within
            ``MAX_RETRIES`` draws.
    """
    family = spec.family.replace("_", "-")
    K, S, params = spec.K, spec.S, spec.params
    if family not in FAMILIES:
        raise ValueError(f"unknown generator family {spec.family!r}; expected one of {FAMILIES}")
    if K < 1 or S < 2:
        raise ValueError("need K >= 1 and S >= 2")

    if family == "lazy-two-state":
        if S != 2:
            raise ValueError("lazy-two-state requires S = 2")
        eps = params.get("epsilon", 0.1)
        eps = list(eps) if isinstance(eps, (list, tuple)) else [eps] * K
        if len(eps) != K:
            raise ValueError("need one epsilon per chain")
        return build_instance([lazy_two_state(e) for e in eps])

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    last = None
    for _ in range(MAX_RETRIES):
        if family == "dirichlet-rows":
            mats = [_dirichlet_chain(rng, S, float(params.get("concentration", 1.0))) for _ in range(K)]
        else:
            mats = [_near_deterministic_chain(rng, S, float(params.get("noise", 0.05))) for _ in range(K)]
        # rows are renormalised: float sums can drift past the 1e-12 tolerance
        mats = [P / P.sum(axis=1, keepdims=True) for P in mats]
        try:
            return build_instance(mats)
        except BamcError as e:
            last = e
    raise GenerationFailed(f"{family}: no valid instance after {MAX_RETRIES} draws ({last})")
