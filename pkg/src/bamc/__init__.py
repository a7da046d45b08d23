"""Active bandit allocation for learning the transition matrices of Markov chains."""

from .markov import (
    ChainAnalysis,
    ProblemInstance,
    TransitionMatrix,
    analyze_chain,
    build_instance,
    validate_chain,
)
from .policies import Policy, run_policy, theory_bounds

__version__ = "0.1.0"

__all__ = [
    "ChainAnalysis",
    "Policy",
    "ProblemInstance",
    "TransitionMatrix",
    "analyze_chain",
    "build_instance",
    "run_policy",
    "theory_bounds",
    "validate_chain",
]
