import json
import os

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None)
settings.load_profile("default")

DATA = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture(scope="session")
def oracle():
    with open(os.path.join(DATA, "oracle_values.json")) as fh:
        return json.load(fh)


def sym3(d):
    """Symmetric 3-state chain with diagonal ``d``: uniform pi, gap ``1 - |d - o|``."""
    o = (1 - d) / 2
    return np.array([[d, o, o], [o, d, o], [o, o, d]])


def reversible_chain(rng, S):
    """Random walk on a random weighted complete graph (reversible, ergodic)."""
    W = rng.uniform(0.05, 1.0, size=(S, S))
    W = W + W.T
    return W / W.sum(axis=1, keepdims=True)


def random_chain(rng, S):
    P = rng.uniform(0.01, 1.0, size=(S, S))
    return P / P.sum(axis=1, keepdims=True)


# acceptance verdicts, printed once at the end of the session
ACCEPTANCE = {}


def record_verdict(criterion: int, passed: bool, detail: str):
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
