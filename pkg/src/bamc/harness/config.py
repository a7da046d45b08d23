"""Experiment configuration and instance files (JSON).

Instance file::

    {"states": 2,                       # or a list of state labels
     "chains": [[[0.5, 0.5], [0.1, 0.9]], ...],
     "initial_dists": [[1, 0], ...]}    # optional, default uniform

Experiment config::

    {"instance": "chains.json",          # path (relative to the config file),
                                          # {"file": ...}, inline {"chains": ...}
                                          # or {"generator": {...}}
     "budgets": [1000, 10000],
     "policies": ["bamc", "uniform", "oracle-static"],
     "delta": 0.05, "c": 1.1, "alpha": null, "replications": 100,
     "base_seed": 0, "snapshot_mode": "off",
     "outputs": {"dir": "results", "formats": ["csv", "json", "long"]}}
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from typing import List, Optional

from ..errors import BamcError, ParseError, SchemaError
from ..markov import ProblemInstance, build_instance
from ..policies import Policy, SnapshotMode

DEFAULT_DELTA = 0.05
DEFAULT_C = 1.1
DEFAULT_REPLICATIONS = 100
FULL_SNAPSHOT_LIMIT = 100_000
FORMATS = ("csv", "json", "long")

_CONFIG_KEYS = {"instance", "policies", "budgets", "delta", "c", "alpha", "replications",
                "base_seed", "snapshot_mode", "outputs", "full_snapshot_limit"}
_INSTANCE_KEYS = {"states", "chains", "initial_dists"}
_GENERATOR_KEYS = {"family", "K", "S", "params", "seed"}


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    K: int
    S: int
    params: dict = field(default_factory=dict)
    seed: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    instance: ProblemInstance
    budgets: List[int]
    policies: List[Policy] = (Policy.BAMC,)
    delta: float = DEFAULT_DELTA
    c: float = DEFAULT_C
    alpha: Optional[float] = None
    replications: int = DEFAULT_REPLICATIONS
    base_seed: int = 0
    snapshot_mode: SnapshotMode = SnapshotMode.OFF
    out_dir: str = "results"
    formats: tuple = FORMATS
    instance_source: str = "inline"

    @property
    def smoothing(self) -> float:
        return self.alpha if self.alpha is not None else 1.0 / (3 * self.instance.S)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, base_seed=seed)


# -- locating JSON paths in the source text -------------------------------------

def locate(text: str, path) -> Optional[int]:
    """1-based line where the value at ``path`` (keys / indices) starts, if found."""
    target = tuple(path)
    stack = []  # entries: [kind, key_or_index, expecting_key]
    i, line, n = 0, 1, len(text)

    def current_path():
        return tuple(frame[1] for frame in stack)

    def at_value_start():
        return current_path() == target

    if not target:
        return 1
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
        elif ch == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 2 if text[j] == "\\" else 1
            s = text[i + 1:j]
            if stack and stack[-1][0] == "obj" and stack[-1][2]:
                stack[-1][1] = json.loads(f'"{s}"')
                stack[-1][2] = False
            elif at_value_start():
                return line
            i = j
        elif ch in "{[":
            if stack and at_value_start():
                return line
            stack.append(["obj", None, True] if ch == "{" else ["arr", 0, False])
        elif ch in "}]":
            stack.pop()
        elif ch == ",":
            if stack[-1][0] == "arr":
                stack[-1][1] += 1
            else:
                stack[-1][2] = True
        elif not ch.isspace() and ch != ":" and stack and at_value_start():
            return line
        i += 1
    return None


def _parse_json(text: str, source: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{source}: {e.msg}", e.lineno, e.colno) from None


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e.strerror}") from None


# -- instances ----------------------------------------------------------------

def instance_from_dict(data, text: Optional[str] = None, prefix=(), allow_non_ergodic=False) -> ProblemInstance:
    """Build and validate an instance, pointing errors at the offending entry."""

    def fail(path, message):
        full = tuple(prefix) + tuple(path)
        name = ".".join(str(p) if isinstance(p, str) else f"[{p}]" for p in full).replace(".[", "[")
        raise SchemaError(name or "instance", message, locate(text, full) if text else None)

    if not isinstance(data, dict):
        fail((), "expected an object")
    unknown = set(data) - _INSTANCE_KEYS
    if unknown:
        fail((sorted(unknown)[0],), "unknown key")
    chains = data.get("chains")
    if not isinstance(chains, list) or not chains:
        fail(("chains",), "expected a non-empty list of matrices")
    states = data.get("states")
    S = len(chains[0]) if isinstance(chains[0], list) else None
    if isinstance(states, list):
        expected = len(states)
    elif states is None:
        expected = S
    elif isinstance(states, int) and not isinstance(states, bool):
        expected = states
    else:
        fail(("states",), "expected an integer or a list of labels")
    for k, P in enumerate(chains):
        if not isinstance(P, list) or len(P) != expected:
            fail(("chains", k), f"expected {expected} rows")
        for x, row in enumerate(P):
            if not isinstance(row, list) or len(row) != expected:
                fail(("chains", k, x), f"expected {expected} entries")
            for y, v in enumerate(row):
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    fail(("chains", k, x, y), "not a number")
                if not 0 <= v <= 1:
                    fail(("chains", k, x, y), f"probability {v} outside [0, 1]")
            if abs(sum(row) - 1.0) > 1e-12:
                fail(("chains", k, x), f"row sums to {sum(row)!r}, not 1")
    inits = data.get("initial_dists")
    if inits is not None:
        if not isinstance(inits, list) or len(inits) != len(chains):
            fail(("initial_dists",), "expected one distribution per chain")
        for k, p in enumerate(inits):
            if (not isinstance(p, list) or len(p) != expected
                    or any(isinstance(v, bool) or not isinstance(v, (int, float)) or v < 0 for v in p)
                    or abs(sum(p) - 1.0) > 1e-12):
                fail(("initial_dists", k), "not a probability vector over the states")
    try:
        return build_instance(chains, inits, allow_non_ergodic=allow_non_ergodic)
    except BamcError as e:
        k = _chain_of(str(e))
        fail(("chains", k) if k is not None else ("chains",), str(e))


def _chain_of(message: str) -> Optional[int]:
    words = message.split()
    if len(words) > 1 and words[0] == "chain" and words[1].isdigit():
        return int(words[1])
    return None


def load_instance(path: str, allow_non_ergodic: bool = False) -> ProblemInstance:
    text = _read(path)
    data = _parse_json(text, path)
    chains = data.get("chains") if isinstance(data, dict) else None
    if isinstance(chains, list):
        # validate chain by chain so errors name the right matrix
        for k, P in enumerate(chains):
            try:
                instance_from_dict({**data, "chains": [P],
                                    "initial_dists": None}, None, allow_non_ergodic=allow_non_ergodic)
            except SchemaError as e:
                if e.field == "chains" or e.field.startswith("chains[0]"):
                    field_ = "chains[%d]" % k + e.field[len("chains[0]"):]
                    path_ = _path_of(field_)
                    raise SchemaError(field_, str(e).split(": ", 1)[1].rsplit(" (line", 1)[0],
                                      locate(text, path_)) from None
                raise SchemaError(e.field, str(e).split(": ", 1)[1], locate(text, _path_of(e.field))) from None
    return instance_from_dict(data, text, allow_non_ergodic=allow_non_ergodic)


def _path_of(name: str):
    out = []
    for part in name.replace("]", "").split("["):
        for sub in part.split("."):
            if sub == "":
                continue
            out.append(int(sub) if sub.isdigit() else sub)
    return tuple(out)


# -- experiment configs ---------------------------------------------------------

def _positive_int(value, name, text, minimum=1):
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise SchemaError(name, f"expected an integer >= {minimum}, got {value!r}", locate(text, (name,)))
    return value


def load_config(path: str) -> ExperimentConfig:
    """Parse and validate an experiment config, filling defaults.

    Raises:
        ParseError: the file is missing or is not valid JSON.
        SchemaError: a field is unknown, missing or out of range.
    """
    text = _read(path)
    data = _parse_json(text, path)
    base = os.path.dirname(os.path.abspath(path))
    return config_from_dict(data, text, base)


def config_from_dict(data, text: Optional[str] = None, base_dir: str = ".") -> ExperimentConfig:
    from .generators import generate_instance

    def err(name, message, path=None):
        raise SchemaError(name, message, locate(text, path or (name,)) if text else None)

    if not isinstance(data, dict):
        err("config", "expected a JSON object", ())
    unknown = sorted(set(data) - _CONFIG_KEYS)
    if unknown:
        err(unknown[0], "unknown top-level key")
    if "instance" not in data:
        err("instance", "missing")
    if "budgets" not in data:
        err("budgets", "missing")

    src = data["instance"]
    if isinstance(src, str):
        src = {"file": src}
    if not isinstance(src, dict):
        err("instance", "expected a path or an object")
    if "file" in src:
        fpath = src["file"]
        if not isinstance(fpath, str):
            err("instance.file", "expected a path", ("instance", "file"))
        fpath = fpath if os.path.isabs(fpath) else os.path.join(base_dir, fpath)
        instance = load_instance(fpath)
        source = fpath
    elif "generator" in src:
        g = src["generator"]
        if not isinstance(g, dict) or "family" not in g:
            err("instance.generator", "expected an object with a family", ("instance", "generator"))
        extra = sorted(set(g) - _GENERATOR_KEYS)
        if extra:
            err(f"instance.generator.{extra[0]}", "unknown key", ("instance", "generator", extra[0]))
        spec = GeneratorSpec(g["family"], g.get("K", 1), g.get("S", 2), dict(g.get("params", {})),
                             g.get("seed", 0))
        try:
            instance = generate_instance(spec, spec.seed)
        except (BamcError, ValueError) as e:
            err("instance.generator", str(e), ("instance", "generator"))
        source = f"generator:{spec.family}"
    else:
        instance = instance_from_dict(src, text, prefix=("instance",))
        source = "inline"

    budgets = data["budgets"]
    if not isinstance(budgets, list) or not budgets:
        err("budgets", "expected a non-empty list of integers")
    for i, n in enumerate(budgets):
        if isinstance(n, bool) or not isinstance(n, int) or n < 2 * instance.K:
            raise SchemaError(f"budgets[{i}]", f"expected an integer >= 2K = {2 * instance.K}, got {n!r}",
                              locate(text, ("budgets", i)) if text else None)

    raw_policies = data.get("policies", ["bamc"])
    if not isinstance(raw_policies, list) or not raw_policies:
        err("policies", "expected a non-empty list")
    policies = []
    for i, p in enumerate(raw_policies):
        try:
            policies.append(Policy.parse(p))
        except ValueError:
            raise SchemaError(f"policies[{i}]", f"unknown policy {p!r} (bamc | uniform | oracle-static)",
                              locate(text, ("policies", i)) if text else None) from None

    delta = data.get("delta", DEFAULT_DELTA)
    if isinstance(delta, bool) or not isinstance(delta, (int, float)) or not 0 < delta < 1:
        err("delta", f"expected a number in (0, 1), got {delta!r}")
    c = data.get("c", DEFAULT_C)
    if isinstance(c, bool) or not isinstance(c, (int, float)) or not c > 1:
        err("c", f"expected a number > 1, got {c!r}")
    alpha = data.get("alpha")
    if alpha is not None and (isinstance(alpha, bool) or not isinstance(alpha, (int, float)) or not alpha > 0):
        err("alpha", f"expected a positive number, got {alpha!r}")
    reps = _positive_int(data.get("replications", DEFAULT_REPLICATIONS), "replications", text)
    seed = data.get("base_seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        err("base_seed", f"expected an unsigned 64-bit integer, got {seed!r}")
    try:
        mode = SnapshotMode(data.get("snapshot_mode", "off"))
    except ValueError:
        err("snapshot_mode", "expected off | checkpoints | full")
    limit = _positive_int(data.get("full_snapshot_limit", FULL_SNAPSHOT_LIMIT), "full_snapshot_limit", text)
    if mode is SnapshotMode.FULL and max(budgets) > limit:
        err("snapshot_mode", f"full snapshots are limited to n <= {limit}; raise full_snapshot_limit")

    outputs = data.get("outputs", {})
    if not isinstance(outputs, dict) or set(outputs) - {"dir", "formats"}:
        err("outputs", "expected an object with keys dir, formats")
    out_dir = outputs.get("dir", "results")
    formats = outputs.get("formats", list(FORMATS))
    if not isinstance(formats, list) or any(f not in FORMATS for f in formats):
        err("outputs.formats", f"expected a subset of {list(FORMATS)}", ("outputs", "formats"))

    return ExperimentConfig(
        instance=instance,
        budgets=list(budgets),
        policies=policies,
        delta=float(delta),
        c=float(c),
        alpha=None if alpha is None else float(alpha),
        replications=reps,
        base_seed=seed,
        snapshot_mode=mode,
        out_dir=os.path.normpath(out_dir if os.path.isabs(out_dir) else os.path.join(base_dir, out_dir)),
        formats=tuple(formats),
        instance_source=source,
    )
