"""Instance files: schema validation, deterministic generation, bundled scenarios.

An instance file is a JSON object

    {"nodes": N, "edges": [[i, j], ...], "payoffs": [{"family": "quadratic",
     "a": ..., "c": ...}, ...], "x0": [...], "rho": ...}

with 1-based node ids in ``edges`` (everything in-memory is 0-based).  An
optional free-text ``note`` survives a load/save round trip.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .model import ChoiceGraph, PopulationState, QuadraticPayoffs

__all__ = [
    "InstanceError",
    "Instance",
    "instance_from_dict",
    "instance_to_dict",
    "load_instance",
    "save_instance",
    "generate_instance",
    "scenario_names",
    "load_scenario",
]


class InstanceError(ValueError):
    """Malformed or inconsistent instance data (CLI exit code 2)."""


@dataclass(frozen=True)
class Instance:
    """A loaded problem instance: network, payoffs and initial state."""

    graph: ChoiceGraph
    payoffs: QuadraticPayoffs
    state: PopulationState
    note: str = ""

    @property
    def n(self) -> int:
        return self.graph.n


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise InstanceError(msg)


def instance_from_dict(data) -> Instance:
    """Validate a parsed JSON object and build the in-memory instance."""
    _require(isinstance(data, dict), "instance must be a JSON object")
    missing = [k for k in ("nodes", "edges", "payoffs", "x0", "rho") if k not in data]
    _require(not missing, f"missing keys: {', '.join(missing)}")

    n = data["nodes"]
    _require(isinstance(n, int) and n >= 1, f"'nodes' must be a positive integer, got {n!r}")

    edges = []
    _require(isinstance(data["edges"], list), "'edges' must be a list of [i, j] pairs")
    for pair in data["edges"]:
        _require(
            isinstance(pair, list) and len(pair) == 2 and all(isinstance(v, int) for v in pair),
            f"edge {pair!r} is not a pair of integers",
        )
        i, j = pair
        _require(1 <= i <= n and 1 <= j <= n, f"edge {pair!r} out of range 1..{n}")
        _require(i != j, f"edge {pair!r} is a self loop")
        edges.append((i - 1, j - 1))

    specs = data["payoffs"]
    _require(
        isinstance(specs, list) and len(specs) == n,
        f"'payoffs' must list one entry per node (expected {n})",
    )
    a, c = np.empty(n), np.empty(n)
    for i, spec in enumerate(specs):
        _require(isinstance(spec, dict), f"payoffs[{i}] is not an object")
        _require(
            spec.get("family") == "quadratic",
            f"payoffs[{i}]: unsupported family {spec.get('family')!r}",
        )
        for key in ("a", "c"):
            _require(
                isinstance(spec.get(key), (int, float)),
                f"payoffs[{i}] needs numeric '{key}'",
            )
        a[i], c[i] = spec["a"], spec["c"]

    x0 = data["x0"]
    _require(
        isinstance(x0, list) and len(x0) == n and all(isinstance(v, (int, float)) for v in x0),
        f"'x0' must list one number per node (expected {n})",
    )
    rho = data["rho"]
    _require(isinstance(rho, (int, float)) and rho >= 0, f"'rho' must be nonnegative, got {rho!r}")

    note = data.get("note", "")
    _require(isinstance(note, str), "'note' must be a string")

    try:
        graph = ChoiceGraph(n, tuple(edges))
        payoffs = QuadraticPayoffs(a, c)
        state = PopulationState(np.array(x0, dtype=np.float64), float(rho))
    except ValueError as exc:  # e.g. c <= 0, x0 off the simplex
        raise InstanceError(str(exc)) from exc
    return Instance(graph, payoffs, state, note)


def instance_to_dict(inst: Instance) -> dict:
    d = {
        "nodes": inst.n,
        "edges": [[i + 1, j + 1] for i, j in inst.graph.edges],
        "payoffs": [
            {"family": "quadratic", "a": float(ai), "c": float(ci)}
            for ai, ci in zip(inst.payoffs.a, inst.payoffs.c)
        ],
        "x0": [float(v) for v in inst.state.x],
        "rho": float(inst.state.rho),
    }
    if inst.note:
        d["note"] = inst.note
    return d


def load_instance(path) -> Instance:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InstanceError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: invalid JSON ({exc})") from exc
    return instance_from_dict(data)


def save_instance(inst: Instance, path) -> None:
    """Write the instance as indented JSON (byte-stable for a fixed instance)."""
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=2) + "\n")


def generate_instance(seed: int, n: int, rho: float = 1.0) -> Instance:
    """Deterministic pseudo-random instance: connected graph, quadratic payoffs,
    initial mass spread over a random subset of nodes.

    The same (seed, n, rho) always yields the same instance, so a saved file is
    reproducible byte-for-byte.
    """
    _require(n >= 1, f"need at least one node, got {n}")
    _require(rho >= 0, f"'rho' must be nonnegative, got {rho!r}")
    rng = np.random.default_rng(seed)

    # random spanning tree first, then extra edges with fixed probability
    edges = set()
    for k in range(1, n):
        edges.add((int(rng.integers(0, k)), k))
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) not in edges and rng.random() < 0.25:
                edges.add((i, j))
    graph = ChoiceGraph(n, tuple(sorted(edges)))

    payoffs = QuadraticPayoffs(rng.uniform(0.5, 2.0, n), rng.uniform(0.5, 2.0, n))

    # leave some nodes empty so reduction and bounds have work to do
    occupied = rng.random(n) < 0.7
    if not occupied.any():
        occupied[int(rng.integers(0, n))] = True
    x0 = np.zeros(n)
    x0[occupied] = rho * rng.dirichlet(np.ones(int(occupied.sum())))
    state = PopulationState(x0, rho)
    return Instance(graph, payoffs, state)


def scenario_names() -> tuple[str, ...]:
    """Names of the instance files bundled with the package."""
    root = resources.files("popnet") / "scenarios"
    return tuple(sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json")))


def load_scenario(name: str) -> Instance:
    ref = resources.files("popnet") / "scenarios" / f"{name}.json"
    try:
        text = ref.read_text()
    except (FileNotFoundError, OSError) as exc:
        raise InstanceError(f"no bundled scenario {name!r} (have {', '.join(scenario_names())})") from exc
    return instance_from_dict(json.loads(text))
