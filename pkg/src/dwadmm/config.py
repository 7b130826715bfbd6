"""
Scenario configuration: JSON in, ``Scenario`` out, and the resolved echo back.

A config looks like::

    {
      "graph": {"nodes": 3, "edges": [[0, 1, 1.0], [1, 2, 1.0], [0, 2, 1.0]]},
      "objective": {"family": "quadratic", "centers": [0.0, 0.0, 3.0]},
      "attack": {"model": "none"},
      "policy": {"mode": "trust_adaptive"},
      "max_iter": 5000, "tol": 1e-8, "seed": 0, "algorithm": "dw_admm"
    }

``graph`` may instead name a generator (``cycle``, ``ring_with_chords``,
``erdos_renyi``) and ``objective`` may draw random centers; both use the
scenario seed unless given their own. The echo produced by
``scenario_to_config`` is fully resolved (explicit edges and objective
parameters, every default spelled out), so parsing it reproduces the
scenario exactly.
"""

import json
from pathlib import Path

import numpy as np

from .adversary import AttackSpec
from .engine import ALGORITHMS, Scenario
from .errors import DWADMMError, ScenarioError
from .graph import WeightedGraph, cycle_graph, erdos_renyi, ring_with_chords
from .objective import LogisticObjective, ObjectiveSet, QuadraticObjective
from .trustweights import WeightPolicy

DEFAULT_SEED = 0
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 5000

_TOP_KEYS = {"graph", "objective", "attack", "policy", "max_iter", "tol", "seed", "algorithm"}


def _require(cfg, key, where):
    if not isinstance(cfg, dict):
        raise ScenarioError("expected an object", field=where)
    if key not in cfg:
        raise ScenarioError("missing required field", field=f"{where}.{key}")
    return cfg[key]


def _parse_graph(cfg, seed):
    if not isinstance(cfg, dict):
        raise ScenarioError("expected an object", field="graph")
    nodes = int(_require(cfg, "nodes", "graph"))
    gen = cfg.get("generator")
    if gen is None:
        edges = _require(cfg, "edges", "graph")
        for pos, e in enumerate(edges):
            if not isinstance(e, (list, tuple)) or len(e) != 3:
                raise ScenarioError("edge must be [i, j, weight]", field=f"graph.edges[{pos}]")
            if float(e[2]) < 0:
                raise ScenarioError("negative edge weight", field=f"graph.edges[{pos}]")
        return WeightedGraph.from_edges(nodes, edges)
    weight = float(cfg.get("weight", 1.0))
    if weight < 0:
        raise ScenarioError("negative edge weight", field="graph.weight")
    if gen == "cycle":
        return cycle_graph(nodes, weight)
    if gen == "ring_with_chords":
        return ring_with_chords(nodes, tuple(cfg.get("offsets", (1, 2))), weight)
    if gen == "erdos_renyi":
        lo, hi = cfg.get("weight_range", (weight, weight))
        return erdos_renyi(nodes, float(_require(cfg, "p", "graph")), cfg.get("seed", seed), (lo, hi))
    raise ScenarioError(f"unknown generator {gen!r}", field="graph.generator")


def _per_node(value, nodes, field):
    if len(value) != nodes:
        raise ScenarioError(f"expected {nodes} entries, got {len(value)}", field=field)
    return value


def _parse_objective(cfg, nodes, seed):
    family = _require(cfg, "family", "objective")
    if family == "quadratic":
        if "centers" in cfg:
            centers = _per_node(cfg["centers"], nodes, "objective.centers")
            scales = cfg.get("scales", [1.0] * nodes)
            return ObjectiveSet(
                QuadraticObjective.centered(c, s) for c, s in zip(centers, scales)
            )
        if "random_centers" in cfg:
            spec = cfg["random_centers"]
            rng = np.random.default_rng(spec.get("seed", seed))
            c = rng.uniform(float(spec.get("low", -1.0)), float(spec.get("high", 1.0)),
                            size=(nodes, int(spec.get("dim", 1))))
            return ObjectiveSet(QuadraticObjective.centered(row) for row in c)
        Q = _per_node(_require(cfg, "Q", "objective"), nodes, "objective.Q")
        lin = _per_node(_require(cfg, "linear", "objective"), nodes, "objective.linear")
        off = _per_node(cfg.get("offset", [0.0] * nodes), nodes, "objective.offset")
        return ObjectiveSet(QuadraticObjective(q, l, o) for q, l, o in zip(Q, lin, off))
    if family == "logistic":
        feats = _per_node(_require(cfg, "features", "objective"), nodes, "objective.features")
        labels = _per_node(_require(cfg, "labels", "objective"), nodes, "objective.labels")
        reg = cfg.get("regularizer", 1e-2)
        regs = reg if isinstance(reg, list) else [reg] * nodes
        return ObjectiveSet(
            LogisticObjective(a, y, r) for a, y, r in zip(feats, labels, regs)
        )
    raise ScenarioError(f"unknown objective family {family!r}", field="objective.family")


def _parse_attack(cfg, seed):
    if cfg is None:
        return AttackSpec(seed=seed)
    if not isinstance(cfg, dict):
        raise ScenarioError("expected an object", field="attack")
    params = {k: v for k, v in cfg.items() if k in ("bias", "sigma", "target", "delay")}
    return AttackSpec(
        byzantine_nodes=frozenset(cfg.get("nodes", ())),
        model=cfg.get("model", "none"),
        start_iteration=int(cfg.get("start", 0)),
        seed=int(cfg.get("seed", seed)),
        params=params,
    )


def _parse_policy(cfg):
    if cfg is None:
        return WeightPolicy()
    if not isinstance(cfg, dict):
        raise ScenarioError("expected an object", field="policy")
    known = set(WeightPolicy.__dataclass_fields__)
    unknown = set(cfg) - known
    if unknown:
        raise ScenarioError(f"unknown keys {sorted(unknown)}", field="policy")
    kwargs = dict(cfg)
    if "schedule" in kwargs:
        kwargs["schedule"] = tuple(kwargs["schedule"])
    return WeightPolicy(**kwargs)


def _parse_tol(tol):
    if isinstance(tol, dict):
        return float(tol.get("primal", DEFAULT_TOL)), float(tol.get("consensus", DEFAULT_TOL))
    return float(tol), float(tol)


def _load(source):
    if isinstance(source, dict):
        return dict(source)
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise ScenarioError(f"cannot read config: {exc}") from exc
    else:
        text = source
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg} (column {exc.colno})", line=exc.lineno) from exc
    if not isinstance(cfg, dict):
        raise ScenarioError("top level must be an object")
    return cfg


def parse_scenario(source, overrides=None, strict=True):
    """
    Build a validated ``Scenario`` from a path, JSON text, or dict.

    ``overrides`` (keys ``seed``, ``max_iter``, ``tol``) replace config values
    before anything is resolved, so a new seed also redraws random graphs and
    centers. With ``strict`` an error-free scenario whose graph violates the
    structural assumptions is rejected.
    """
    cfg = _load(source)
    for key, val in (overrides or {}).items():
        if val is not None:
            cfg[key] = val
    unknown = set(cfg) - _TOP_KEYS
    if unknown:
        raise ScenarioError(f"unknown keys {sorted(unknown)}")
    seed = int(cfg.get("seed", DEFAULT_SEED))
    algorithm = cfg.get("algorithm", "dw_admm")
    if algorithm not in ALGORITHMS:
        raise ScenarioError(f"unknown algorithm {algorithm!r}", field="algorithm")
    try:
        graph = _parse_graph(_require(cfg, "graph", "config"), seed)
        objectives = _parse_objective(_require(cfg, "objective", "config"), graph.node_count, seed)
        attack = _parse_attack(cfg.get("attack"), seed)
        policy = _parse_policy(cfg.get("policy"))
        primal_tol, consensus_tol = _parse_tol(cfg.get("tol", DEFAULT_TOL))
        scenario = Scenario(
            graph=graph,
            objectives=objectives,
            attack=attack,
            policy=policy,
            max_iterations=int(cfg.get("max_iter", DEFAULT_MAX_ITER)),
            primal_tol=primal_tol,
            consensus_tol=consensus_tol,
            seed=seed,
            algorithm=algorithm,
        )
    except ScenarioError:
        raise
    except (DWADMMError, TypeError, ValueError, KeyError) as exc:
        raise ScenarioError(str(exc)) from exc
    if strict:
        scenario.check()
    return scenario


def _objective_config(objectives):
    family = objectives.family
    items = [o.to_config() for o in objectives.objectives]
    if family == "quadratic":
        return {
            "family": "quadratic",
            "Q": [it["Q"] for it in items],
            "linear": [it["linear"] for it in items],
            "offset": [it["offset"] for it in items],
        }
    if family == "logistic":
        return {
            "family": "logistic",
            "features": [it["features"] for it in items],
            "labels": [it["labels"] for it in items],
            "regularizer": [it["regularizer"] for it in items],
        }
    raise ScenarioError(f"cannot serialise objective family {family!r}")


def scenario_to_config(scenario):
    """Fully resolved, JSON-ready echo of a scenario."""
    g = scenario.graph
    return {
        "graph": {"nodes": g.node_count, "edges": g.edge_list(base=True)},
        "objective": _objective_config(scenario.objectives),
        "attack": scenario.attack.to_config(),
        "policy": scenario.policy.to_config(),
        "max_iter": scenario.max_iterations,
        "tol": {"primal": scenario.primal_tol, "consensus": scenario.consensus_tol},
        "seed": scenario.seed,
        "algorithm": scenario.algorithm,
    }
