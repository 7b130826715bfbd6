"""
The dynamically weighted ADMM iteration and the conventional ADMM baseline.

One step from iteration k to k+1:

1. build ``D, A, L_-, L_+`` from the current edge weights;
2. each node solves ``grad f_i(x) + 2 d_ii x = [L_+ Z - Lam]_i``;
3. Byzantine nodes corrupt their broadcast, ``Z' = X' + E'``;
4. dual ascent ``Lam' = Lam + L_- Z'``;
5. trust update from the received broadcasts;
6. edge reweighting, effective from iteration k+2 onwards;
7. in scalar-weight modes, ``Y' = Y + C_k N Z'`` with ``C_k`` the running
   product of the weight factors.

Each node's dual is also kept split into per-edge contributions. When a node
is isolated the consensus constraints on its edges are dropped, and so are
the multipliers those edges accumulated (see ``WeightPolicy.reset_isolated_duals``).
"""

import time
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .adversary import NO_ATTACK, corrupt
from .diagnostics import Reference, metric_row
from .errors import ScenarioError, SolverError
from .graph import build_laplacians, induced_signed, is_connected, validate_assumptions
from .objective import solve_primal, solve_primal_all
from .trustweights import STATIC, TrustState, update_trust, update_weights

ALGORITHMS = ("dw_admm", "conventional_admm")
DIVERGENCE_LIMIT = 1e12


@dataclass(eq=False)
class Scenario:
    graph: object
    objectives: object
    attack: object = NO_ATTACK
    policy: object = STATIC
    max_iterations: int = 5000
    primal_tol: float = 1e-8
    consensus_tol: float = 1e-8
    seed: int = 0
    algorithm: str = "dw_admm"

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ScenarioError(f"unknown algorithm {self.algorithm!r}", field="algorithm")
        if len(self.objectives) != self.graph.node_count:
            raise ScenarioError(
                f"{len(self.objectives)} objectives for {self.graph.node_count} nodes",
                field="objective",
            )
        if self.max_iterations < 0:
            raise ScenarioError("max_iterations must be >= 0", field="max_iter")
        self.attack.validate_for(self.graph.node_count, self.objectives.dim)

    @property
    def effective_policy(self):
        return STATIC if self.algorithm == "conventional_admm" else self.policy

    @property
    def error_free(self):
        return not self.attack.active

    @cached_property
    def validation(self):
        return validate_assumptions(self.graph.at_base(), self.attack.byzantine_nodes)

    def check(self):
        """Raise for assumption violations in error-free mode; return warnings otherwise."""
        report = self.validation
        if report.ok:
            return []
        if self.error_free:
            raise ScenarioError("; ".join(report.messages), field="graph")
        return list(report.messages)

    @cached_property
    def reference(self):
        return Reference.build(self.graph, self.objectives, self.attack.byzantine_nodes)

    def with_algorithm(self, algorithm):
        return replace(self, algorithm=algorithm)


@dataclass(eq=False)
class IterateState:
    k: int
    x: np.ndarray
    z: np.ndarray
    e: np.ndarray
    lam: np.ndarray
    graph: object
    trust: object = None
    y: np.ndarray = None
    edge_duals: np.ndarray = None
    z_history: tuple = ()
    lam_update: np.ndarray = None  # dual-update output of the last step, before any reset
    weight_scale: float = 1.0  # running product of uniform weight factors

    @property
    def isolated(self):
        return self.trust.isolated if self.trust is not None else frozenset()


def init(scenario):
    """Zero iterates and duals at the base edge weights."""
    scenario.check()
    N, n = scenario.graph.node_count, scenario.objectives.dim
    zeros = np.zeros((N, n))
    policy = scenario.effective_policy
    graph = scenario.graph.at_base()
    trust = TrustState.initial(graph, policy) if scenario.algorithm == "dw_admm" else None
    return IterateState(
        k=0,
        x=zeros.copy(),
        z=zeros.copy(),
        e=zeros.copy(),
        lam=zeros.copy(),
        graph=graph,
        trust=trust,
        y=zeros.copy() if policy.scalar_mode else None,
        edge_duals=np.zeros((graph.edge_count, n)),
        z_history=(zeros.copy(),),
        lam_update=zeros.copy(),
    )


def _push_history(history, z, keep):
    if keep <= 0:
        return ()
    return (history + (z,))[-keep:]


def step(state, scenario):
    """Advance one iteration; returns a new state."""
    if scenario.algorithm == "conventional_admm":
        return _conventional_step(state, scenario)
    return _dw_step(state, scenario)


def _dw_step(state, scenario):
    k = state.k
    policy = scenario.policy
    lap = build_laplacians(state.graph)

    rhs = lap.unsigned @ state.z - state.lam
    try:
        x = solve_primal_all(scenario.objectives, lap.degrees, rhs)
    except SolverError as exc:
        exc.iteration = k + 1
        raise

    e, z = corrupt(scenario.attack, x, k + 1, state.z_history)
    lam_update = state.lam + lap.signed @ z
    edges = np.array(state.graph.edges, dtype=int).reshape(-1, 2)
    edge_duals = state.edge_duals + state.graph.weights[:, None] * (z[edges[:, 0]] - z[edges[:, 1]])

    trust = update_trust(state.trust, state.graph, z, own_x=x)
    graph, trust = update_weights(policy, trust, state.graph, k)

    lam = lam_update
    newly = trust.isolated - state.isolated
    if newly and policy.reset_isolated_duals:
        lam = lam_update.copy()
        edge_duals = edge_duals.copy()
        for pos, (i, j) in enumerate(state.graph.edges):
            if i in newly or j in newly:
                lam[i] -= edge_duals[pos]
                lam[j] += edge_duals[pos]
                edge_duals[pos] = 0.0

    y, scale = None, state.weight_scale
    if policy.scalar_mode:
        y = state.y + state.weight_scale * (scenario.reference.sqrt_signed @ z)
        scale = state.weight_scale * policy.scalar(k) if policy.mode == "uniform_scalar" else 1.0

    return IterateState(
        k=k + 1,
        x=x,
        z=z,
        e=e,
        lam=lam,
        graph=graph,
        trust=trust,
        y=y,
        edge_duals=edge_duals,
        z_history=_push_history(state.z_history, z, scenario.attack.history_needed),
        lam_update=lam_update,
        weight_scale=scale,
    )


def _conventional_step(state, scenario):
    """Textbook decentralized ADMM written node by node with neighbour messages."""
    g = state.graph
    objs = scenario.objectives
    N = g.node_count
    nbrs = [[] for _ in range(N)]
    for (i, j), a in zip(g.edges, g.weights):
        if a > 0.0:
            nbrs[i].append((j, a))
            nbrs[j].append((i, a))
    x = np.empty_like(state.x)
    for i in range(N):
        d_i = 0.0
        msg = np.zeros(objs.dim)
        for j, a in nbrs[i]:
            d_i += a
            msg += a * (state.z[i] + state.z[j])
        try:
            x[i] = solve_primal(objs[i], d_i, msg - state.lam[i])
        except SolverError as exc:
            exc.node, exc.iteration = i, state.k + 1
            raise

    e, z = corrupt(scenario.attack, x, state.k + 1, state.z_history)
    lam = state.lam.copy()
    for i in range(N):
        for j, a in nbrs[i]:
            lam[i] += a * (z[i] - z[j])

    y = state.y + scenario.reference.sqrt_signed @ z
    return replace(
        state,
        k=state.k + 1,
        x=x,
        z=z,
        e=e,
        lam=lam,
        y=y,
        z_history=_push_history(state.z_history, z, scenario.attack.history_needed),
        lam_update=lam,
    )


def iterate(scenario, state=None):
    """Yield ``(prev, cur, laplacians_used)`` for each step, indefinitely."""
    state = init(scenario) if state is None else state
    while True:
        lap = build_laplacians(state.graph)
        nxt = step(state, scenario)
        yield state, nxt, lap
        state = nxt


@dataclass
class RunRecord:
    scenario: object
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    final_state: object = None
    states: list = None


def _converged(prev, cur, scenario):
    active = sorted(set(range(scenario.graph.node_count)) - cur.isolated)
    if np.linalg.norm(cur.x - prev.x) > scenario.primal_tol:
        return False
    L0 = induced_signed(scenario.reference.base.signed, active)
    return np.linalg.norm(L0 @ cur.x[active]) <= scenario.consensus_tol


def run(scenario, keep_states=False, stop_on_convergence=True):
    """
    Run to convergence or ``max_iterations``.

    Parameters
    ----------
    scenario : Scenario
    keep_states : bool
        Keep every ``IterateState`` (including the initial one) on the record.
    stop_on_convergence : bool
        When false, always run the full ``max_iterations``.

    Returns
    -------
    RunRecord
    """
    t0 = time.perf_counter()
    warnings = scenario.check()
    ref = scenario.reference
    state = init(scenario)
    record = RunRecord(scenario=scenario, states=[state] if keep_states else None)
    converged = diverged = False
    honest_disconnected_at = None
    honest = ref.honest

    if scenario.max_iterations > 0:
        for prev, cur, lap in iterate(scenario, state):
            row = metric_row(prev, cur, lap, scenario, ref)
            record.rows.append(row)
            if keep_states:
                record.states.append(cur)
            state = cur
            if (
                honest_disconnected_at is None
                and cur.isolated
                and len(honest) > 1
                and not is_connected(cur.graph, set(range(cur.graph.node_count)) - cur.isolated)
            ):
                honest_disconnected_at = cur.k
            if not np.all(np.isfinite(cur.x)) or np.linalg.norm(cur.x) > DIVERGENCE_LIMIT:
                diverged = True
                break
            if stop_on_convergence and _converged(prev, cur, scenario):
                converged = True
                break
            if cur.k >= scenario.max_iterations:
                break

    if honest_disconnected_at is not None:
        warnings.append(
            f"Assumption 2 violated: active nodes disconnected from iteration {honest_disconnected_at}"
        )
    last = record.rows[-1] if record.rows else None
    record.final_state = state
    record.summary = {
        "algorithm": scenario.algorithm,
        "converged": converged,
        "diverged": diverged,
        "iterations": state.k,
        "final_primal_residual": last.primal_residual if last else None,
        "final_consensus_residual": last.consensus_residual if last else None,
        "final_honest_consensus_residual": last.honest_consensus_residual if last else None,
        "final_honest_primal_residual": last.honest_primal_residual if last else None,
        "final_dual_residual": last.dual_residual if last else None,
        "dist_to_opt": last.dist_to_opt if last else None,
        "dist_to_honest_opt": last.dist_to_honest_opt if last else None,
        "max_lemma2_residual": max((r.lemma2_residual for r in record.rows), default=None),
        "detection_iteration": {str(n): k for n, k in sorted(state.trust.detected.items())}
        if state.trust is not None
        else {},
        "isolated_nodes": sorted(state.isolated),
        "byzantine_nodes": sorted(scenario.attack.byzantine_nodes),
        "warnings": warnings,
        "wall_time": time.perf_counter() - t0,
    }
    return record
