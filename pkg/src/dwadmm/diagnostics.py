"""
Per-iteration metrics and executable optimality/recursion checks.

Notation follows the engine: ``X`` local iterates, ``Z`` broadcasts,
``E = Z - X`` injected errors, ``Lam`` stacked duals, ``Y`` the square-root
dual with ``Lam = N Y`` where ``N`` is the principal square root of the base
signed Laplacian.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .graph import build_laplacians, induced_signed
from .numerics import pinv_symmetric, principal_sqrt, weighted_norm_sq
from .objective import centralized_optimum, grad_matrix
from .errors import PolicyError

CSV_COLUMNS = (
    "iter",
    "primal_residual",
    "consensus_residual",
    "dual_residual",
    "dist_to_opt",
    "dist_to_honest_opt",
    "lemma2_residual",
    "dual_equiv_residual",
    "lyapunov_energy",
    "min_trust",
    "isolated_count",
    "error_norm",
)


@dataclass(eq=False)
class Reference:
    """Ground truth and fixed matrices derived once per scenario."""

    base: object  # LaplacianPair at base weights
    sqrt_signed: np.ndarray  # N
    sqrt_signed_pinv: np.ndarray
    honest: list
    x_star: np.ndarray  # consensual optimum, shape (N, n)
    honest_x_star: np.ndarray  # honest-subset optimum, shape (|R|, n)
    lam_star: np.ndarray
    y_star: np.ndarray

    @classmethod
    def build(cls, graph, objectives, byzantine=()):
        base = build_laplacians(graph.at_base())
        N = principal_sqrt(base.signed)
        n_nodes = graph.node_count
        honest = sorted(set(range(n_nodes)) - set(byzantine))
        x_opt = centralized_optimum(objectives)
        x_star = np.tile(x_opt, (n_nodes, 1))
        honest_opt = centralized_optimum(objectives, honest) if honest else x_opt
        lam_star = -grad_matrix(objectives, x_star)
        N_pinv = pinv_symmetric(N)
        return cls(
            base=base,
            sqrt_signed=N,
            sqrt_signed_pinv=N_pinv,
            honest=honest,
            x_star=x_star,
            honest_x_star=np.tile(honest_opt, (len(honest), 1)),
            lam_star=lam_star,
            y_star=N_pinv @ lam_star,
        )


def lemma2_residual(prev, cur, laplacians, grad):
    """
    ``||L_+(Z' - Z) - 2 D E' + Lam' + grad f(X')||_F`` for one step.

    ``laplacians`` must be the pair the step used (built from ``prev.graph``)
    and ``Lam'`` is the dual-update output of the step.
    """
    lhs = (
        laplacians.unsigned @ (cur.z - prev.z)
        - 2.0 * laplacians.degree @ cur.e
        + cur.lam_update
        + grad
    )
    return float(np.linalg.norm(lhs))


def optimality_residuals(x, lam, obj, L0_minus):
    """(stationarity ``||grad f(x) + lam||``, consensus ``||L_-^0 x||``)."""
    x = np.asarray(x, dtype=float)
    stationarity = float(np.linalg.norm(grad_matrix(obj, x) + lam))
    consensus = float(np.linalg.norm(L0_minus @ x))
    return stationarity, consensus


def dual_equiv_residual(state, sqrt_signed):
    """``||Lam - N Y||_F``; only defined when ``Y`` is tracked."""
    if state.y is None:
        return None
    return float(np.linalg.norm(state.lam - sqrt_signed @ state.y))


def lyapunov_energy(state, x_star, y_star, policy):
    """
    Energy ``||Y - Y*||^2 / C + ||X - X*||^2_{L_+}`` at the state's iteration.

    ``C`` is the cumulative scalar weighting (1 under the static policy) and
    ``L_+`` the current unsigned Laplacian, i.e. the block-diagonal weight
    ``diag(C^{-1} I, L_+^k)``. Undefined for per-edge (trust-adaptive) weights.
    """
    if not policy.scalar_mode:
        raise PolicyError("Lyapunov energy needs a static or uniform_scalar policy")
    if state.y is None:
        raise PolicyError("state does not track Y")
    lap = build_laplacians(state.graph)
    dual_part = weighted_norm_sq(state.y - y_star, np.eye(state.y.shape[0])) / state.weight_scale
    primal_part = weighted_norm_sq(state.x - x_star, lap.unsigned)
    return dual_part + primal_part


def error_coupling_term(prev, cur, laplacians, x_star, lam_star, rows=None):
    """
    Inner product of ``E'`` with ``L_+(Z' - Z) + (Lam' - Lam*) + 2 D (X' - X*)``.

    ``rows`` restricts the sum to a node subset (e.g. the nodes still
    participating after isolation).
    """
    other = (
        laplacians.unsigned @ (cur.z - prev.z)
        + (cur.lam_update - lam_star)
        + 2.0 * laplacians.degree @ (cur.x - x_star)
    )
    prod = cur.e * other
    if rows is not None:
        prod = prod[sorted(rows)]
    return float(np.sum(prod))


@dataclass
class MetricRow:
    iter: int
    primal_residual: float
    consensus_residual: float
    dual_residual: float
    dist_to_opt: float
    dist_to_honest_opt: float
    lemma2_residual: float
    dual_equiv_residual: object
    lyapunov_energy: object
    min_trust: object
    isolated_count: int
    error_norm: float
    honest_consensus_residual: float = 0.0
    honest_primal_residual: float = 0.0
    lemma2_scale: float = 1.0
    error_coupling: float = 0.0

    def csv_values(self):
        return [getattr(self, c) for c in CSV_COLUMNS]

    def to_dict(self):
        return asdict(self)


def metric_row(prev, cur, laplacians, scenario, ref):
    """All per-iteration quantities for the step ``prev -> cur``."""
    honest = ref.honest
    grad = grad_matrix(scenario.objectives, cur.x)
    L0 = ref.base.signed
    dx = cur.x - prev.x
    policy = scenario.effective_policy
    active = sorted(set(range(scenario.graph.node_count)) - cur.isolated)

    energy = None
    if policy.scalar_mode and cur.y is not None:
        energy = lyapunov_energy(cur, ref.x_star, ref.y_star, policy)
    min_trust = cur.trust.min_trust(cur.graph) if cur.trust is not None else None
    if min_trust is not None and np.isnan(min_trust):
        min_trust = None

    return MetricRow(
        iter=cur.k,
        primal_residual=float(np.linalg.norm(dx)),
        consensus_residual=float(np.linalg.norm(L0 @ cur.x)),
        dual_residual=float(np.linalg.norm(cur.lam_update - prev.lam)),
        dist_to_opt=float(np.linalg.norm(cur.x - ref.x_star)),
        dist_to_honest_opt=float(np.linalg.norm(cur.x[honest] - ref.honest_x_star)),
        lemma2_residual=lemma2_residual(prev, cur, laplacians, grad),
        dual_equiv_residual=dual_equiv_residual(cur, ref.sqrt_signed),
        lyapunov_energy=energy,
        min_trust=min_trust,
        isolated_count=len(cur.isolated),
        error_norm=float(np.linalg.norm(cur.e)),
        honest_consensus_residual=float(np.linalg.norm(induced_signed(L0, honest) @ cur.x[honest])),
        honest_primal_residual=float(np.linalg.norm(dx[honest])),
        lemma2_scale=max(1.0, float(np.linalg.norm(cur.lam_update))),
        error_coupling=error_coupling_term(
            prev, cur, laplacians, ref.x_star, ref.lam_star, rows=active
        ),
    )
