"""
Neighbour trust from broadcast discrepancies, and the edge reweighting policy.

Weights evolve multiplicatively per edge, ``a^{k+1}_ij = m^k_ij a^k_ij``.
Three policies are supported:

static
    ``m = 1``; the weights never change (conventional ADMM).
uniform_scalar
    ``m^k = c^k`` on every edge, so every Laplacian is the base Laplacian
    times the running product of the schedule.
trust_adaptive
    ``m`` interpolates linearly between ``m_min`` and 1 in the edge trust,
    and is 0 forever on edges touching an isolated node.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import PolicyError

MODES = ("static", "uniform_scalar", "trust_adaptive")

# slack on the isolation threshold so that 1 - 7*0.1 does not count as below 0.3
TRUST_EPS = 1e-12


@dataclass(frozen=True)
class WeightPolicy:
    mode: str = "static"
    schedule: tuple = (1.0,)
    alpha: float = 2.0
    gamma: float = 0.1
    eta: float = 0.5
    tau: float = 0.3
    m_min: float = 0.5
    initial_trust: float = 1.0
    reset_isolated_duals: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise PolicyError(f"unknown policy mode {self.mode!r}; expected one of {MODES}")
        object.__setattr__(self, "schedule", tuple(float(c) for c in self.schedule))
        if not self.schedule:
            raise PolicyError("schedule must be nonempty")
        if self.alpha <= 0:
            raise PolicyError("alpha must be positive")
        if self.mode == "uniform_scalar" and any(c <= 0 for c in self.schedule):
            raise PolicyError("uniform_scalar factors must be positive")
        if self.gamma <= 0 or self.eta <= 0:
            raise PolicyError("gamma and eta must be positive")
        if not 0.0 <= self.tau < 1.0:
            raise PolicyError("tau must lie in [0, 1)")
        if not 0.0 <= self.m_min <= 1.0:
            raise PolicyError("m_min must lie in [0, 1]")
        if not 0.0 <= self.initial_trust <= 1.0:
            raise PolicyError("initial_trust must lie in [0, 1]")

    def scalar(self, k):
        """Factor ``c^k`` (schedule cycles; capped at ``alpha``)."""
        return min(self.schedule[k % len(self.schedule)], self.alpha)

    @property
    def scalar_mode(self):
        """Whether the cumulative weighting is a multiple of the identity."""
        return self.mode in ("static", "uniform_scalar")

    def to_config(self):
        return {
            "mode": self.mode,
            "schedule": list(self.schedule),
            "alpha": self.alpha,
            "gamma": self.gamma,
            "eta": self.eta,
            "tau": self.tau,
            "m_min": self.m_min,
            "initial_trust": self.initial_trust,
            "reset_isolated_duals": self.reset_isolated_duals,
        }


STATIC = WeightPolicy()


@dataclass(frozen=True, eq=False)
class TrustState:
    """Directed trust ``trust[i, j]``: node i's confidence in neighbour j.

    Only entries on graph edges are meaningful. ``detected`` maps each
    isolated node to the iteration at which it was cut off.
    """

    trust: np.ndarray
    isolated: frozenset = frozenset()
    detected: dict = field(default_factory=dict)
    tau: float = 0.3
    gamma: float = 0.1
    eta: float = 0.5

    @classmethod
    def initial(cls, g, policy=STATIC):
        t = np.zeros((g.node_count, g.node_count))
        for i, j in g.edges:
            t[i, j] = t[j, i] = policy.initial_trust
        return cls(t, tau=policy.tau, gamma=policy.gamma, eta=policy.eta)

    def edge_trust(self, i, j):
        return min(self.trust[i, j], self.trust[j, i])

    def min_trust(self, g):
        """Lowest directed trust over edges between non-isolated nodes (nan if none)."""
        vals = [
            min(self.trust[i, j], self.trust[j, i])
            for i, j in g.edges
            if i not in self.isolated and j not in self.isolated
        ]
        return float(min(vals)) if vals else float("nan")


def _coordinate_median(pool):
    srt = np.sort(pool, axis=0)
    m = srt.shape[0]
    if m % 2:
        return srt[m // 2]
    return 0.5 * (srt[m // 2 - 1] + srt[m // 2])


def update_trust(state, g, z_received, own_x=None):
    """
    One round of discrepancy-based trust updates.

    Every non-isolated node ``i`` forms the coordinate-wise median ``med_i``
    of its own value and its non-isolated neighbours' broadcasts. Neighbour
    ``j`` deviates when ``||z_j - med_i|| / (1 + ||med_i||) > eta``; deviating
    neighbours lose ``gamma`` trust, the rest regain ``gamma / 4``.

    ``own_x`` supplies node i's own entry in its median (a node knows its
    true iterate). When omitted the broadcast ``z_i`` is used.
    """
    z = np.asarray(z_received, dtype=float)
    own = z if own_x is None else np.asarray(own_x, dtype=float)
    t = state.trust.copy()
    adj = g.adjacency_lists()
    iso = state.isolated
    for i in range(g.node_count):
        if i in iso:
            continue
        nbrs = [j for j in adj[i] if j not in iso]
        if not nbrs:
            continue
        pool = np.vstack([own[i][None, :], z[nbrs]])
        med = _coordinate_median(pool)
        scale = 1.0 + np.sqrt(med @ med)
        diff = z[nbrs] - med
        devs = np.sqrt(np.einsum("ij,ij->i", diff, diff)) / scale
        for j, dev in zip(nbrs, devs):
            if dev > state.eta:
                t[i, j] = max(0.0, t[i, j] - state.gamma)
            else:
                t[i, j] = min(1.0, t[i, j] + state.gamma / 4.0)
    return replace(state, trust=t)


def newly_distrusted(state, g):
    """Non-isolated nodes whose trust from some non-isolated neighbour is below tau."""
    adj = g.adjacency_lists(positive_only=False)
    out = set()
    for j in range(g.node_count):
        if j in state.isolated:
            continue
        if any(
            i not in state.isolated and state.trust[i, j] < state.tau - TRUST_EPS
            for i in adj[j]
        ):
            out.add(j)
    return out


def update_weights(policy, trust, g, k):
    """
    Reweight the edges for iteration ``k + 1``.

    Returns
    -------
    (graph, trust) : tuple
        The new snapshot, and the trust state with any newly isolated nodes
        added (with detection iteration ``k + 1``).
    """
    if policy.mode == "static":
        return g, trust
    if policy.mode == "uniform_scalar":
        return g.with_weights(policy.scalar(k) * g.weights), trust

    newly = newly_distrusted(trust, g)
    isolated = trust.isolated | newly
    factors = np.empty(g.edge_count)
    for e, (i, j) in enumerate(g.edges):
        if i in isolated or j in isolated:
            factors[e] = 0.0
        else:
            factors[e] = policy.m_min + (1.0 - policy.m_min) * trust.edge_trust(i, j)
    factors = np.minimum(factors, policy.alpha)
    if newly:
        detected = dict(trust.detected)
        detected.update({j: k + 1 for j in sorted(newly)})
        trust = replace(trust, isolated=frozenset(isolated), detected=detected)
    return g.with_weights(factors * g.weights), trust


def cumulative_scalar(policy, k):
    """Running product ``c^0 c^1 ... c^{k-1}`` (1 for ``k = 0``)."""
    if not policy.scalar_mode:
        raise PolicyError(f"cumulative_scalar is undefined for mode {policy.mode!r}")
    if policy.mode == "static":
        return 1.0
    out = 1.0
    for i in range(k):
        out *= policy.scalar(i)
    return out

