"""
Weighted undirected networks and their signed/unsigned Laplacians.

Each undirected edge stores one base weight (the weight at iteration 0) and
one current weight. Reweighting produces a new graph snapshot; the base
weights never change, so the initial Laplacians can always be rebuilt.
"""

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import GraphError


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Undirected graph with nonnegative, time-varying edge weights.

    Attributes
    ----------
    node_count : int
        Number of nodes, labelled ``0 .. node_count - 1``.
    edges : tuple of (int, int)
        Undirected edges with ``i < j``, in a fixed order.
    base_weights : ndarray
        Weights at iteration 0, one per edge.
    weights : ndarray
        Current weights, one per edge.
    """

    node_count: int
    edges: tuple
    base_weights: np.ndarray
    weights: np.ndarray
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = int(self.node_count)
        if n < 2:
            raise GraphError(f"need at least 2 nodes, got {n}")
        object.__setattr__(self, "node_count", n)
        edges = tuple((int(i), int(j)) for i, j in self.edges)
        index = {}
        for pos, (i, j) in enumerate(edges):
            if i == j:
                raise GraphError(f"self-loop at node {i}")
            if not (0 <= i < j < n):
                raise GraphError(f"edge ({i}, {j}) must satisfy 0 <= i < j < {n}")
            if (i, j) in index:
                raise GraphError(f"duplicate edge ({i}, {j})")
            index[(i, j)] = pos
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "_index", index)
        for name in ("base_weights", "weights"):
            w = _frozen(getattr(self, name))
            if w.shape != (len(edges),):
                raise GraphError(f"{name} must have one entry per edge")
            if not np.all(np.isfinite(w)) or np.any(w < 0):
                raise GraphError(f"{name} must be finite and nonnegative")
            object.__setattr__(self, name, w)

    @classmethod
    def from_edges(cls, node_count, edges):
        """Build from ``[(i, j, weight), ...]``; endpoints may come in any order."""
        pairs, weights = [], []
        for edge in edges:
            if len(edge) != 3:
                raise GraphError(f"edge {edge!r} must be [i, j, weight]")
            i, j, w = int(edge[0]), int(edge[1]), float(edge[2])
            pairs.append((min(i, j), max(i, j)))
            weights.append(w)
        return cls(node_count, tuple(pairs), weights, weights)

    @property
    def edge_count(self):
        return len(self.edges)

    def edge_index(self, i, j):
        return self._index[(min(i, j), max(i, j))]

    def weight(self, i, j):
        key = (min(i, j), max(i, j))
        return float(self.weights[self._index[key]]) if key in self._index else 0.0

    def with_weights(self, weights):
        return WeightedGraph(self.node_count, self.edges, self.base_weights, weights)

    def at_base(self):
        return self.with_weights(self.base_weights)

    def neighbors(self, i, positive_only=True):
        out = []
        for (a, b), w in zip(self.edges, self.weights):
            if positive_only and w <= 0.0:
                continue
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return sorted(out)

    def adjacency_lists(self, positive_only=True):
        adj = [[] for _ in range(self.node_count)]
        for (i, j), w in zip(self.edges, self.weights):
            if positive_only and w <= 0.0:
                continue
            adj[i].append(j)
            adj[j].append(i)
        return [sorted(a) for a in adj]

    def edge_list(self, base=False):
        w = self.base_weights if base else self.weights
        return [[i, j, float(x)] for (i, j), x in zip(self.edges, w)]


@dataclass(frozen=True, eq=False)
class LaplacianPair:
    degree: np.ndarray
    adjacency: np.ndarray
    signed: np.ndarray
    unsigned: np.ndarray

    @property
    def degrees(self):
        return np.diag(self.degree).copy()


def build_laplacians(g):
    """Degree, adjacency, signed ``D - A`` and unsigned ``D + A`` Laplacians."""
    n = g.node_count
    adj = np.zeros((n, n))
    if g.edge_count:
        idx = np.array(g.edges)
        adj[idx[:, 0], idx[:, 1]] = g.weights
        adj[idx[:, 1], idx[:, 0]] = g.weights
    deg = np.diag(adj.sum(axis=1))
    return LaplacianPair(degree=deg, adjacency=adj, signed=deg - adj, unsigned=deg + adj)


def restrict(matrix, nodes):
    """Principal submatrix on ``nodes`` (rows and columns)."""
    nodes = np.asarray(sorted(nodes), dtype=int)
    return matrix[np.ix_(nodes, nodes)]


def induced_signed(signed, nodes):
    """Signed Laplacian of the subgraph induced on ``nodes``.

    Unlike the plain principal submatrix, degrees only count edges inside
    ``nodes``, so consensual vectors are still in the null space.
    """
    sub = restrict(signed, nodes).copy()
    sub[np.diag_indices_from(sub)] -= sub.sum(axis=1)
    return sub


def is_bipartite(g):
    """2-colouring test on the positive-weight subgraph (BFS)."""
    adj = g.adjacency_lists()
    colour = [-1] * g.node_count
    for root in range(g.node_count):
        if colour[root] >= 0:
            continue
        colour[root] = 0
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if colour[v] < 0:
                    colour[v] = 1 - colour[u]
                    queue.append(v)
                elif colour[v] == colour[u]:
                    return False
    return True


def is_connected(g, subset=None):
    """Whether the positive-weight subgraph induced on ``subset`` is connected."""
    nodes = set(range(g.node_count)) if subset is None else {int(s) for s in subset}
    if not nodes:
        raise GraphError("subset must be nonempty")
    if not nodes <= set(range(g.node_count)):
        raise GraphError(f"subset {sorted(nodes)} has nodes outside the graph")
    adj = g.adjacency_lists()
    start = min(nodes)
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v in nodes and v not in seen:
                seen.add(v)
                stack.append(v)
    return seen == nodes


@dataclass
class ValidationReport:
    """Pass/fail outcome of the structural assumption checks."""

    checks: dict
    messages: list

    @property
    def ok(self):
        return all(self.checks.values())

    def failures(self):
        return [name for name, passed in self.checks.items() if not passed]

    def to_dict(self):
        return {"ok": self.ok, "checks": dict(self.checks), "messages": list(self.messages)}


def validate_assumptions(g, byzantine=()):
    byzantine = {int(b) for b in byzantine}
    honest = set(range(g.node_count)) - byzantine
    checks, messages = {}, []

    checks["non_bipartite"] = not is_bipartite(g)
    if not checks["non_bipartite"]:
        messages.append(
            "Assumption 1 violated: graph is bipartite (needs an odd-length cycle)"
        )
    checks["connected"] = is_connected(g)
    if not checks["connected"]:
        messages.append("graph is not connected")
    checks["honest_connected"] = bool(honest) and is_connected(g, honest)
    if not checks["honest_connected"]:
        messages.append(
            f"Assumption 2 violated: honest nodes {sorted(honest)} do not form a connected subgraph"
        )
    return ValidationReport(checks, messages)


# -- generators ---------------------------------------------------------------

def cycle_graph(n, weight=1.0):
    return WeightedGraph.from_edges(n, [(i, (i + 1) % n, weight) for i in range(n)])


def ring_with_chords(n, offsets=(1, 2), weight=1.0):
    """Circulant graph joining each node to ``i + s`` for every offset ``s``.

    Offsets 1 and 2 together always contain a triangle, so the result is
    non-bipartite for ``n >= 3``.
    """
    edges = {}
    for i in range(n):
        for s in offsets:
            j = (i + int(s)) % n
            if i != j:
                edges[(min(i, j), max(i, j))] = weight
    return WeightedGraph.from_edges(n, [(i, j, w) for (i, j), w in sorted(edges.items())])


def erdos_renyi(n, p, rng, weight_range=(1.0, 1.0), max_tries=1000):
    """Random G(n, p) graph, resampled until connected and non-bipartite."""
    rng = np.random.default_rng(rng)
    lo, hi = weight_range
    iu, ju = np.triu_indices(n, k=1)
    for _ in range(max_tries):
        mask = rng.random(iu.size) < p
        w = rng.uniform(lo, hi, size=int(mask.sum())) if hi > lo else np.full(int(mask.sum()), lo)
        g = WeightedGraph.from_edges(n, list(zip(iu[mask], ju[mask], w)))
        if is_connected(g) and not is_bipartite(g):
            return g
    raise GraphError(f"no connected non-bipartite G({n}, {p}) found in {max_tries} tries")
