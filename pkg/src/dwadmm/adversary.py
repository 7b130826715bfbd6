"""
Byzantine corruption of broadcasts.

Every node computes its local iterate ``x_i`` honestly; Byzantine nodes then
broadcast ``z_i = x_i + e_i`` instead of ``x_i``. Honest rows of ``E`` are
always exactly zero.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import AttackError

MODELS = ("none", "constant_bias", "gaussian_noise", "sign_flip", "collusion", "replay")


@dataclass(frozen=True, eq=False)
class AttackSpec:
    """Which nodes are Byzantine and how they corrupt their broadcasts.

    ``params`` holds the model parameter: ``bias`` (vector) for
    constant_bias, ``sigma`` for gaussian_noise, ``target`` (vector) for
    collusion, ``delay`` for replay.
    """

    byzantine_nodes: frozenset = frozenset()
    model: str = "none"
    start_iteration: int = 0
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model not in MODELS:
            raise AttackError(f"unknown attack model {self.model!r}; expected one of {MODELS}")
        object.__setattr__(self, "byzantine_nodes", frozenset(int(b) for b in self.byzantine_nodes))
        if self.start_iteration < 0:
            raise AttackError("start_iteration must be >= 0")
        required = {
            "constant_bias": "bias",
            "gaussian_noise": "sigma",
            "collusion": "target",
            "replay": "delay",
        }.get(self.model)
        if required and required not in self.params:
            raise AttackError(f"model {self.model!r} needs parameter {required!r}")
        if self.model == "replay" and int(self.params["delay"]) < 1:
            raise AttackError("replay delay must be >= 1")
        if self.model == "gaussian_noise" and float(self.params["sigma"]) < 0:
            raise AttackError("sigma must be nonnegative")

    @property
    def active(self):
        return self.model != "none" and bool(self.byzantine_nodes)

    @property
    def history_needed(self):
        return int(self.params["delay"]) if self.model == "replay" else 0

    def honest_nodes(self, node_count):
        return sorted(set(range(node_count)) - self.byzantine_nodes)

    def validate_for(self, node_count, dim):
        bad = [b for b in self.byzantine_nodes if not 0 <= b < node_count]
        if bad:
            raise AttackError(f"byzantine nodes {sorted(bad)} outside 0..{node_count - 1}")
        for key in ("bias", "target"):
            if key in self.params and np.atleast_1d(self.params[key]).size != dim:
                raise AttackError(f"{key} must have length {dim}")

    def to_config(self):
        cfg = {
            "model": self.model,
            "nodes": sorted(self.byzantine_nodes),
            "start": self.start_iteration,
            "seed": self.seed,
        }
        for key, val in sorted(self.params.items()):
            cfg[key] = np.asarray(val).tolist() if key in ("bias", "target") else val
        return cfg


NO_ATTACK = AttackSpec()


def corrupt(spec, x_next, k, history=()):
    """
    Produce the error matrix and broadcast for iteration ``k``.

    Parameters
    ----------
    spec : AttackSpec
    x_next : ndarray, shape (N, n)
        Honest local iterates ``X^k``.
    k : int
        Index of the iterate being broadcast.
    history : sequence of ndarray
        Previous broadcasts ``Z^0 .. Z^{k-1}`` (only the tail is used).

    Returns
    -------
    (E, Z) : tuple of ndarray
    """
    x = np.asarray(x_next, dtype=float)
    if x.ndim != 2:
        raise AttackError(f"x must be N x n, got shape {x.shape}")
    z = x.copy()
    if not spec.active or k < spec.start_iteration:
        return np.zeros_like(x), z
    spec.validate_for(*x.shape)
    rows = sorted(spec.byzantine_nodes)
    model = spec.model
    if model == "constant_bias":
        z[rows] = x[rows] + np.atleast_1d(np.asarray(spec.params["bias"], dtype=float))
    elif model == "gaussian_noise":
        # keyed on (seed, k) so the noise at k does not depend on call order
        rng = np.random.default_rng([spec.seed, k])
        noise = rng.normal(0.0, float(spec.params["sigma"]), size=x.shape)
        z[rows] = x[rows] + noise[rows]
    elif model == "sign_flip":
        z[rows] = -x[rows]
    elif model == "collusion":
        z[rows] = np.atleast_1d(np.asarray(spec.params["target"], dtype=float))
    elif model == "replay":
        delay = int(spec.params["delay"])
        if k - delay < 0 or len(history) < delay:
            raise AttackError(f"replay delay {delay} needs history before iteration {k}")
        past = np.asarray(history[-delay], dtype=float)
        if past.shape != x.shape:
            raise AttackError("history entries must match x in shape")
        z[rows] = past[rows]
    e = z - x
    # z = x + e must hold exactly
    z = x + e
    return e, z
