"""
Local convex objectives, the per-node primal subproblem, and centralized oracles.

The primal subproblem at node ``i`` is the stationarity condition

    grad f_i(x) + 2 d_ii x = r_i

where ``d_ii`` is the node's weighted degree and ``r_i`` the corresponding row
of ``L_+ Z - Lambda``. Quadratics solve it directly; other smooth objectives
use damped Newton.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import NumericsError, ObjectiveError, SolverError
from .numerics import solve_spd

PRIMAL_RTOL = 1e-9
NEWTON_MAX_ITER = 100
OPT_GRAD_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class QuadraticObjective:
    """``f(x) = 1/2 x^T Q x - linear^T x + offset`` with ``Q`` symmetric PSD."""

    Q: np.ndarray
    linear: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        lin = np.atleast_1d(np.asarray(self.linear, dtype=float))
        if Q.shape != (lin.size, lin.size):
            raise ObjectiveError(f"Q has shape {Q.shape}, linear term has size {lin.size}")
        if np.linalg.norm(Q - Q.T) > 1e-9 * max(1.0, np.linalg.norm(Q)):
            raise ObjectiveError("Q must be symmetric")
        if np.linalg.eigvalsh(Q)[0] < -1e-10 * max(1.0, np.linalg.norm(Q)):
            raise ObjectiveError("Q must be positive semidefinite")
        object.__setattr__(self, "Q", 0.5 * (Q + Q.T))
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def centered(cls, center, scale=1.0):
        """``scale/2 * ||x - center||^2``."""
        c = np.atleast_1d(np.asarray(center, dtype=float))
        return cls(scale * np.eye(c.size), scale * c, 0.5 * scale * float(c @ c))

    @classmethod
    def from_factor(cls, A, b):
        """Least squares ``1/2 ||A x - b||^2``."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        return cls(A.T @ A, A.T @ b, 0.5 * float(b @ b))

    @property
    def dim(self):
        return self.linear.size

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * float(x @ self.Q @ x) - float(self.linear @ x) + self.offset

    def gradient(self, x):
        return self.Q @ np.asarray(x, dtype=float) - self.linear

    def hessian(self, x=None):
        return self.Q

    def to_config(self):
        return {"Q": self.Q.tolist(), "linear": self.linear.tolist(), "offset": self.offset}


@dataclass(frozen=True, eq=False)
class LogisticObjective:
    """L2-regularised logistic loss over local samples with labels in {-1, +1}."""

    features: np.ndarray
    labels: np.ndarray
    regularizer: float = 1e-2

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.features, dtype=float))
        y = np.atleast_1d(np.asarray(self.labels, dtype=float))
        if A.shape[0] != y.size:
            raise ObjectiveError("features and labels disagree on sample count")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ObjectiveError("labels must be -1 or +1")
        if self.regularizer < 0:
            raise ObjectiveError("regularizer must be nonnegative")
        object.__setattr__(self, "features", A)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "regularizer", float(self.regularizer))

    @property
    def dim(self):
        return self.features.shape[1]

    def value(self, x):
        margins = self.labels * (self.features @ np.asarray(x, dtype=float))
        return float(np.sum(np.logaddexp(0.0, -margins)) + 0.5 * self.regularizer * (x @ x))

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        margins = self.labels * (self.features @ x)
        return -self.features.T @ (self.labels * expit(-margins)) + self.regularizer * x

    def hessian(self, x):
        margins = self.labels * (self.features @ np.asarray(x, dtype=float))
        s = expit(margins)
        w = s * (1.0 - s)
        return (self.features.T * w) @ self.features + self.regularizer * np.eye(self.dim)

    @property
    def lipschitz(self):
        return 0.25 * np.linalg.norm(self.features, 2) ** 2 + self.regularizer

    def to_config(self):
        return {
            "features": self.features.tolist(),
            "labels": self.labels.tolist(),
            "regularizer": self.regularizer,
        }


class SmoothConvexObjective:
    """Generic convex, continuously differentiable objective.

    ``hessian`` is optional; without it the Newton solver falls back to a
    central-difference Jacobian of ``gradient``.
    """

    def __init__(self, dim, value, gradient, lipschitz=None, hessian=None):
        self.dim = int(dim)
        self._value = value
        self._gradient = gradient
        self._hessian = hessian
        self.lipschitz = lipschitz

    def value(self, x):
        return float(self._value(np.asarray(x, dtype=float)))

    def gradient(self, x):
        return np.asarray(self._gradient(np.asarray(x, dtype=float)), dtype=float)

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        if self._hessian is not None:
            return np.asarray(self._hessian(x), dtype=float)
        h = 1e-6 * max(1.0, np.linalg.norm(x))
        H = np.empty((self.dim, self.dim))
        for k in range(self.dim):
            step = np.zeros(self.dim)
            step[k] = h
            H[:, k] = (self.gradient(x + step) - self.gradient(x - step)) / (2 * h)
        return 0.5 * (H + H.T)


class ObjectiveSet:
    """One local objective per node, all with the same dimension."""

    def __init__(self, objectives):
        objectives = list(objectives)
        if not objectives:
            raise ObjectiveError("need at least one objective")
        dims = {obj.dim for obj in objectives}
        if len(dims) != 1:
            raise ObjectiveError(f"objectives disagree on dimension: {sorted(dims)}")
        self.objectives = objectives
        self.dim = dims.pop()
        self.all_quadratic = all(isinstance(o, QuadraticObjective) for o in objectives)
        if self.all_quadratic:
            self._Q = np.stack([o.Q for o in objectives])
            self._lin = np.stack([o.linear for o in objectives])

    def __len__(self):
        return len(self.objectives)

    def __getitem__(self, i):
        return self.objectives[i]

    @property
    def family(self):
        kinds = {type(o) for o in self.objectives}
        if kinds == {QuadraticObjective}:
            return "quadratic"
        if kinds == {LogisticObjective}:
            return "logistic"
        return "mixed"

    def value(self, x):
        x = self._check(x)
        return sum(obj.value(row) for obj, row in zip(self.objectives, x))

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (len(self), self.dim):
            raise ObjectiveError(f"expected shape {(len(self), self.dim)}, got {x.shape}")
        return x


def grad_matrix(obj, x):
    """Stack the local gradients: row ``i`` is ``grad f_i(x_i)``."""
    x = obj._check(x)
    if obj.all_quadratic:
        return np.einsum("ijk,ik->ij", obj._Q, x) - obj._lin
    return np.stack([o.gradient(row) for o, row in zip(obj.objectives, x)])


def solve_primal(obj_i, d_ii, rhs_row, max_iter=NEWTON_MAX_ITER):
    """
    Solve ``grad f_i(x) + 2 d_ii x = rhs_row`` for one node.

    Parameters
    ----------
    obj_i : local objective
    d_ii : float
        Weighted degree of the node, ``>= 0``. Zero means the node is cut
        off and simply minimises its own objective.
    rhs_row : ndarray, shape (n,)
    max_iter : int
        Newton iteration cap for non-quadratic objectives.

    Returns
    -------
    ndarray, shape (n,)
    """
    d = float(d_ii)
    if d < 0:
        raise SolverError(f"negative degree {d}")
    r = np.atleast_1d(np.asarray(rhs_row, dtype=float))
    if isinstance(obj_i, QuadraticObjective):
        try:
            return solve_spd(obj_i.Q + 2.0 * d * np.eye(obj_i.dim), obj_i.linear + r)
        except NumericsError as exc:
            raise SolverError(f"singular primal system: {exc}") from exc
    return _newton_primal(obj_i, d, r, max_iter)


def _newton_primal(obj_i, d, r, max_iter):
    tol = PRIMAL_RTOL * max(1.0, np.linalg.norm(r))

    def merit(x):
        return obj_i.value(x) + d * float(x @ x) - float(r @ x)

    def polish(x, g):
        # one extra Newton step costs little and lands at round-off level
        try:
            x_new = x + np.linalg.solve(obj_i.hessian(x) + 2.0 * d * eye, -g)
        except np.linalg.LinAlgError:
            return x
        g_new = obj_i.gradient(x_new) + 2.0 * d * x_new - r
        return x_new if np.linalg.norm(g_new) < np.linalg.norm(g) else x

    x = np.zeros(obj_i.dim)
    eye = np.eye(obj_i.dim)
    for _ in range(max_iter):
        g = obj_i.gradient(x) + 2.0 * d * x - r
        if np.linalg.norm(g) <= tol:
            return polish(x, g)
        H = obj_i.hessian(x) + 2.0 * d * eye
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError as exc:
            raise SolverError("singular Newton system") from exc
        x_full = x + step
        if np.linalg.norm(obj_i.gradient(x_full) + 2.0 * d * x_full - r) <= 0.5 * np.linalg.norm(g):
            # quadratic-convergence regime: merit differences are below round-off here
            x = x_full
            continue
        # Armijo backtracking on the (convex) merit whose gradient is g
        t, phi0, slope = 1.0, merit(x), float(g @ step)
        while merit(x + t * step) > phi0 + 1e-4 * t * slope and t > 1e-12:
            t *= 0.5
        x = x + t * step
    g = obj_i.gradient(x) + 2.0 * d * x - r
    if np.linalg.norm(g) <= tol:
        return polish(x, g)
    raise SolverError(f"Newton did not converge in {max_iter} iterations (residual {np.linalg.norm(g):.3e})")


def solve_primal_all(obj, degrees, rhs):
    """Row-wise primal solve for every node, in node order."""
    rhs = obj._check(rhs)
    degrees = np.asarray(degrees, dtype=float)
    if obj.all_quadratic:
        n = obj.dim
        systems = obj._Q + 2.0 * degrees[:, None, None] * np.eye(n)
        try:
            x = np.linalg.solve(systems, (obj._lin + rhs)[..., None])[..., 0]
        except np.linalg.LinAlgError:
            x = None
        if x is not None and np.all(np.isfinite(x)):
            resid = np.linalg.norm(np.einsum("ijk,ik->ij", systems, x) - obj._lin - rhs, axis=1)
            if np.all(resid <= PRIMAL_RTOL * np.maximum(1.0, np.linalg.norm(rhs, axis=1))):
                return x
        # fall through to per-node solves to pinpoint the failing node
    out = np.empty_like(rhs)
    for i, (o, d, r) in enumerate(zip(obj.objectives, degrees, rhs)):
        try:
            out[i] = solve_primal(o, d, r)
        except SolverError as exc:
            exc.node = i
            raise
    return out


def centralized_optimum(obj, subset=None, max_iter=200):
    """
    Minimiser of ``sum_{i in subset} f_i(x)``.

    Closed form for quadratics; damped Newton otherwise, run until the summed
    gradient norm is at most 1e-10.
    """
    nodes = range(len(obj)) if subset is None else sorted({int(s) for s in subset})
    if not nodes:
        raise ObjectiveError("subset must be nonempty")
    objs = [obj[i] for i in nodes]
    if all(isinstance(o, QuadraticObjective) for o in objs):
        Q = sum(o.Q for o in objs)
        lin = sum(o.linear for o in objs)
        try:
            x = solve_spd(Q, lin)
        except NumericsError as exc:
            raise ObjectiveError(f"summed objective has no unique minimiser: {exc}") from exc
        # one refinement step tightens the gradient residual
        return x + np.linalg.solve(Q, lin - Q @ x)

    def grad(x):
        return sum(o.gradient(x) for o in objs)

    def hess(x):
        return sum(o.hessian(x) for o in objs)

    def val(x):
        return sum(o.value(x) for o in objs)

    x = np.zeros(obj.dim)
    for _ in range(max_iter):
        g = grad(x)
        gnorm = np.linalg.norm(g)
        if gnorm <= OPT_GRAD_TOL:
            return x
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > 1e12:
            break
        H = hess(x)
        try:
            step = np.linalg.solve(H + 1e-14 * np.eye(obj.dim), -g)
        except np.linalg.LinAlgError:
            step = -g
        if np.linalg.norm(grad(x + step)) <= 0.5 * gnorm:
            x = x + step
            continue
        t, f0, slope = 1.0, val(x), float(g @ step)
        while val(x + t * step) > f0 + 1e-4 * t * slope and t > 1e-14:
            t *= 0.5
        x = x + t * step
    raise ObjectiveError("summed objective appears unbounded below or has no minimiser")
