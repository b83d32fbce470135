"""Local objective functions and exact first/second-order oracles.

Two concrete objective families are supported: quadratics 1/2 x'Qx + c'x + r
and ridge-regularized logistic losses on (sparse) sample matrices. A problem
instance bundles one objective per agent together with dataset sizes and the
per-agent curvature interval [mu_i, L_i]; the global objective is the
dataset-size weighted average of the locals, which reduces to the plain
average for equal sizes.

All oracles are pure functions of immutable objects and safe to share across
threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

__all__ = [
    "QuadraticObjective",
    "LogisticObjective",
    "WeightedSumObjective",
    "ProblemInstance",
    "eval_loss",
    "eval_grad",
    "hessian_vec",
    "global_objective",
]

_SYM_TOL = 1e-12


def _as_vector(x, dim, name="x"):
    x = np.asarray(x, dtype=float)
    if x.shape != (dim,):
        raise ValueError(f"{name} has shape {x.shape}, expected ({dim},)")
    return x


@dataclass(frozen=True)
class QuadraticObjective:
    """f(x) = 1/2 x'Qx + c'x + r with symmetric curvature matrix Q."""

    Q: np.ndarray
    c: np.ndarray
    r: float = 0.0

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        c = np.asarray(self.c, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError(f"Q must be square, got shape {Q.shape}")
        if c.shape != (Q.shape[0],):
            raise ValueError(f"c has shape {c.shape}, expected ({Q.shape[0]},)")
        scale = max(1.0, float(np.abs(Q).max(initial=0.0)))
        if np.abs(Q - Q.T).max(initial=0.0) > _SYM_TOL * scale:
            raise ValueError("Q is not symmetric within 1e-12")
        object.__setattr__(self, "Q", 0.5 * (Q + Q.T))
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "r", float(self.r))

    @property
    def dim(self) -> int:
        return self.Q.shape[0]

    def loss(self, x) -> float:
        x = _as_vector(x, self.dim)
        return float(0.5 * x @ (self.Q @ x) + self.c @ x + self.r)

    def grad(self, x) -> np.ndarray:
        x = _as_vector(x, self.dim)
        return self.Q @ x + self.c

    def hess_vec(self, x, v) -> np.ndarray:
        _as_vector(x, self.dim)
        v = _as_vector(v, self.dim, "v")
        return self.Q @ v

    def curvature_interval(self):
        """(smallest, largest) eigenvalue of Q."""
        w = np.linalg.eigvalsh(self.Q)
        return float(w[0]), float(w[-1])


@dataclass(frozen=True)
class LogisticObjective:
    """Mean logistic loss over m samples plus a ridge term reg/2 ||x||^2.

    ``features`` is an m-by-d matrix (kept sparse; it is only ever applied in
    matrix-vector products) and every label must be -1 or +1.
    """

    features: sp.csr_matrix
    labels: np.ndarray
    reg: float = 0.0

    def __post_init__(self):
        A = sp.csr_matrix(self.features, dtype=float)
        b = np.asarray(self.labels, dtype=float)
        if b.ndim != 1 or b.shape[0] != A.shape[0]:
            raise ValueError(
                f"labels have shape {b.shape}, expected ({A.shape[0]},)")
        if not np.all(np.abs(b) == 1.0):
            raise ValueError("every label must be -1 or +1")
        if self.reg < 0:
            raise ValueError("reg must be nonnegative")
        if A.shape[0] < 1:
            raise ValueError("need at least one sample")
        object.__setattr__(self, "features", A)
        object.__setattr__(self, "labels", b)
        object.__setattr__(self, "reg", float(self.reg))

    @property
    def m(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def _margins(self, x):
        return self.labels * (self.features @ x)

    def loss(self, x) -> float:
        x = _as_vector(x, self.dim)
        t = self._margins(x)
        # log(1 + exp(-t)) evaluated without overflow for either sign of t
        val = np.logaddexp(0.0, -t).mean()
        return float(val + 0.5 * self.reg * (x @ x))

    def grad(self, x) -> np.ndarray:
        x = _as_vector(x, self.dim)
        t = self._margins(x)
        w = -self.labels * expit(-t) / self.m
        return self.features.T @ w + self.reg * x

    def hess_vec(self, x, v) -> np.ndarray:
        x = _as_vector(x, self.dim)
        v = _as_vector(v, self.dim, "v")
        t = self._margins(x)
        s = expit(t) * expit(-t)  # sigma'(t), bounded by 1/4
        Av = self.features @ v
        return self.features.T @ (s * Av / self.m) + self.reg * v


@dataclass(frozen=True)
class WeightedSumObjective:
    """Convex combination sum_i w_i f_i of objectives sharing one dimension."""

    parts: tuple
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(self.parts) != w.shape[0] or len(self.parts) == 0:
            raise ValueError("parts and weights must be nonempty, same length")
        if np.any(w < 0) or not np.isclose(w.sum(), 1.0, atol=1e-12):
            raise ValueError("weights must be nonnegative and sum to 1")
        dims = {p.dim for p in self.parts}
        if len(dims) != 1:
            raise ValueError(f"objectives disagree on dimension: {sorted(dims)}")
        object.__setattr__(self, "parts", tuple(self.parts))
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.parts[0].dim

    def loss(self, x) -> float:
        return float(sum(w * p.loss(x) for p, w in zip(self.parts, self.weights)))

    def grad(self, x) -> np.ndarray:
        g = np.zeros(self.dim)
        for p, w in zip(self.parts, self.weights):
            g += w * p.grad(x)
        return g

    def hess_vec(self, x, v) -> np.ndarray:
        h = np.zeros(self.dim)
        for p, w in zip(self.parts, self.weights):
            h += w * p.hess_vec(x, v)
        return h


def eval_loss(obj, x) -> float:
    """Objective value f(x)."""
    return obj.loss(x)


def eval_grad(obj, x) -> np.ndarray:
    """Exact analytic gradient of f at x."""
    return obj.grad(x)


def hessian_vec(obj, x, v) -> np.ndarray:
    """Exact Hessian-vector product (d^2 f(x)) v, no finite differences."""
    return obj.hess_vec(x, v)


@dataclass(frozen=True)
class ProblemInstance:
    """N local objectives with sizes |D_i| and curvature intervals [mu_i, L_i].

    The declared interval must contain the objective's actual curvature: for
    quadratics the spectrum of Q is checked against it at construction time.
    For logistic objectives mu_i is typically the ridge weight (the only
    global strong-convexity certificate) and may understate the true local
    curvature.
    """

    locals: tuple
    sizes: tuple
    mus: tuple
    ells: tuple

    def __post_init__(self):
        locs = tuple(self.locals)
        sizes = tuple(int(s) for s in self.sizes)
        mus = tuple(float(m) for m in self.mus)
        ells = tuple(float(l) for l in self.ells)
        n = len(locs)
        if n < 1:
            raise ValueError("need at least one agent")
        if not (len(sizes) == len(mus) == len(ells) == n):
            raise ValueError("locals, sizes, mus, ells must have equal length")
        if any(s < 1 for s in sizes):
            raise ValueError("every dataset size must be at least 1")
        for i, (mu, L) in enumerate(zip(mus, ells)):
            if not (0 < mu <= L):
                raise ValueError(f"agent {i}: need 0 < mu <= L, got ({mu}, {L})")
        dims = {o.dim for o in locs}
        if len(dims) != 1:
            raise ValueError("all agents must share the model dimension")
        for i, obj in enumerate(locs):
            if isinstance(obj, QuadraticObjective):
                lo, hi = obj.curvature_interval()
                tol = 1e-8 * max(1.0, ells[i])
                if lo < mus[i] - tol or hi > ells[i] + tol:
                    raise ValueError(
                        f"agent {i}: spectrum [{lo:.6g}, {hi:.6g}] outside "
                        f"declared [{mus[i]:.6g}, {ells[i]:.6g}]")
        object.__setattr__(self, "locals", locs)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "mus", mus)
        object.__setattr__(self, "ells", ells)

    @property
    def n_agents(self) -> int:
        return len(self.locals)

    @property
    def dim(self) -> int:
        return self.locals[0].dim

    @property
    def weights(self) -> np.ndarray:
        s = np.asarray(self.sizes, dtype=float)
        return s / s.sum()

    @classmethod
    def from_quadratics(cls, quads, sizes=None):
        """Build an instance from quadratics, reading (mu_i, L_i) off spectra."""
        quads = tuple(quads)
        if sizes is None:
            sizes = (1,) * len(quads)
        intervals = [q.curvature_interval() for q in quads]
        return cls(quads, tuple(sizes),
                   tuple(iv[0] for iv in intervals),
                   tuple(iv[1] for iv in intervals))


def global_objective(inst: ProblemInstance) -> WeightedSumObjective:
    """The |D_i|-weighted average objective; plain average for equal sizes."""
    return WeightedSumObjective(inst.locals, inst.weights)
