"""Per-agent smoothness constants and their dataset-size weighted aggregate.

Exact constants come from eigenvalue computations: the spectrum of Q for
quadratics, and for ridge-logistic losses the top eigenvalue of the Hessian
at the zero model, where sigma'(0) = 1/4 makes the usual quarter bound on the
feature Gram matrix exact. A sampling-based estimator from maximal gradient
difference quotients is provided as well; it lower-bounds the true constant
by construction.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .objectives import (LogisticObjective, ProblemInstance,
                         QuadraticObjective, eval_grad, hessian_vec)

__all__ = [
    "PowerIterationError",
    "SmoothnessReport",
    "power_iteration",
    "exact_smoothness",
    "estimate_smoothness_grad_diff",
    "aggregate_L",
    "report_exact",
    "report_grad_diff",
    "write_report_csv",
]


class PowerIterationError(RuntimeError):
    """Power iteration failed to reach the tolerance; carries the residual."""

    def __init__(self, residual, iterations):
        super().__init__(
            f"power iteration did not converge after {iterations} iterations "
            f"(relative residual {residual:.3e})")
        self.residual = residual
        self.iterations = iterations


def power_iteration(matvec, dim, rel_tol=1e-10, max_iters=None):
    """Largest eigenvalue (and eigenvector) of a symmetric PSD operator.

    Convergence is declared when ||Av - lambda v|| <= rel_tol * |lambda|.
    The iteration budget defaults to 10*dim and exceeding it raises
    PowerIterationError with the last residual.
    """
    if max_iters is None:
        max_iters = max(10 * dim, 50)
    # deterministic start with energy in every coordinate
    v = np.cos(np.arange(dim, dtype=float) + 0.5)
    v /= np.linalg.norm(v)
    lam = 0.0
    residual = np.inf
    for it in range(1, max_iters + 1):
        w = matvec(v)
        lam = float(v @ w)
        residual = float(np.linalg.norm(w - lam * v))
        norm_w = np.linalg.norm(w)
        if residual <= rel_tol * max(abs(lam), 1e-300):
            return lam, v
        if norm_w == 0.0:
            return 0.0, v  # operator annihilates the iterate: top eigenvalue 0
        v = w / norm_w
    raise PowerIterationError(residual / max(abs(lam), 1e-300), max_iters)


def exact_smoothness(obj) -> tuple[float, float]:
    """(mu, L) for one objective.

    Quadratics: the extreme eigenvalues of Q by power iteration, with the
    smallest obtained from the spectrally shifted operator lmax*I - Q.
    Logistic: L = lmax(Gram)/4 + reg via power iteration on the Hessian at
    x = 0 (the point where the quarter bound on sigma' is attained), and
    mu = reg, the only curvature certificate valid on the whole space.
    """
    if isinstance(obj, QuadraticObjective):
        d = obj.dim
        lmax, _ = power_iteration(lambda v: obj.Q @ v, d)
        lmin_shift, _ = power_iteration(lambda v: lmax * v - obj.Q @ v, d)
        return lmax - lmin_shift, lmax
    if isinstance(obj, LogisticObjective):
        d = obj.dim
        x0 = np.zeros(d)
        lmax, _ = power_iteration(lambda v: hessian_vec(obj, x0, v), d)
        return obj.reg, max(lmax, obj.reg)
    raise TypeError(f"unsupported objective type {type(obj).__name__}")


def estimate_smoothness_grad_diff(obj, region_radius, trials, eps, seed=0):
    """Max gradient difference quotient over random probes.

    Draws base points x uniformly from the ball of the given radius,
    perturbs along a uniform random direction u by eps, and returns
    max ||g(x + eps u) - g(x)|| / eps over all trials. Each quotient is at
    most the true Lipschitz constant, so the estimate approaches it from
    below as trials grow.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not eps > 0:
        raise ValueError("eps must be positive")
    d = obj.dim
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(int(trials)):
        u = rng.standard_normal(d)
        u /= np.linalg.norm(u)
        x = rng.standard_normal(d)
        nx = np.linalg.norm(x)
        if nx > 0:
            x *= region_radius * rng.random() ** (1.0 / d) / nx
        diff = eval_grad(obj, x + eps * u) - eval_grad(obj, x)
        best = max(best, float(np.linalg.norm(diff)) / eps)
    return best


def aggregate_L(per_agent_L, sizes) -> float:
    """Dataset-size weighted average of the local constants.

    This is the smoothness constant the sample-average objective inherits
    from its parts; it reduces to the plain mean for equal sizes.
    """
    L = np.asarray(per_agent_L, dtype=float)
    s = np.asarray(sizes, dtype=float)
    if L.size == 0 or L.shape != s.shape:
        raise ValueError("per_agent_L and sizes must be nonempty, same length")
    return float((s * L).sum() / s.sum())


@dataclass(frozen=True)
class SmoothnessReport:
    per_agent_L: tuple
    per_agent_mu: tuple
    aggregate_L: float
    method: str
    sizes: tuple
    trials: int = 0
    seed: int = 0

    def __post_init__(self):
        if any(L <= 0 for L in self.per_agent_L):
            raise ValueError("every L_i must be positive")
        expect = aggregate_L(self.per_agent_L, self.sizes)
        if abs(self.aggregate_L - expect) > 1e-12 * max(1.0, abs(expect)):
            raise ValueError("aggregate_L is not the size-weighted average")


def report_exact(inst: ProblemInstance) -> SmoothnessReport:
    pairs = [exact_smoothness(o) for o in inst.locals]
    Ls = tuple(p[1] for p in pairs)
    return SmoothnessReport(Ls, tuple(p[0] for p in pairs),
                            aggregate_L(Ls, inst.sizes), "exact_eig",
                            inst.sizes)


def report_grad_diff(inst: ProblemInstance, region_radius, trials, eps,
                     seed=0) -> SmoothnessReport:
    Ls, mus = [], []
    for i, obj in enumerate(inst.locals):
        Ls.append(estimate_smoothness_grad_diff(
            obj, region_radius, trials, eps, seed=seed + i))
        mus.append(inst.mus[i])
    return SmoothnessReport(tuple(Ls), tuple(mus),
                            aggregate_L(Ls, inst.sizes), "grad_diff",
                            inst.sizes, trials=trials, seed=seed)


def write_report_csv(report: SmoothnessReport, sink) -> None:
    writer = csv.writer(sink)
    writer.writerow(["agent_id", "mu", "L", "method", "seed"])
    for i, (mu, L) in enumerate(zip(report.per_agent_mu, report.per_agent_L)):
        writer.writerow([i, f"{mu:.17g}", f"{L:.17g}", report.method,
                         report.seed])
