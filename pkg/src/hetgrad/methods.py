"""Gradient method runners: centralized, switched-heterogeneous, DGD, tracking.

All four runners consume a ProblemInstance and a MethodConfig and emit a
full per-iteration trace. The switched method starts every agent at step
size 1/L_i and permanently resets all steps to 1/L (the size-weighted
aggregate) the first time the aggregated scaled gradient from the previous
round falls to the threshold or below. Runs are deterministic given
(config, seed); independent runs share no mutable state.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .objectives import ProblemInstance, eval_grad, eval_loss, global_objective
from .smoothness import aggregate_L

__all__ = [
    "MethodConfig",
    "AlgorithmTrace",
    "DivergenceError",
    "run_gd",
    "run_algorithm1",
    "run_dgd",
    "run_gradient_tracking",
    "run_method",
    "uniform_mixing",
]

METHODS = ("gd", "algorithm1", "dgd", "gradient_tracking")
_LOSS_CAP = 1e12


class DivergenceError(RuntimeError):
    """Loss exceeded the divergence guard; message carries the iteration."""


@dataclass(frozen=True)
class MethodConfig:
    """Shared knobs for the four runners.

    step_size overrides the uniform step (gd, gradient_tracking); step_sizes
    overrides the per-agent steps (algorithm1 pre-switch, dgd). epsilon is
    the switching threshold; None selects the relative default and 0
    disables switching. mixing is the N-by-N matrix W for dgd and
    gradient_tracking. participation < 1 includes each agent in a round
    independently with that probability. x0 is the common start (zeros when
    omitted).
    """

    method: str
    n_steps: int
    step_size: float | None = None
    step_sizes: tuple | None = None
    epsilon: float | None = None
    mixing: np.ndarray | None = None
    participation: float = 1.0
    seed: int = 0
    x0: np.ndarray | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if not (0 < self.participation <= 1):
            raise ValueError("participation must lie in (0, 1]")
        if self.epsilon is not None and self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.step_sizes is not None:
            object.__setattr__(self, "step_sizes",
                               tuple(float(a) for a in self.step_sizes))
        if self.mixing is not None:
            object.__setattr__(self, "mixing",
                               np.asarray(self.mixing, dtype=float))
        if self.x0 is not None:
            object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))


@dataclass
class AlgorithmTrace:
    """Per-iteration record of one run; all arrays have length n_steps + 1."""

    iterates: np.ndarray          # (K+1, d) or (K+1, N, d) for dgd/tracking
    losses: np.ndarray
    grad_norms: np.ndarray
    switch_iteration: int | None
    participants: list
    method: str

    def __post_init__(self):
        k = len(self.losses)
        if not (len(self.grad_norms) == len(self.iterates)
                == len(self.participants) == k):
            raise ValueError("trace arrays must share one length")
        if not np.all(np.isfinite(self.losses)):
            raise ValueError("trace contains non-finite losses")

    @property
    def n_steps(self) -> int:
        return len(self.losses) - 1

    def final_iterate(self) -> np.ndarray:
        return self.iterates[-1]

    def iterations_to_gap(self, f_star, gap) -> int | None:
        """First iteration k with f(x^k) - f_star <= gap, or None."""
        hit = np.nonzero(self.losses - f_star <= gap)[0]
        return int(hit[0]) if hit.size else None

    def write_csv(self, sink) -> None:
        writer = csv.writer(sink)
        writer.writerow(["iteration", "loss", "grad_norm", "switched",
                         "participants"])
        for k in range(len(self.losses)):
            switched = (self.switch_iteration is not None
                        and k >= self.switch_iteration)
            parts = " ".join(str(i) for i in self.participants[k])
            writer.writerow([k, f"{self.losses[k]:.17g}",
                             f"{self.grad_norms[k]:.17g}", int(switched),
                             parts])


def uniform_mixing(n: int) -> np.ndarray:
    return np.full((n, n), 1.0 / n)


def _check_mixing(W, n, doubly=False):
    if W is None:
        raise ValueError("this method requires a mixing matrix W")
    if W.shape != (n, n):
        raise ValueError(f"W has shape {W.shape}, expected ({n}, {n})")
    if np.any(W < 0):
        raise ValueError("W must have nonnegative entries")
    if np.abs(W.sum(axis=1) - 1.0).max() > 1e-10:
        raise ValueError("W rows must sum to 1 within 1e-10")
    if doubly and np.abs(W.sum(axis=0) - 1.0).max() > 1e-10:
        raise ValueError("W columns must sum to 1 within 1e-10")


def _guard(loss, k, method):
    if not np.isfinite(loss) or loss > _LOSS_CAP:
        raise DivergenceError(
            f"{method} diverged at iteration {k}: loss {loss:.6e}")


def _start(inst, config):
    if config.x0 is None:
        return np.zeros(inst.dim)
    x0 = np.asarray(config.x0, dtype=float)
    if x0.shape != (inst.dim,):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({inst.dim},)")
    return x0.copy()


def _participation_draw(rng, n, p):
    if p >= 1.0:
        return tuple(range(n))
    mask = rng.random(n) < p
    return tuple(np.nonzero(mask)[0].tolist())


def run_gd(inst: ProblemInstance, config: MethodConfig) -> AlgorithmTrace:
    """Centralized gradient descent on the weighted global objective."""
    f = global_objective(inst)
    alpha = config.step_size
    if alpha is None:
        alpha = 1.0 / aggregate_L(inst.ells, inst.sizes)
    if not alpha > 0:
        raise ValueError("gd needs a positive step size")
    K = config.n_steps
    x = _start(inst, config)
    xs = np.zeros((K + 1, inst.dim))
    losses = np.zeros(K + 1)
    gnorms = np.zeros(K + 1)
    everyone = tuple(range(inst.n_agents))
    participants = [everyone]
    g = eval_grad(f, x)
    xs[0], losses[0], gnorms[0] = x, eval_loss(f, x), np.linalg.norm(g)
    _guard(losses[0], 0, "gd")
    for k in range(1, K + 1):
        x = x - alpha * g
        g = eval_grad(f, x)
        xs[k], losses[k], gnorms[k] = x, eval_loss(f, x), np.linalg.norm(g)
        participants.append(everyone)
        _guard(losses[k], k, "gd")
    return AlgorithmTrace(xs, losses, gnorms, None, participants, "gd")


def run_algorithm1(inst: ProblemInstance, config: MethodConfig) -> AlgorithmTrace:
    """Server-assisted method with per-agent steps 1/L_i and a one-time switch.

    Round k sends x^{k-1} to the participating agents, collects their local
    gradients, and updates x^k = x^{k-1} - (1/N) sum_i alpha_i g_i (absent
    agents contribute zero; the divisor stays N). The switch test runs before
    the round's gradients exist, so it uses each agent's most recent stored
    gradient; it is skipped until at least one round has completed. Once
    ||sum_i alpha_i g_i|| <= epsilon, all steps become 1/L permanently.
    epsilon = 0 disables switching; epsilon = None uses
    1e-3 * ||sum_i alpha_i g_i^0||.
    """
    n, K = inst.n_agents, config.n_steps
    f = global_objective(inst)
    het = (np.array(config.step_sizes, dtype=float)
           if config.step_sizes is not None
           else np.array([1.0 / L for L in inst.ells]))
    if het.shape != (n,):
        raise ValueError(f"step_sizes must have length {n}")
    uni = 1.0 / aggregate_L(inst.ells, inst.sizes)
    alphas = het.copy()
    rng = np.random.default_rng(config.seed)
    eps = config.epsilon

    x = _start(inst, config)
    xs = np.zeros((K + 1, inst.dim))
    losses = np.zeros(K + 1)
    gnorms = np.zeros(K + 1)
    participants = [tuple(range(n))]
    xs[0], losses[0] = x, eval_loss(f, x)
    gnorms[0] = np.linalg.norm(eval_grad(f, x))
    _guard(losses[0], 0, "algorithm1")

    last_grad = [None] * n
    switch_iteration = None
    for k in range(1, K + 1):
        if switch_iteration is None and any(g is not None for g in last_grad):
            agg = sum(alphas[i] * g for i, g in enumerate(last_grad)
                      if g is not None)
            if eps is not None and eps > 0 and np.linalg.norm(agg) <= eps:
                alphas = np.full(n, uni)
                switch_iteration = k
        active = _participation_draw(rng, n, config.participation)
        update = np.zeros(inst.dim)
        for i in active:
            g_i = eval_grad(inst.locals[i], x)
            last_grad[i] = g_i
            update += alphas[i] * g_i
        if eps is None:
            # relative default from the first round's aggregate
            eps = 1e-3 * np.linalg.norm(
                sum(alphas[i] * last_grad[i] for i in active)
                if active else np.zeros(inst.dim))
        x = x - update / n
        xs[k], losses[k] = x, eval_loss(f, x)
        gnorms[k] = np.linalg.norm(eval_grad(f, x))
        participants.append(active)
        _guard(losses[k], k, "algorithm1")
    return AlgorithmTrace(xs, losses, gnorms, switch_iteration, participants,
                          "algorithm1")


def run_dgd(inst: ProblemInstance, config: MethodConfig) -> AlgorithmTrace:
    """Server-free DGD: x_i <- sum_j w_ij (x_j - alpha_j g_j), synchronous.

    Per-agent steps are allowed (defaulting to 1/L_i); the trace stores every
    agent's iterate, and the recorded loss/gradient are those of the agent
    average.
    """
    n, K = inst.n_agents, config.n_steps
    f = global_objective(inst)
    W = config.mixing if config.mixing is not None else uniform_mixing(n)
    _check_mixing(W, n)
    if config.step_sizes is not None:
        alphas = np.array(config.step_sizes, dtype=float)
    elif config.step_size is not None:
        alphas = np.full(n, config.step_size)
    else:
        alphas = np.array([1.0 / L for L in inst.ells])
    if alphas.shape != (n,):
        raise ValueError(f"step_sizes must have length {n}")

    x = np.tile(_start(inst, config), (n, 1))
    xs = np.zeros((K + 1, n, inst.dim))
    losses = np.zeros(K + 1)
    gnorms = np.zeros(K + 1)
    everyone = tuple(range(n))
    participants = [everyone]
    xs[0] = x
    xbar = x.mean(axis=0)
    losses[0] = eval_loss(f, xbar)
    gnorms[0] = np.linalg.norm(eval_grad(f, xbar))
    _guard(losses[0], 0, "dgd")
    for k in range(1, K + 1):
        stepped = np.stack([
            x[j] - alphas[j] * eval_grad(inst.locals[j], x[j])
            for j in range(n)])
        x = W @ stepped
        xs[k] = x
        xbar = x.mean(axis=0)
        losses[k] = eval_loss(f, xbar)
        gnorms[k] = np.linalg.norm(eval_grad(f, xbar))
        participants.append(everyone)
        _guard(losses[k], k, "dgd")
    return AlgorithmTrace(xs, losses, gnorms, None, participants, "dgd")


def run_gradient_tracking(inst: ProblemInstance,
                          config: MethodConfig) -> AlgorithmTrace:
    """Gradient tracking with doubly stochastic W and a uniform step.

    x_i <- sum_j w_ij x_j - alpha y_i;  y_i <- sum_j w_ij y_j + g_i^+ - g_i,
    started from y^0 = g^0, so the agent average of y tracks the average
    gradient at every iteration.
    """
    n, K = inst.n_agents, config.n_steps
    f = global_objective(inst)
    W = config.mixing if config.mixing is not None else uniform_mixing(n)
    _check_mixing(W, n, doubly=True)
    alpha = config.step_size
    if alpha is None:
        alpha = 1.0 / aggregate_L(inst.ells, inst.sizes)

    x = np.tile(_start(inst, config), (n, 1))
    g = np.stack([eval_grad(inst.locals[j], x[j]) for j in range(n)])
    y = g.copy()
    xs = np.zeros((K + 1, n, inst.dim))
    losses = np.zeros(K + 1)
    gnorms = np.zeros(K + 1)
    everyone = tuple(range(n))
    participants = [everyone]
    xs[0] = x
    xbar = x.mean(axis=0)
    losses[0] = eval_loss(f, xbar)
    gnorms[0] = np.linalg.norm(eval_grad(f, xbar))
    _guard(losses[0], 0, "gradient_tracking")
    for k in range(1, K + 1):
        x = W @ x - alpha * y
        g_new = np.stack([eval_grad(inst.locals[j], x[j]) for j in range(n)])
        y = W @ y + g_new - g
        g = g_new
        xs[k] = x
        xbar = x.mean(axis=0)
        losses[k] = eval_loss(f, xbar)
        gnorms[k] = np.linalg.norm(eval_grad(f, xbar))
        participants.append(everyone)
        _guard(losses[k], k, "gradient_tracking")
    return AlgorithmTrace(xs, losses, gnorms, None, participants,
                          "gradient_tracking")


_RUNNERS = {
    "gd": run_gd,
    "algorithm1": run_algorithm1,
    "dgd": run_dgd,
    "gradient_tracking": run_gradient_tracking,
}


def run_method(inst: ProblemInstance, config: MethodConfig) -> AlgorithmTrace:
    return _RUNNERS[config.method](inst, config)
