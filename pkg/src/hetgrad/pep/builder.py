"""Assembly of the exact worst-case SDP for the switched-step server method.

Given per-agent curvature classes (mu_i, L_i), a step-size schedule with an
optional switch iteration, and radii bounding the start and the local
optima, the builder emits a StandardSdp whose optimal value is the exact
worst case of the chosen error metric over all instances where each local
function is mu_i-strongly convex and L_i-smooth. Setting the switch at
iteration 0 yields the uniform-step (centralized) counterpart, and N = 1
reduces to the classical gradient-descent worst-case program.

The rank condition that would pin G to realizable dimension d is dropped:
the relaxation is exact whenever d is at least the Gram dimension, so
values are worst cases over all sufficiently large dimensions.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace

import numpy as np

from ..sdp.model import LinearConstraint, StandardSdp
from ..smoothness import aggregate_L
from .basis import AST, STAR, GramBasis, PepIndexSet

__all__ = [
    "PepProblem",
    "interpolation_matrix",
    "build_iterates",
    "assemble_sdp",
    "centralized_counterpart",
    "write_constraint_metadata",
]

OBJECTIVES = ("function_gap", "mean_sq_distance")


def _outer_sym(u, v):
    M = np.outer(u, v)
    return 0.5 * (M + M.T)


@dataclass(frozen=True)
class PepProblem:
    """One worst-case analysis instance.

    switch_step s means steps 0..s-1 use the per-agent sizes 1/L_i and steps
    s..K-1 the uniform 1/L (size-weighted aggregate); None never switches.
    r0 bounds ||x_i^0 - x^ast||, r_star bounds ||x_i^star - x^ast||.
    """

    mus: tuple
    ells: tuple
    n_iters: int
    switch_step: int | None = None
    sizes: tuple | None = None
    r0: float = 1.0
    r_star: float = 1.0
    objective: str = "mean_sq_distance"

    def __post_init__(self):
        mus = tuple(float(m) for m in self.mus)
        ells = tuple(float(l) for l in self.ells)
        if len(mus) != len(ells) or not mus:
            raise ValueError("mus and ells must be nonempty and aligned")
        for i, (mu, L) in enumerate(zip(mus, ells)):
            if not (0 < mu <= L):
                raise ValueError(f"agent {i}: need 0 < mu <= L")
        sizes = self.sizes if self.sizes is not None else (1,) * len(mus)
        sizes = tuple(int(s) for s in sizes)
        if len(sizes) != len(mus) or any(s < 1 for s in sizes):
            raise ValueError("sizes must align with agents and be >= 1")
        if self.n_iters < 1:
            raise ValueError("n_iters must be >= 1")
        if self.switch_step is not None and not (
                0 <= self.switch_step <= self.n_iters):
            raise ValueError("switch_step must lie in [0, n_iters] or be None")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        if not (self.r0 > 0 and self.r_star >= 0):
            raise ValueError("need r0 > 0 and r_star >= 0")
        object.__setattr__(self, "mus", mus)
        object.__setattr__(self, "ells", ells)
        object.__setattr__(self, "sizes", sizes)

    @property
    def n_agents(self) -> int:
        return len(self.mus)

    @property
    def index_set(self) -> PepIndexSet:
        return PepIndexSet(self.n_iters, self.n_agents)

    @property
    def aggregate_smoothness(self) -> float:
        return aggregate_L(self.ells, self.sizes)

    def step_schedule(self) -> np.ndarray:
        """(K, N) array of per-iteration, per-agent step sizes."""
        het = np.array([1.0 / L for L in self.ells])
        uni = np.full(self.n_agents, 1.0 / self.aggregate_smoothness)
        rows = []
        for t in range(self.n_iters):
            switched = self.switch_step is not None and t >= self.switch_step
            rows.append(uni if switched else het)
        return np.array(rows)


def centralized_counterpart(problem: PepProblem) -> PepProblem:
    """Same classes and radii, uniform step 1/L from the very first step."""
    return replace(problem, switch_step=0)


def build_iterates(problem: PepProblem) -> list:
    """Per-agent lists of iterate expressions x_i^k over the Gram basis.

    x_i^k = x_i^0 - sum_{t<k} (1/N) sum_j alpha_j^{(t)} g_j^t; the agents'
    expressions differ only through their own x_i^0 column, which the
    equal-start constraints identify.
    """
    basis = GramBasis(problem.index_set)
    N, K = problem.n_agents, problem.n_iters
    schedule = problem.step_schedule()
    updates = np.zeros((K, problem.index_set.gram_dim))
    for t in range(K):
        for j in range(N):
            updates[t, basis.g_col(j, t)] = schedule[t, j] / N
    iterates = []
    for i in range(N):
        rows = [basis.unit(basis.x0_col(i))]
        for k in range(1, K + 1):
            rows.append(rows[k - 1] - updates[k - 1])
        iterates.append(rows)
    return iterates


def interpolation_matrix(basis: GramBasis, iterates, i, p, q, mu, L):
    """Symmetric matrix A with <G, A> <= F (f_i^p - f_i^q) enforcing that
    agent i's triples at points p and q admit a mu-strongly-convex, L-smooth
    interpolant.

    For mu < L the quadratic part is 1/(2(1-mu/L)) [ (1/L)||dg||^2
    + mu ||dx||^2 - (2mu/L) <dg, dx> ] around the supporting-plane term
    <g_q, dx>. The degenerate class mu = L (a single quadratic family) uses
    the limit form (1/(4L))||dg||^2 + (L/4)||dx||^2, whose (p,q)/(q,p) pair
    forces dg = L dx with both inequalities tight exactly on quadratic data.
    """
    if p == q:
        raise ValueError("interpolation needs two distinct points")
    if not (0 < mu <= L):
        raise ValueError("need 0 < mu <= L")
    xp = basis.x_point(i, p, iterates)
    xq = basis.x_point(i, q, iterates)
    gp = basis.g_vec(i, p)
    gq = basis.g_vec(i, q)
    dx = xp - xq
    dg = gp - gq
    A = _outer_sym(dx, gq)
    if mu == L:
        A += (1.0 / (4.0 * L)) * np.outer(dg, dg)
        A += (L / 4.0) * np.outer(dx, dx)
    else:
        coeff = 1.0 / (2.0 * (1.0 - mu / L))
        A += coeff * ((1.0 / L) * np.outer(dg, dg)
                      + mu * np.outer(dx, dx)
                      - (2.0 * mu / L) * _outer_sym(dg, dx))
    return A


def assemble_sdp(problem: PepProblem) -> StandardSdp:
    """The full worst-case program as a StandardSdp (rank condition dropped).

    Constraints, in deterministic order: all ordered interpolation pairs per
    agent over {0..K, star, ast}; stationarity of the shared optimum
    ||sum_i g_i^ast||^2 = 0; each local optimum's gradient g_i^star = 0;
    initial and local-optimum radius bounds; equal-start and equal-optimum
    identifications against agent 0.
    """
    idx = problem.index_set
    basis = GramBasis(idx)
    iterates = build_iterates(problem)
    N, K = problem.n_agents, problem.n_iters
    nG, nF = idx.gram_dim, idx.fval_dim
    no_f = np.zeros(nF)
    cons = []

    for i in range(N):
        for p in idx.points:
            for q in idx.points:
                if p == q:
                    continue
                A = interpolation_matrix(basis, iterates, i, p, q,
                                         problem.mus[i], problem.ells[i])
                a = -(basis.f_vec(i, p) - basis.f_vec(i, q))
                cons.append(LinearConstraint(
                    A, a, "<=", 0.0, f"interp[i={i},p={p},q={q}]"))

    u = sum(basis.g_vec(i, AST) for i in range(N))
    cons.append(LinearConstraint(np.outer(u, u), no_f, "=", 0.0,
                                 "stationarity"))
    for i in range(N):
        gs = basis.g_vec(i, STAR)
        cons.append(LinearConstraint(np.outer(gs, gs), no_f, "=", 0.0,
                                     f"local_opt[i={i}]"))
    for i in range(N):
        diff = basis.unit(basis.x0_col(i)) - basis.unit(basis.x_ast_col(i))
        cons.append(LinearConstraint(np.outer(diff, diff), no_f, "<=",
                                     problem.r0 ** 2, f"init_radius[i={i}]"))
    for i in range(N):
        diff = basis.unit(basis.x_star_col(i)) - basis.unit(basis.x_ast_col(i))
        cons.append(LinearConstraint(np.outer(diff, diff), no_f, "<=",
                                     problem.r_star ** 2,
                                     f"local_radius[i={i}]"))
    for i in range(N):
        diff = basis.unit(basis.x0_col(0)) - basis.unit(basis.x0_col(i))
        cons.append(LinearConstraint(np.outer(diff, diff), no_f, "=", 0.0,
                                     f"equal_start[i={i}]"))
    for i in range(N):
        diff = basis.unit(basis.x_ast_col(0)) - basis.unit(basis.x_ast_col(i))
        cons.append(LinearConstraint(np.outer(diff, diff), no_f, "=", 0.0,
                                     f"equal_opt[i={i}]"))

    if problem.objective == "function_gap":
        C = np.zeros((nG, nG))
        c = sum(basis.f_vec(i, K) - basis.f_vec(i, AST) for i in range(N))
    else:
        C = np.zeros((nG, nG))
        for i in range(N):
            diff = iterates[i][K] - basis.unit(basis.x_ast_col(i))
            C += np.outer(diff, diff) / N
        c = no_f
    return StandardSdp(C, c, cons)


_LABEL = re.compile(r"^(?P<kind>\w+)(?:\[(?P<body>[^\]]*)\])?$")


def write_constraint_metadata(sdp: StandardSdp, sink) -> None:
    """One JSON object per line: constraint id, kind, agent, pair, sense."""
    for idx, con in enumerate(sdp.constraints):
        match = _LABEL.match(con.label or "")
        fields = {}
        if match and match.group("body"):
            for item in match.group("body").split(","):
                k, v = item.split("=", 1)
                fields[k] = v
        row = {
            "id": idx,
            "kind": match.group("kind") if match else con.label,
            "agent": int(fields["i"]) if "i" in fields else None,
            "pair": [fields["p"], fields["q"]] if "p" in fields else None,
            "sense": con.sense,
            "rhs": con.d,
        }
        sink.write(json.dumps(row) + "\n")
