"""Gram-space bookkeeping for the worst-case (performance estimation) SDP.

The unknown iterates, gradients, and optima of all N agents over a K-step
horizon are represented by columns of one matrix P; the SDP variable is the
Gram matrix G = P'P together with the row F of function values. This module
owns the column layout:

    P = [x^0 | g^0 ... g^K | g^star | g^ast | x^star | x^ast],

each block holding N agent columns, so G has (K+6)N rows, and

    F = [f^0 ... f^K | f^star | f^ast]

has (K+3)N entries. "star" marks each agent's own minimizer, "ast" the
shared global optimum. Iterates x^k for k >= 1 are affine combinations of
the x^0 and gradient columns; they are handled as plain coefficient vectors
over the G basis (LinearExpr).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["STAR", "AST", "PepIndexSet", "GramBasis"]

STAR = "star"
AST = "ast"


@dataclass(frozen=True)
class PepIndexSet:
    """Agents [N], iteration indices {0..K}, and the two optimum markers."""

    n_iters: int
    n_agents: int

    def __post_init__(self):
        if self.n_iters < 1:
            raise ValueError("need at least one iteration")
        if self.n_agents < 1:
            raise ValueError("need at least one agent")

    @property
    def points(self) -> tuple:
        return tuple(range(self.n_iters + 1)) + (STAR, AST)

    @property
    def gram_dim(self) -> int:
        return (self.n_iters + 6) * self.n_agents

    @property
    def fval_dim(self) -> int:
        return (self.n_iters + 3) * self.n_agents


class GramBasis:
    """Column indices of the selection vectors for one PepIndexSet."""

    def __init__(self, index_set: PepIndexSet):
        self.index_set = index_set
        self.K = index_set.n_iters
        self.N = index_set.n_agents

    def _check_agent(self, i):
        if not 0 <= i < self.N:
            raise ValueError(f"agent {i} out of range [0, {self.N})")

    # --- column positions in P (and rows/cols of G) ---

    def x0_col(self, i) -> int:
        self._check_agent(i)
        return i

    def g_col(self, i, p) -> int:
        self._check_agent(i)
        K, N = self.K, self.N
        if p == STAR:
            return (K + 2) * N + i
        if p == AST:
            return (K + 3) * N + i
        if not 0 <= p <= K:
            raise ValueError(f"iteration index {p} out of range")
        return (p + 1) * N + i

    def x_star_col(self, i) -> int:
        self._check_agent(i)
        return (self.K + 4) * self.N + i

    def x_ast_col(self, i) -> int:
        self._check_agent(i)
        return (self.K + 5) * self.N + i

    # --- positions in F ---

    def f_idx(self, i, p) -> int:
        self._check_agent(i)
        K, N = self.K, self.N
        if p == STAR:
            return (K + 1) * N + i
        if p == AST:
            return (K + 2) * N + i
        if not 0 <= p <= K:
            raise ValueError(f"iteration index {p} out of range")
        return p * N + i

    # --- selection vectors ---

    def unit(self, col) -> np.ndarray:
        e = np.zeros(self.index_set.gram_dim)
        e[col] = 1.0
        return e

    def g_vec(self, i, p) -> np.ndarray:
        return self.unit(self.g_col(i, p))

    def f_vec(self, i, p) -> np.ndarray:
        e = np.zeros(self.index_set.fval_dim)
        e[self.f_idx(i, p)] = 1.0
        return e

    def x_point(self, i, p, iterates) -> np.ndarray:
        """x-expression for point p: an iterate, or an optimum column."""
        if p == STAR:
            return self.unit(self.x_star_col(i))
        if p == AST:
            return self.unit(self.x_ast_col(i))
        return iterates[i][p]
