"""Canonical SDP containers shared by the builder, solver, and file I/O.

The standard form is a maximization over one PSD matrix block G and a free
vector F:

    maximize   <C, G> + c'F
    subject to <A_j, G> + a_j'F  (<= or =)  d_j      for each constraint j,
               G >= 0 (positive semidefinite), F unconstrained,

with <A, B> = trace(A B') the standard matrix inner product.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["LinearConstraint", "StandardSdp", "SdpSolution"]

SENSES = ("<=", "=")


@dataclass(frozen=True)
class LinearConstraint:
    """One affine constraint <A, G> + a'F (sense) d, with a debug label."""

    A: np.ndarray
    a: np.ndarray
    sense: str
    d: float
    label: str = ""

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        a = np.asarray(self.a, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got {A.shape}")
        scale = max(1.0, float(np.abs(A).max(initial=0.0)))
        if np.abs(A - A.T).max(initial=0.0) > 1e-9 * scale:
            raise ValueError(f"constraint {self.label!r}: A is not symmetric")
        if self.sense not in SENSES:
            raise ValueError(f"sense must be one of {SENSES}")
        object.__setattr__(self, "A", 0.5 * (A + A.T))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "d", float(self.d))

    def evaluate(self, G, F) -> float:
        return float(np.tensordot(self.A, G) + self.a @ F)

    def violation(self, G, F) -> float:
        v = self.evaluate(G, F) - self.d
        return abs(v) if self.sense == "=" else max(0.0, v)


@dataclass
class StandardSdp:
    """maximize <C,G> + c'F subject to the listed constraints and G PSD."""

    C: np.ndarray
    c: np.ndarray
    constraints: list = field(default_factory=list)

    def __post_init__(self):
        C = np.asarray(self.C, dtype=float)
        c = np.asarray(self.c, dtype=float)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise ValueError(f"C must be square, got {C.shape}")
        self.C = 0.5 * (C + C.T)
        self.c = c
        for con in self.constraints:
            if con.A.shape != self.C.shape:
                raise ValueError(
                    f"constraint {con.label!r}: A shape {con.A.shape} "
                    f"does not match C shape {self.C.shape}")
            if con.a.shape != self.c.shape:
                raise ValueError(
                    f"constraint {con.label!r}: a shape {con.a.shape} "
                    f"does not match c shape {self.c.shape}")

    @property
    def psd_dim(self) -> int:
        return self.C.shape[0]

    @property
    def free_dim(self) -> int:
        return self.c.shape[0]

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)

    def objective_value(self, G, F) -> float:
        return float(np.tensordot(self.C, G) + self.c @ F)

    def max_violation(self, G, F):
        """(worst violation, label of the violating constraint)."""
        worst, label = 0.0, ""
        for con in self.constraints:
            v = con.violation(G, F)
            if v > worst:
                worst, label = v, con.label
        return worst, label


@dataclass
class SdpSolution:
    """Solver output; the tolerances quoted refer to the solve() call."""

    status: str                    # optimal | infeasible | numerical_limit
    primal_value: float
    dual_value: float
    G: np.ndarray
    F: np.ndarray
    y: np.ndarray
    max_violation: float
    min_eigenvalue: float
    duality_gap: float
    iterations: int
    message: str = ""
    # per-iteration (primal, dual, primal_resid, dual_resid) for diagnostics
    history: list = field(default_factory=list)
