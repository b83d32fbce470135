"""Independent a-posteriori checks on a solver result.

Residuals, the smallest eigenvalue of G, and the relative duality gap are
recomputed from scratch (symmetric eigensolve, direct constraint
evaluation) rather than trusted from the solver's own bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SdpSolution, StandardSdp

__all__ = ["CertificationReport", "certify"]


@dataclass(frozen=True)
class CertificationReport:
    passed: bool
    max_violation: float
    worst_constraint: str
    min_eigenvalue: float
    duality_gap: float
    tol_feas: float
    tol_gap: float

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        detail = (f"violation={self.max_violation:.3e} "
                  f"(worst: {self.worst_constraint or 'none'}), "
                  f"min_eig={self.min_eigenvalue:.3e}, "
                  f"gap={self.duality_gap:.3e}")
        return f"{verdict}: {detail}"


def certify(sdp: StandardSdp, sol: SdpSolution, tol_feas=1e-6,
            tol_gap=1e-6) -> CertificationReport:
    """Re-derive feasibility and optimality evidence for an optimal solution.

    Checks, each at its stated tolerance: every constraint residual, the
    minimum eigenvalue of G (allowed down to -tol_feas), and the relative
    duality gap |D - P| / (1 + |P| + |D|).
    """
    if sol.status != "optimal":
        raise ValueError(f"can only certify optimal solutions, got "
                         f"status {sol.status!r}")
    viol, worst = sdp.max_violation(sol.G, sol.F)
    mineig = float(np.linalg.eigvalsh(0.5 * (sol.G + sol.G.T))[0]) \
        if sol.G.size else 0.0
    P = sdp.objective_value(sol.G, sol.F)
    gap = abs(sol.dual_value - P) / (1.0 + abs(P) + abs(sol.dual_value))
    passed = (viol <= tol_feas) and (mineig >= -tol_feas) and (gap <= tol_gap)
    return CertificationReport(passed, viol, worst if viol > tol_feas else "",
                               mineig, gap, tol_feas, tol_gap)
