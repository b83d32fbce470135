from .basis import AST, STAR, GramBasis, PepIndexSet
from .builder import (PepProblem, assemble_sdp, build_iterates,
                      centralized_counterpart, interpolation_matrix,
                      write_constraint_metadata)

__all__ = [
    "AST",
    "STAR",
    "GramBasis",
    "PepIndexSet",
    "PepProblem",
    "assemble_sdp",
    "build_iterates",
    "centralized_counterpart",
    "interpolation_matrix",
    "write_constraint_metadata",
]
