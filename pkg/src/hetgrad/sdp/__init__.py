from .certify import CertificationReport, certify
from .model import LinearConstraint, SdpSolution, StandardSdp
from .solver import solve

__all__ = [
    "CertificationReport",
    "LinearConstraint",
    "SdpSolution",
    "StandardSdp",
    "certify",
    "solve",
]
