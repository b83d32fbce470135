"""Decentralized gradient methods with heterogeneous local step sizes and
exact worst-case convergence certification via semidefinite programming."""

__version__ = "0.1.0"
