"""Finite-horizon Kelly gambling: types, risk-reward frontiers, side information."""

from .divergence import Dist, kl_divergence, renyi_divergence, shannon_entropy
from .types import EmpiricalType, JointEmpiricalType, ResourceCapError

__all__ = [
    "Dist",
    "EmpiricalType",
    "JointEmpiricalType",
    "ResourceCapError",
    "kl_divergence",
    "renyi_divergence",
    "shannon_entropy",
]
