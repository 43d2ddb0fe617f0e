"""Discrete multi-marginal optimal transport with repulsive pairwise costs."""
from .cost import LogCost, RieszCost, TabulatedCost, Truncation, WireCost, cost_from_dict
from .dual import DualPotential, canonicalize, c_transform, extract_dual
from .errors import (BudgetExceededError, CertificateError, InfeasibleError, MOTError,
                     SolverError, ValidationError)
from .maps import cyclic_map_1d, recover_map_n2
from .measure import DiscreteMeasure
from .primal import Coupling, brute_force_oracle, solve_mot

__all__ = [
    "LogCost", "RieszCost", "TabulatedCost", "WireCost", "Truncation", "cost_from_dict",
    "DualPotential", "canonicalize", "c_transform", "extract_dual",
    "MOTError", "ValidationError", "InfeasibleError", "BudgetExceededError", "SolverError",
    "CertificateError", "cyclic_map_1d", "recover_map_n2", "DiscreteMeasure", "Coupling",
    "brute_force_oracle", "solve_mot",
]
