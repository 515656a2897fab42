"""Atoms, the oscillatory atom sum and the initial-data family."""

from chemotaxis_lab.construction.atoms import (
    AtomSpec, build_atom, require_beta_resolved, theta_profile)
from chemotaxis_lab.construction.split import (
    ProductSplit, h_ball_norm, h_hat, h_values, k1_closed_form, pair_support_leakage,
    product_split)
from chemotaxis_lab.construction.design import design_grid
from chemotaxis_lab.construction.family import (
    Annulus, ConstructionParams, DataPair, atom_centers, build_f, build_initial_data,
    check_constraints, constraint_problems, largest_beta, separation_table, support_report)

__all__ = [
    "Annulus", "AtomSpec", "ConstructionParams", "DataPair", "atom_centers", "build_atom",
    "build_f", "build_initial_data", "check_constraints", "constraint_problems",
    "largest_beta", "require_beta_resolved", "separation_table", "support_report",
    "theta_profile", "ProductSplit", "h_ball_norm", "h_hat", "h_values", "k1_closed_form",
    "pair_support_leakage", "product_split", "design_grid",
]
