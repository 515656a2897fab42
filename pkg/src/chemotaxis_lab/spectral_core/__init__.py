"""Grids, fields, Littlewood-Paley blocks and function-space norms."""

from chemotaxis_lab.spectral_core.cutoffs import CutoffProfile, build_cutoffs, smoothstep
from chemotaxis_lab.spectral_core.grid import (
    Field, GridSpec, hermitian_defect, load_field, save_field)
from chemotaxis_lab.spectral_core.littlewood_paley import (
    DyadicDecomposition, decompose, is_resolvable, partition_residual, project_block,
    resolvable_range)
from chemotaxis_lab.spectral_core.multipliers import (
    apply_multiplier, divergence, gradient, heat_propagate, laplacian, partial)
from chemotaxis_lab.spectral_core.norms import (
    Ball, BesovParams, SubBox, ball_norm_refined, besov_norm, block_lp_norms,
    chemin_lerner_norm, evaluate_trig, lebesgue_norm)

__all__ = [
    "Ball", "BesovParams", "CutoffProfile", "DyadicDecomposition", "Field", "GridSpec",
    "SubBox", "apply_multiplier", "ball_norm_refined", "besov_norm", "block_lp_norms",
    "build_cutoffs", "chemin_lerner_norm", "decompose", "divergence", "evaluate_trig",
    "gradient", "heat_propagate", "hermitian_defect", "is_resolvable", "laplacian",
    "lebesgue_norm", "load_field", "partial", "partition_residual", "project_block",
    "resolvable_range", "save_field", "smoothstep",
]
