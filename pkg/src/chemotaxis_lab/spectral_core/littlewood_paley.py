"""Dyadic block projections and decompositions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Iterable

import numpy as np

from chemotaxis_lab.errors import ShellNotResolvable
from chemotaxis_lab.spectral_core.cutoffs import PHI_SUPPORT, CutoffProfile
from chemotaxis_lab.spectral_core.grid import Field, GridSpec


def shell_outer_radius(j: int) -> float:
    return PHI_SUPPORT[1] * 2.0**j


def is_resolvable(grid: GridSpec, j: int) -> bool:
    """True when the annulus of shell ``j`` stays strictly below Nyquist."""
    return shell_outer_radius(j) < grid.nyquist


def require_resolvable(grid: GridSpec, j: int) -> None:
    if not is_resolvable(grid, j):
        raise ShellNotResolvable(
            f"shell {j} reaches |xi| = {shell_outer_radius(j):.6g}, "
            f"Nyquist is {grid.nyquist:.6g}")


def resolvable_range(grid: GridSpec) -> tuple[int, int]:
    """Shells that meet the nonzero lattice and stay below Nyquist.

    Returns
    -------
    (j_min, j_max) : tuple of int
        Inclusive range.  Shells below ``j_min`` contain no lattice point.
    """
    rho_min = min(grid.fundamental)
    j_min = math.floor(math.log2(rho_min / PHI_SUPPORT[1])) + 1
    j_max = math.ceil(math.log2(grid.nyquist / PHI_SUPPORT[1])) - 1
    while not is_resolvable(grid, j_max):
        j_max -= 1
    return j_min, j_max


def block_symbol(grid: GridSpec, j: int, cutoffs: CutoffProfile) -> np.ndarray:
    return cutoffs.block_symbol(grid.wavenumber_abs(), j)


def project_block(f: Field, j: int, cutoffs: CutoffProfile) -> Field:
    """Apply phi(2^{-j} D) to ``f``.

    Raises
    ------
    ShellNotResolvable
        If the outer radius of the shell is not below Nyquist.
    """
    require_resolvable(f.grid, j)
    sym = block_symbol(f.grid, j, cutoffs)
    return Field(f.grid, spectral=f.spectral * sym, kind=f.kind)


def _check_range(grid: GridSpec, j_range) -> tuple[int, int]:
    if j_range is None:
        return resolvable_range(grid)
    j_lo, j_hi = int(j_range[0]), int(j_range[1])
    if j_lo > j_hi:
        raise ValueError(f"empty shell range {j_range}")
    require_resolvable(grid, j_hi)
    return j_lo, j_hi


@dataclass
class DyadicDecomposition:
    """Blocks of a field over an inclusive shell range.

    Attributes
    ----------
    source : Field
        Decomposed field.
    blocks : dict
        Shell index to block field, in increasing order.
    truncation_residual : float
        Relative L2 mass of ``source`` not captured by the blocks.
    """

    source: Field
    blocks: dict[int, Field] = dc_field(default_factory=dict)
    truncation_residual: float = 0.0

    def reconstruct(self) -> Field:
        total = Field.zeros(self.source.grid, self.source.kind)
        for b in self.blocks.values():
            total = total + b
        return total

    def mass_fractions(self) -> dict[int, float]:
        """Relative L2 norm of each block against the source."""
        ref = self.source.l2_norm()
        if ref == 0.0:
            return {j: 0.0 for j in self.blocks}
        return {j: b.l2_norm() / ref for j, b in self.blocks.items()}


def decompose(f: Field, cutoffs: CutoffProfile, j_range=None) -> DyadicDecomposition:
    """Split ``f`` into dyadic blocks.

    Parameters
    ----------
    f : Field
        Field to decompose.
    cutoffs : CutoffProfile
        Radial profiles.
    j_range : (int, int), optional
        Inclusive shell range; defaults to :func:`resolvable_range`.
    """
    j_lo, j_hi = _check_range(f.grid, j_range)
    rho = f.grid.wavenumber_abs()
    total_sym = np.zeros(f.grid.spectral_shape)
    blocks = {}
    for j in range(j_lo, j_hi + 1):
        sym = cutoffs.block_symbol(rho, j)
        total_sym += sym
        blocks[j] = Field(f.grid, spectral=f.spectral * sym, kind=f.kind)
    ref = f.l2_norm()
    if ref == 0.0:
        resid = 0.0
    else:
        rest = Field(f.grid, spectral=f.spectral * (1.0 - total_sym), kind=f.kind)
        resid = rest.l2_norm() / ref
    return DyadicDecomposition(f, blocks, resid)


def partition_residual(grid: GridSpec, cutoffs: CutoffProfile, j_range=None) -> float:
    """Worst |sum_j phi(2^{-j}|xi|) - 1| over lattice points covered by the range.

    A lattice point counts as covered when its modulus lies in
    [4/3 * 2^{j_min}, 3/4 * 2^{j_max + 1}], where the partition telescopes to 1.
    """
    j_lo, j_hi = _check_range(grid, j_range)
    rho = grid.wavenumber_abs()
    total = np.zeros(grid.spectral_shape)
    for j in range(j_lo, j_hi + 1):
        total += cutoffs.block_symbol(rho, j)
    covered = (rho >= (4.0 / 3.0) * 2.0**j_lo) & (rho <= 0.75 * 2.0 ** (j_hi + 1))
    if not np.any(covered):
        return 0.0
    return float(np.max(np.abs(total[covered] - 1.0)))


def iter_blocks(f: Field, cutoffs: CutoffProfile, shells: Iterable[int]):
    """Yield ``(j, block)`` without holding every block in memory."""
    for j in shells:
        yield j, project_block(f, j, cutoffs)
