"""Seeded random band-limited fields and batched block-norm tables."""

from __future__ import annotations

import math

import numpy as np

from chemotaxis_lab.spectral_core.cutoffs import CutoffProfile
from chemotaxis_lab.spectral_core.grid import Field, GridSpec, inverse
from chemotaxis_lab.spectral_core.norms import aggregate_lr, lp_of_samples, time_lp


def _gaussian_spectrum(grid: GridSpec, rng: np.random.Generator, kind: str) -> np.ndarray:
    lead = () if kind == "scalar" else (grid.d,)
    shape = lead + grid.spectral_shape
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _realize(grid: GridSpec, spec: np.ndarray, kind: str) -> Field:
    # round trip through physical space enforces Hermitian symmetry
    phys = inverse(spec, grid)
    scale = math.sqrt(float(np.mean(phys**2))) or 1.0
    return Field(grid, physical=phys / scale, kind=kind)


def random_shell_field(grid: GridSpec, rng: np.random.Generator, shells, cutoffs: CutoffProfile,
                       kind: str = "scalar", weight_spread: float = 2.0) -> Field:
    """Gaussian field filtered by ``sum_j w_j phi_j`` with log-normal weights.

    With one shell the spectrum lies in the annulus of that shell.
    """
    rho = grid.wavenumber_abs()
    sym = np.zeros(grid.spectral_shape)
    for j in shells:
        sym = sym + math.exp(weight_spread * rng.standard_normal()) * cutoffs.block_symbol(rho, j)
    return _realize(grid, _gaussian_spectrum(grid, rng, kind) * sym, kind)


def random_ball_field(grid: GridSpec, rng: np.random.Generator, radius: float,
                      kind: str = "scalar") -> Field:
    """Gaussian field with spectrum in ``|xi| <= radius`` (zero mode included)."""
    mask = grid.wavenumber_abs() <= radius
    return _realize(grid, _gaussian_spectrum(grid, rng, kind) * mask, kind)


def block_lp_table(specs: np.ndarray, grid: GridSpec, ps, cutoffs: CutoffProfile, shells,
                   vector: bool = False, chunk: int = 64, skip_tol: float = 1e-28) -> dict:
    """Block L^p norms of a stack of spectra.

    Parameters
    ----------
    specs : ndarray
        Shape ``(n,) + spectral_shape`` or ``(n, d) + spectral_shape``.
    vector : bool
        Use the pointwise Euclidean length over the component axis.

    Returns
    -------
    dict
        ``p -> array (len(shells), n)``.
    """
    n = specs.shape[0]
    out = {p: np.zeros((len(shells), n)) for p in ps}
    rho = grid.wavenumber_abs()
    w = grid.parseval_weights()
    power = w * (specs.real**2 + specs.imag**2)
    power = power.reshape((-1,) + grid.spectral_shape).sum(axis=0)
    total = float(power.sum())
    for a, j in enumerate(shells):
        sym = cutoffs.block_symbol(rho, j)
        # blocks without energy stay zero
        if float(np.sum(power * sym**2)) <= skip_tol * total:
            continue
        for s in range(0, n, chunk):
            phys = inverse(specs[s:s + chunk] * sym, grid)
            mag = np.sqrt(np.sum(phys**2, axis=1)) if vector else np.abs(phys)
            for b in range(mag.shape[0]):
                for p in ps:
                    out[p][a, s + b] = lp_of_samples(mag[b], p, grid.cell_volume)
    return out


def besov_from_blocks(block_norms, shells, s: float, r: float) -> float:
    return aggregate_lr([2.0 ** (s * j) * v for j, v in zip(shells, block_norms)], r)


def chemin_lerner_from_table(table: np.ndarray, shells, times, rho: float, s: float,
                             r: float) -> float:
    """Chemin-Lerner norm from a (shell, time) table of block norms."""
    times = np.asarray(times, dtype=float)
    per = [2.0 ** (s * j) * time_lp(table[a], times, rho) for a, j in enumerate(shells)]
    return aggregate_lr(per, r)


def sup_in_time(specs: np.ndarray, grid: GridSpec, rho: float, times, vector: bool = False) -> float:
    """L^rho_T(L^inf) of a stack of spectra."""
    phys = inverse(specs, grid)
    mag = np.sqrt(np.sum(phys**2, axis=1)) if vector else np.abs(phys)
    sups = mag.reshape(mag.shape[0], -1).max(axis=1)
    return time_lp(sups, np.asarray(times, dtype=float), rho)

