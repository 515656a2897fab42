"""Fourier multipliers on the lattice of a periodic grid."""

from __future__ import annotations

from typing import Callable

import numpy as np

from chemotaxis_lab.errors import NegativeTime, NonHermitianSymbol
from chemotaxis_lab.spectral_core.grid import Field

Symbol = Callable[[tuple], np.ndarray]


def _hermitian_ok(symbol: Symbol, ks: tuple, values: np.ndarray, tol: float) -> bool:
    mirrored = np.asarray(symbol(tuple(-k for k in ks)))
    scale = max(float(np.max(np.abs(values))), 1.0)
    return float(np.max(np.abs(mirrored - np.conj(values)))) <= tol * scale


def apply_multiplier(f: Field, symbol: Symbol, check_hermitian: bool = True,
                     tol: float = 1e-12) -> Field:
    """Multiply the spectrum of ``f`` by ``symbol(xi)``.

    Parameters
    ----------
    f : Field
        Real scalar or vector field.
    symbol : callable
        Receives the tuple of broadcastable wavenumber arrays and returns an
        array broadcastable to the spectral layout.
    check_hermitian : bool
        Verify ``symbol(-xi) == conj(symbol(xi))`` so the output stays real.

    Raises
    ------
    NonHermitianSymbol
        When the check is enabled and fails.
    """
    ks = f.grid.wavenumbers()
    values = np.asarray(symbol(ks))
    if not np.all(np.isfinite(values)):
        raise ValueError("symbol is not finite on the lattice")
    if check_hermitian and not _hermitian_ok(symbol, ks, values, tol):
        raise NonHermitianSymbol("symbol(-xi) != conj(symbol(xi)); output would be complex")
    return Field(f.grid, spectral=f.spectral * values, kind=f.kind)


def heat_symbol(grid, t: float) -> np.ndarray:
    return np.exp(-t * grid.wavenumber_sq())


def heat_propagate(f: Field, t: float) -> Field:
    """Apply e^{t Delta}.

    Raises
    ------
    NegativeTime
        If ``t < 0``.
    """
    if t < 0:
        raise NegativeTime(f"heat flow needs t >= 0, got {t}")
    if t == 0:
        return f
    return Field(f.grid, spectral=f.spectral * heat_symbol(f.grid, t), kind=f.kind)


def gradient(f: Field) -> Field:
    """Gradient of a scalar field."""
    if f.kind != "scalar":
        raise ValueError("gradient needs a scalar field")
    ks = f.grid.wavenumbers()
    spec = np.stack([1j * k * f.spectral for k in ks])
    return Field(f.grid, spectral=spec, kind="vector")


def divergence(f: Field) -> Field:
    """Divergence of a vector field."""
    if f.kind != "vector":
        raise ValueError("divergence needs a vector field")
    ks = f.grid.wavenumbers()
    spec = sum(1j * k * f.spectral[i] for i, k in enumerate(ks))
    return Field(f.grid, spectral=spec)


def partial(f: Field, axis: int) -> Field:
    k = f.grid.wavenumbers()[axis]
    return Field(f.grid, spectral=1j * k * f.spectral, kind=f.kind)


def laplacian(f: Field) -> Field:
    return Field(f.grid, spectral=-f.grid.wavenumber_sq() * f.spectral, kind=f.kind)
