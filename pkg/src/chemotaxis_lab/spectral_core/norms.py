"""Lebesgue, Besov and Chemin-Lerner norms of sampled fields.

Lebesgue norms use the rectangle rule on the grid samples, which is exact
in L2 for trigonometric polynomials.  Besov sums run over an explicit shell
range; passing ``shells`` restricts the sum to a chosen subset, which is
how shell-restricted norms are formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from chemotaxis_lab.errors import EmptyTrace
from chemotaxis_lab.spectral_core.cutoffs import CutoffProfile
from chemotaxis_lab.spectral_core.grid import Field, GridSpec
from chemotaxis_lab.spectral_core.littlewood_paley import (
    _check_range, block_symbol, require_resolvable)


@dataclass(frozen=True)
class BesovParams:
    """Indices of a homogeneous Besov norm.

    Parameters
    ----------
    s : float
        Smoothness index.
    p : float
        Lebesgue exponent, ``inf`` allowed.
    r : float
        Summation exponent, ``inf`` allowed.
    """

    s: float
    p: float
    r: float

    def __post_init__(self):
        if not self.p >= 1.0:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if not self.r >= 1.0:
            raise ValueError(f"r must be >= 1, got {self.r}")


# ---------------------------------------------------------------- regions

@dataclass(frozen=True)
class Ball:
    """Closed ball on the torus, distances taken to the nearest image."""

    center: tuple[float, ...]
    radius: float

    def mask(self, grid: GridSpec) -> np.ndarray:
        r2 = np.zeros(grid.shape)
        for x, c, length in zip(grid.coordinates(), self.center, grid.box_length):
            dx = (x - c + 0.5 * length) % length - 0.5 * length
            r2 = r2 + dx * dx
        return r2 <= self.radius**2


@dataclass(frozen=True)
class SubBox:
    """Axis-aligned box [lower, upper) in physical coordinates."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def mask(self, grid: GridSpec) -> np.ndarray:
        m = np.ones(grid.shape, dtype=bool)
        for x, lo, hi in zip(grid.coordinates(), self.lower, self.upper):
            m = m & (x >= lo) & (x < hi)
        return m


def _pointwise_magnitude(f: Field) -> np.ndarray:
    if f.kind == "scalar":
        return np.abs(f.physical)
    return np.sqrt(np.sum(f.physical**2, axis=0))


def lp_of_samples(values: np.ndarray, p: float, cell_volume: float) -> float:
    """Rectangle-rule L^p norm of nonnegative samples."""
    if values.size == 0:
        return 0.0
    if math.isinf(p):
        return float(np.max(values))
    top = float(np.max(values))
    if top == 0.0:
        return 0.0
    scaled = values / top
    return top * float(np.sum(scaled**p) * cell_volume) ** (1.0 / p)


def lebesgue_norm(f: Field, p: float, region=None) -> float:
    """L^p norm of ``f`` over the torus or a region.

    Parameters
    ----------
    f : Field
        Scalar or vector field (vectors use the pointwise Euclidean length).
    p : float
        Exponent in [1, inf].
    region : Ball, SubBox or bool ndarray, optional
        Restricts the quadrature to masked samples.
    """
    if not p >= 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    if region is None and p == 2.0:
        return f.l2_norm()
    mag = _pointwise_magnitude(f)
    if region is not None:
        mask = region if isinstance(region, np.ndarray) else region.mask(f.grid)
        mag = mag[mask]
    return lp_of_samples(mag, p, f.grid.cell_volume)


# ------------------------------------------------------- refined sampling

def evaluate_trig(f: Field, axis_points: Sequence[np.ndarray]) -> np.ndarray:
    """Evaluate the trigonometric interpolant of a scalar field on a tensor grid.

    Parameters
    ----------
    f : Field
        Scalar field.
    axis_points : sequence of 1-D arrays
        Sample coordinates along each axis.

    Returns
    -------
    ndarray
        Values with shape ``tuple(len(x) for x in axis_points)``.
    """
    if f.kind != "scalar":
        raise ValueError("evaluate_trig needs a scalar field")
    grid = f.grid
    coeffs = f.spectral * grid.parseval_weights() / grid.n_points
    ks = grid.wavenumbers()
    # drop all-zero slabs before the dense contractions
    for axis in range(grid.d):
        other = tuple(a for a in range(grid.d) if a != axis)
        keep = np.nonzero(np.any(coeffs != 0, axis=other))[0]
        coeffs = np.take(coeffs, keep, axis=axis)
        ks = ks[:axis] + (np.take(ks[axis], keep, axis=axis),) + ks[axis + 1:]
    out = coeffs
    for axis in range(grid.d):
        k = ks[axis].ravel()
        basis = np.exp(1j * np.outer(np.asarray(axis_points[axis], float), k))
        out = np.tensordot(basis, out, axes=([1], [axis]))
        out = np.moveaxis(out, 0, axis)
    return np.real(out)


def ball_norm_refined(f: Field, p: float, center: Sequence[float], radius: float,
                      points: int = 129) -> float:
    """L^p norm of a scalar field over a small ball, from a refined local grid.

    The field is resampled on ``points`` nodes per axis spanning the ball's
    bounding box, using its exact trigonometric interpolant, and the
    rectangle rule is applied inside the ball.
    """
    h = 2.0 * radius / points
    axes = [c - radius + h * (np.arange(points) + 0.5) for c in center]
    vals = np.abs(evaluate_trig(f, axes))
    r2 = np.zeros(vals.shape)
    for i, (x, c) in enumerate(zip(axes, center)):
        shape = [1] * len(axes)
        shape[i] = points
        r2 = r2 + ((x - c) ** 2).reshape(shape)
    inside = vals[r2 <= radius**2]
    return lp_of_samples(inside, p, h ** len(axes))


# ------------------------------------------------------------ Besov norms

def _block_lp(f: Field, sym: np.ndarray, p: float) -> float:
    spec = f.spectral * sym
    if not spec.any():
        # an exactly empty block needs no transform
        return 0.0
    return lebesgue_norm(Field(f.grid, spectral=spec, kind=f.kind), p)


def _resolve_shells(grid: GridSpec, j_range, shells) -> list[int]:
    if shells is not None:
        shells = sorted(int(j) for j in shells)
        for j in shells:
            require_resolvable(grid, j)
        return shells
    j_lo, j_hi = _check_range(grid, j_range)
    return list(range(j_lo, j_hi + 1))


def block_lp_norms(f: Field, p: float, cutoffs: CutoffProfile, j_range=None,
                   shells: Iterable[int] | None = None) -> dict[int, float]:
    """L^p norm of every dyadic block of ``f``."""
    out = {}
    for j in _resolve_shells(f.grid, j_range, shells):
        out[j] = _block_lp(f, block_symbol(f.grid, j, cutoffs), p)
    return out


def aggregate_lr(values: Sequence[float], r: float) -> float:
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        return 0.0
    if math.isinf(r):
        return float(np.max(vals))
    top = float(np.max(vals))
    if top == 0.0:
        return 0.0
    return top * float(np.sum((vals / top) ** r)) ** (1.0 / r)


def besov_norm(f: Field, params: BesovParams, cutoffs: CutoffProfile, j_range=None,
               shells: Iterable[int] | None = None) -> float:
    """Homogeneous Besov norm truncated to a shell range or a shell subset.

    Parameters
    ----------
    f : Field
        Field to measure.
    params : BesovParams
        Indices (s, p, r).
    cutoffs : CutoffProfile
        Radial profiles.
    j_range : (int, int), optional
        Inclusive shell range; defaults to every resolvable shell.
    shells : iterable of int, optional
        Explicit shell subset; overrides ``j_range``.
    """
    norms = block_lp_norms(f, params.p, cutoffs, j_range, shells)
    weighted = [2.0 ** (params.s * j) * v for j, v in norms.items()]
    return aggregate_lr(weighted, params.r)


def time_lp(samples: np.ndarray, times: np.ndarray, rho: float) -> float:
    """Composite-trapezoid L^rho norm in time of nonnegative samples."""
    if math.isinf(rho):
        return float(np.max(samples))
    if len(times) == 1:
        return 0.0
    return float(np.trapezoid(samples**rho, times)) ** (1.0 / rho)


def chemin_lerner_norm(times: Sequence[float], trace: Sequence[Field], rho: float,
                       params: BesovParams, cutoffs: CutoffProfile, j_range=None,
                       shells: Iterable[int] | None = None) -> float:
    """Chemin-Lerner norm: time L^rho per block, then the weighted l^r sum.

    Parameters
    ----------
    times : sequence of float
        Uniform sample times covering [0, T].
    trace : sequence of Field
        Field at each time.
    rho : float
        Time exponent in [1, inf].
    """
    if len(trace) == 0:
        raise EmptyTrace("chemin_lerner_norm received an empty trace")
    times = np.asarray(times, dtype=float)
    if len(times) != len(trace):
        raise ValueError("times and trace lengths differ")
    if len(times) > 2:
        steps = np.diff(times)
        if np.max(np.abs(steps - steps[0])) > 1e-9 * max(abs(steps[0]), 1e-300):
            raise ValueError("chemin_lerner_norm needs a uniform time grid")
    grid = trace[0].grid
    per_block = []
    for j in _resolve_shells(grid, j_range, shells):
        sym = block_symbol(grid, j, cutoffs)
        samples = np.array([_block_lp(f, sym, params.p) for f in trace])
        per_block.append(2.0 ** (params.s * j) * time_lp(samples, times, rho))
    return aggregate_lr(per_block, params.r)
