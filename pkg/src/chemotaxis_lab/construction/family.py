"""The oscillatory atom sum f and the initial-data pair built from it."""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, replace
from typing import Callable

import numpy as np

from chemotaxis_lab.construction.atoms import (
    AtomSpec, require_beta_resolved, scaled_atom_spectrum)
from chemotaxis_lab.errors import ConstraintViolation, OffsetCollision
from chemotaxis_lab.spectral_core.cutoffs import PHI_PLATEAU, CutoffProfile
from chemotaxis_lab.spectral_core.grid import Field, GridSpec
from chemotaxis_lab.spectral_core.norms import BesovParams, besov_norm

DEFAULT_MODULATION_OUTER = 17.0 / 12.0


@dataclass(frozen=True)
class ConstructionParams:
    """Generalized parameters of the atom family.

    Parameters
    ----------
    d : int
        Dimension, at least 2.
    r : float
        Besov summation exponent, ``1 <= r < d``.
    m : int
        Base frequency exponent; the data live in shell ``m``.
    K : tuple of int
        Dyadic scales of the atoms.
    offsets : tuple of float, optional
        Position of each atom along ``offset_axis`` (same order as ``K``).
        ``None`` spreads the atoms over the torus with room proportional to
        their widths.
    offset_axis : int
        Axis along which atoms are separated.
    modulation_outer : float
        The outer sine runs at ``modulation_outer * 2^m`` along x_1.
    amplitude : float
        Extra scalar multiplying the whole family.
    separation_gap : int
        Minimal spacing between distinct scales in K.
    min_separation : float
        Smallest admissible distance between two atoms, measured in units
        of the coarser atom's length scale 2^{-min(k, j)}.  Zero disables
        the check except for coincident atoms.
    """

    d: int
    r: float
    m: int
    K: tuple[int, ...]
    offsets: tuple[float, ...] | None = None
    offset_axis: int = 0
    modulation_outer: float = DEFAULT_MODULATION_OUTER
    amplitude: float = 1.0
    separation_gap: int = 1
    min_separation: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "K", tuple(int(k) for k in self.K))
        if self.offsets is not None:
            object.__setattr__(self, "offsets", tuple(float(o) for o in self.offsets))
        for problem in self.problems():
            raise ValueError(problem)

    def problems(self) -> list[str]:
        """Every violated structural invariant, as readable messages."""
        out = []
        if self.d < 2:
            out.append(f"d must be >= 2, got {self.d}")
        if not (1.0 <= self.r < self.d):
            out.append(f"requires 1 <= r < d, got r = {self.r}, d = {self.d}")
        if len(self.K) == 0:
            out.append("K must contain at least one scale")
        if len(set(self.K)) != len(self.K):
            out.append(f"scales in K must be distinct, got {self.K}")
        ks = sorted(self.K)
        gaps = np.diff(ks) if len(ks) > 1 else np.array([])
        if gaps.size and np.min(gaps) < self.separation_gap:
            out.append(f"scales in K must differ by >= {self.separation_gap}, got {self.K}")
        if self.offsets is not None and len(self.offsets) != len(self.K):
            out.append("offsets must have one entry per scale in K")
        if not 0 <= self.offset_axis < max(self.d, 1):
            out.append(f"offset_axis must be in [0, {self.d}), got {self.offset_axis}")
        if self.amplitude <= 0:
            out.append("amplitude must be positive")
        return out

    @property
    def count_factor(self) -> float:
        """Surrogate of n^{-1/(2r)}: amplitude * |K|^{-1/(2r)}."""
        return self.amplitude * len(self.K) ** (-1.0 / (2.0 * self.r))

    @property
    def outer_frequency(self) -> float:
        return self.modulation_outer * 2.0**self.m

    def with_(self, **changes) -> "ConstructionParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class Annulus:
    """Frequency region ``inner <= |xi| <= outer``."""

    inner: float
    outer: float

    def mask(self, grid: GridSpec) -> np.ndarray:
        rho = grid.wavenumber_abs()
        return (rho >= self.inner) & (rho <= self.outer)


def atom_spectral_box(params: ConstructionParams, spec: AtomSpec, k: int):
    """Bounds of |xi| over the support box of one modulated atom.

    The atom spectrum sits in a box centred at (outer frequency, 0, ...,
    inner frequency * 2^k) with half-widths beta * 2^k; the modulus is
    minimized and maximized over that box exactly.
    """
    s = 2.0**k
    b = spec.beta * s
    om = params.outer_frequency
    w_lo = max(spec.modulation_inner * s - b, 0.0)
    w_hi = spec.modulation_inner * s + b
    x_lo = max(om - b, 0.0)
    x_hi = om + b
    r_min = math.hypot(x_lo, w_lo)
    r_max = math.sqrt(x_hi**2 + (params.d - 2) * b**2 + w_hi**2)
    return r_min, r_max


def constraint_problems(params: ConstructionParams, spec: AtomSpec) -> list[str]:
    """Support inequalities that fail, one message per failure.

    The data spectrum must sit where phi(2^{-m} .) is identically one.
    """
    lo, hi = PHI_PLATEAU[0] * 2.0**params.m, PHI_PLATEAU[1] * 2.0**params.m
    out = []
    for k in params.K:
        r_min, r_max = atom_spectral_box(params, spec, k)
        if r_min < lo:
            out.append(f"scale {k}: min |xi| = {r_min:.6g} < 4/3 * 2^m = {lo:.6g}")
        if r_max > hi:
            out.append(f"scale {k}: max |xi| = {r_max:.6g} > 3/2 * 2^m = {hi:.6g}")
    if spec.beta >= spec.modulation_inner / 3.0:
        out.append(f"beta = {spec.beta:.6g} >= modulation_inner / 3: "
                   "neighbouring scales overlap in frequency")
    return out


def check_constraints(params: ConstructionParams, spec: AtomSpec) -> None:
    problems = constraint_problems(params, spec)
    if problems:
        raise ConstraintViolation("; ".join(problems))


def largest_beta(params: ConstructionParams, plateau_fraction: float = 0.5,
                 modulation_inner: float = 17.0 / 24.0) -> float:
    """Largest beta meeting :func:`constraint_problems`, by bisection."""
    lo, hi = 0.0, modulation_inner / 3.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        spec = AtomSpec(mid, plateau_fraction, modulation_inner)
        if constraint_problems(params, spec):
            hi = mid
        else:
            lo = mid
    return lo


def atom_centers(params: ConstructionParams, grid: GridSpec) -> dict[int, tuple[float, ...]]:
    """Centre of each atom on the torus."""
    axis = params.offset_axis
    length = grid.box_length[axis]
    if params.offsets is not None:
        pos = list(params.offsets)
    else:
        widths = np.array([2.0 ** (-k) for k in params.K])
        seg = widths / widths.sum() * length
        pos = list(np.cumsum(seg) - 0.5 * seg - 0.5 * seg[0])
    out = {}
    for k, p in zip(params.K, pos):
        c = [0.0] * grid.d
        c[axis] = float(p) % length
        out[k] = tuple(c)
    return out


def torus_distance(a, b, grid: GridSpec) -> float:
    total = 0.0
    for x, y, length in zip(a, b, grid.box_length):
        dx = (x - y + 0.5 * length) % length - 0.5 * length
        total += dx * dx
    return math.sqrt(total)


def separation_table(params: ConstructionParams, grid: GridSpec) -> list[tuple[int, int, float]]:
    """Pairwise distances in units of the coarser atom's length scale."""
    centers = atom_centers(params, grid)
    out = []
    ks = list(params.K)
    for i in range(len(ks)):
        for j in range(i + 1, len(ks)):
            dist = torus_distance(centers[ks[i]], centers[ks[j]], grid)
            out.append((ks[i], ks[j], dist * 2.0 ** min(ks[i], ks[j])))
    return out


def check_offsets(params: ConstructionParams, grid: GridSpec) -> None:
    for k, j, dist in separation_table(params, grid):
        if dist <= 1e-12 or dist < params.min_separation:
            raise OffsetCollision(
                f"atoms {k} and {j} are {dist:.4g} coarse units apart; "
                f"threshold is {params.min_separation:.4g}")


def lattice_alignment_error(params: ConstructionParams, grid: GridSpec) -> float:
    """Distance of the outer frequency from the lattice, in lattice units."""
    q = params.outer_frequency * grid.box_length[0] / (2.0 * np.pi)
    return abs(q - round(q))


def atom_spectra(params: ConstructionParams, spec: AtomSpec, grid: GridSpec,
                 shift: float = 0.0) -> dict[int, np.ndarray]:
    """Spectral arrays of 2^{k/2} a(2^k (x - c_k)) for every k, unnormalized."""
    centers = atom_centers(params, grid)
    return {k: 2.0 ** (k / 2.0) * scaled_atom_spectrum(spec, grid, k, centers[k], shift)
            for k in params.K}


def validate_family(params: ConstructionParams, spec: AtomSpec, grid: GridSpec,
                    check_support: bool = True) -> None:
    if grid.d != params.d:
        raise ValueError(f"grid dimension {grid.d} != params.d {params.d}")
    if check_support:
        check_constraints(params, spec)
    for k in params.K:
        require_beta_resolved(grid, spec.beta * 2.0**k)
    check_offsets(params, grid)
    if lattice_alignment_error(params, grid) > 1e-6:
        raise ConstraintViolation(
            "outer frequency is not a lattice frequency of axis 0; choose box_length[0] "
            "as a multiple of 2*pi / (modulation_outer * 2^m)")
    top = params.outer_frequency + spec.beta * 2.0 ** max(params.K)
    if top >= grid.nyquist_per_axis[0]:
        raise ConstraintViolation(
            f"data reach |xi_1| = {top:.6g} beyond Nyquist {grid.nyquist_per_axis[0]:.6g}")


def build_f(params: ConstructionParams, spec: AtomSpec, grid: GridSpec,
            check_support: bool = True) -> Field:
    """Assemble f = c * sum_k 2^{k/2} a(2^k (x - c_k)) sin(outer frequency * x_1).

    Parameters
    ----------
    params : ConstructionParams
        Family parameters.
    spec : AtomSpec
        Atom profile.
    grid : GridSpec
        Sampling grid; the outer frequency must be a lattice frequency.
    check_support : bool
        Enforce the support inequalities (disable only for negative tests).

    Raises
    ------
    ConstraintViolation
        If the spectrum leaves the base plateau or the grid cannot hold it.
    OffsetCollision
        If two atoms are closer than ``params.min_separation``.
    """
    validate_family(params, spec, grid, check_support)
    om = params.outer_frequency
    total = np.zeros(grid.spectral_shape, dtype=complex)
    # sin(om x1) g = (g e^{i om x1} - g e^{-i om x1}) / 2i
    centers = atom_centers(params, grid)
    for k in sorted(params.K):
        amp = 2.0 ** (k / 2.0)
        plus = scaled_atom_spectrum(spec, grid, k, centers[k], shift_axis0=om)
        minus = scaled_atom_spectrum(spec, grid, k, centers[k], shift_axis0=-om)
        total += amp * (plus - minus) / 2j
    total *= params.count_factor
    return Field(grid, spectral=total)


@dataclass
class DataPair:
    """Initial data u0 = 2^{3m/2} f and v0 = 2^{m/2} f e_1.

    Attributes
    ----------
    u0, v0 : Field
        Scalar and vector data.
    f : Field
        The underlying atom sum.
    params : ConstructionParams
        Family parameters.
    spec : AtomSpec
        Atom profile.
    norms : dict
        Critical norms of the data, keyed ``"u0"`` and ``"v0"``.
    """

    u0: Field
    v0: Field
    f: Field
    params: ConstructionParams
    spec: AtomSpec
    norms: dict = dc_field(default_factory=dict)


def data_besov_params(params: ConstructionParams) -> tuple[BesovParams, BesovParams]:
    p = 2.0 * params.d
    return BesovParams(-1.5, p, params.r), BesovParams(-0.5, p, params.r)


def build_initial_data(params: ConstructionParams, spec: AtomSpec, grid: GridSpec,
                       cutoffs: CutoffProfile | None = None, with_norms: bool = True,
                       check_support: bool = True) -> DataPair:
    """Scale f into the data pair and attach its critical Besov norms."""
    f = build_f(params, spec, grid, check_support)
    m = params.m
    u0 = f * 2.0 ** (1.5 * m)
    comps = np.zeros((grid.d,) + grid.spectral_shape, dtype=complex)
    comps[0] = f.spectral * 2.0 ** (0.5 * m)
    v0 = Field(grid, spectral=comps, kind="vector")
    pair = DataPair(u0, v0, f, params, spec)
    if with_norms:
        cutoffs = cutoffs or CutoffProfile()
        bu, bv = data_besov_params(params)
        pair.norms["u0"] = besov_norm(u0, bu, cutoffs)
        pair.norms["v0"] = besov_norm(v0, bv, cutoffs)
    return pair


def support_report(f: Field, claimed: Annulus | Callable | np.ndarray) -> float:
    """Relative spectral L2 mass of ``f`` outside a claimed frequency set.

    Parameters
    ----------
    f : Field
        Field to inspect.
    claimed : Annulus, callable or bool ndarray
        The set; callables receive the wavenumber tuple and return a mask.

    Returns
    -------
    float
        Leakage in [0, 1].
    """
    grid = f.grid
    if isinstance(claimed, np.ndarray):
        mask = claimed
    elif hasattr(claimed, "mask"):
        mask = claimed.mask(grid)
    else:
        mask = np.asarray(claimed(grid.wavenumbers()), dtype=bool)
    w = grid.parseval_weights()
    power = w * np.abs(f.spectral) ** 2
    if power.ndim > grid.d:
        power = power.sum(axis=0)
    total = float(power.sum())
    if total == 0.0:
        return 0.0
    outside = float(power[~np.broadcast_to(mask, power.shape)].sum())
    return math.sqrt(min(max(outside / total, 0.0), 1.0))
