"""Band-limited bumps and modulated atoms.

Transform convention: ``g_hat(xi) = int g(x) exp(-i x xi) dx`` on R^d.
Torus fields are built by sampling the continuous transform on the
lattice, which yields the periodization of the R^d function exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from chemotaxis_lab.errors import BetaUnresolvable
from chemotaxis_lab.spectral_core.cutoffs import smoothstep
from chemotaxis_lab.spectral_core.grid import Field, GridSpec

DEFAULT_MODULATION_INNER = 17.0 / 24.0


@dataclass(frozen=True)
class AtomSpec:
    """Profile of the bump transform and the inner modulation of the atom.

    Parameters
    ----------
    beta : float
        Support radius of the bump transform.
    plateau_fraction : float
        The transform equals 1 on ``|xi| <= plateau_fraction * beta``.
    modulation_inner : float
        Frequency of the sine along the last axis.
    smoothness_order : int
        Order of the smoothstep used on the transition interval.
    """

    beta: float
    plateau_fraction: float = 0.5
    modulation_inner: float = DEFAULT_MODULATION_INNER
    smoothness_order: int = 8

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not 0.0 <= self.plateau_fraction < 1.0:
            raise ValueError("plateau_fraction must lie in [0, 1)")
        if self.smoothness_order < 1:
            raise ValueError("smoothness_order must be >= 1")

    @classmethod
    def asymptotic(cls, d: int) -> "AtomSpec":
        """Beta = 1/(100 d), the radius used by the asymptotic construction."""
        return cls(beta=1.0 / (100.0 * d))

    def theta_hat(self, xi) -> np.ndarray:
        """Even, real bump transform with values in [0, 1]."""
        xi = np.abs(np.asarray(xi, dtype=float))
        width = (1.0 - self.plateau_fraction) * self.beta
        return smoothstep((self.beta - xi) / width, self.smoothness_order)

    def _nodes(self, y_max: float, panels: int | None = None):
        # composite Gauss-Legendre on [0, beta]; panels track the oscillation count
        if panels is None:
            panels = max(16, int(math.ceil(y_max * self.beta / 2.0)) + 8)
        x, w = np.polynomial.legendre.leggauss(24)
        edges = np.linspace(0.0, self.beta, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        weights = (half[:, None] * w[None, :]).ravel()
        return nodes, weights * self.theta_hat(nodes)

    def theta(self, y) -> np.ndarray:
        """The bump on R: (1/pi) int_0^beta theta_hat(xi) cos(y xi) dxi."""
        y = np.asarray(y, dtype=float)
        nodes, wts = self._nodes(float(np.max(np.abs(y), initial=0.0)))
        flat = y.reshape(-1)
        out = np.empty(flat.shape)
        for s in range(0, flat.size, 4096):
            out[s:s + 4096] = np.cos(np.outer(flat[s:s + 4096], nodes)) @ wts
        return (out / np.pi).reshape(y.shape)

    def theta_prime(self, y) -> np.ndarray:
        """Derivative of :meth:`theta`."""
        y = np.asarray(y, dtype=float)
        nodes, wts = self._nodes(float(np.max(np.abs(y), initial=0.0)))
        flat = y.reshape(-1)
        out = np.empty(flat.shape)
        for s in range(0, flat.size, 4096):
            out[s:s + 4096] = -np.sin(np.outer(flat[s:s + 4096], nodes)) @ (nodes * wts)
        return (out / np.pi).reshape(y.shape)

    def theta_sq_hat(self, eta) -> np.ndarray:
        """Transform of theta^2, i.e. (theta_hat * theta_hat)(eta) / (2 pi)."""
        eta = np.asarray(eta, dtype=float)
        x, w = np.polynomial.legendre.leggauss(48)
        panels = 32
        edges = np.linspace(-self.beta, self.beta, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        z = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        wz = (half[:, None] * w[None, :]).ravel() * self.theta_hat(z)
        flat = eta.reshape(-1)
        out = np.zeros(flat.shape)
        live = np.abs(flat) < 2.0 * self.beta
        if np.any(live):
            out[live] = self.theta_hat(flat[live, None] - z[None, :]) @ wz
        return (out / (2.0 * np.pi)).reshape(eta.shape)

    def atom_hat_factors(self, d: int):
        """Per-axis factors of the atom transform.

        Returns a list of ``d`` callables; the atom transform is their
        product over axes.  The last factor carries the inner sine.
        """
        th = self.theta_hat
        om = self.modulation_inner

        def last(xi):
            xi = np.asarray(xi, dtype=float)
            return (th(xi - om) - th(xi + om)) / 2j

        return [th] * (d - 1) + [last]


def lattice_points_inside(length: float, radius: float) -> int:
    """Number of non-negative lattice frequencies strictly below ``radius``."""
    step = 2.0 * np.pi / length
    return int(math.ceil(radius / step - 1e-12))


def require_beta_resolved(grid: GridSpec, radius: float, minimum: int = 4) -> None:
    """Raise BetaUnresolvable unless every axis has ``minimum`` points in [0, radius)."""
    for axis, length in enumerate(grid.box_length):
        count = lattice_points_inside(length, radius)
        if count < minimum:
            raise BetaUnresolvable(
                f"axis {axis}: only {count} lattice points inside [0, {radius:.4g}); "
                f"need {minimum} (box length {length:.4g})")


def _axis_array(grid: GridSpec, axis: int) -> np.ndarray:
    return grid.wavenumbers()[axis]


def theta_profile(spec: AtomSpec, grid: GridSpec) -> Field:
    """Periodized theta(x_1) as a field constant in the remaining coordinates.

    Raises
    ------
    BetaUnresolvable
        If fewer than four lattice points fall inside [0, beta) on an axis.
    """
    require_beta_resolved(grid, spec.beta)
    ks = grid.wavenumbers()
    spec_arr = np.zeros(grid.spectral_shape, dtype=complex)
    factor = grid.n_points / grid.box_length[0]
    line = spec.theta_hat(ks[0]) * factor
    for axis in range(1, grid.d):
        line = line * (ks[axis] == 0)
    spec_arr += line
    return Field(grid, spectral=spec_arr)


def scaled_atom_spectrum(spec: AtomSpec, grid: GridSpec, k: float,
                         center, shift_axis0: float = 0.0) -> np.ndarray:
    """Lattice samples of the transform of ``a(2^k (x - center))``.

    The transform is evaluated at ``xi - shift_axis0 * e_1`` so modulated
    copies can be assembled without rebuilding the factors.  The result is
    scaled to the unnormalized spectral layout of :class:`Field`.
    """
    d = grid.d
    scale = 2.0**k
    factors = spec.atom_hat_factors(d)
    out = grid.n_points / grid.volume * scale ** (-d)
    ks = grid.wavenumbers()
    for axis in range(d):
        xi = ks[axis] - (shift_axis0 if axis == 0 else 0.0)
        out = out * factors[axis](xi / scale) * np.exp(-1j * xi * center[axis])
    return out


def build_atom(spec: AtomSpec, grid: GridSpec, k: float = 0.0, center=None) -> Field:
    """The atom a(x) = prod theta(x_i) * sin(modulation_inner x_d), optionally rescaled.

    Parameters
    ----------
    spec : AtomSpec
        Atom profile.
    grid : GridSpec
        Sampling grid (d >= 2).
    k : float
        Dyadic scale; the field is ``a(2^k (x - center))``.
    center : sequence of float, optional
        Translation; defaults to the origin.
    """
    if grid.d < 2:
        raise ValueError("atoms need d >= 2")
    require_beta_resolved(grid, spec.beta * 2.0**k)
    if center is None:
        center = (0.0,) * grid.d
    return Field(grid, spectral=scaled_atom_spectrum(spec, grid, k, center))
