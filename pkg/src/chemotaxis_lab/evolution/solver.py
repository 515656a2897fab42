"""Pseudo-spectral time integration of  u_t - Lap u = div(u v),  v_t = grad u.

The state is (u_hat, v_hat, I_hat) where I is the running time integral of
u; v is stepped together with I, so v - v0 - grad I is a bookkeeping check
on the integrator.  The diffusion is handled by an integrating factor (or
exponential differencing) and the product u v is formed on the grid after
truncating both factors to the dealiasing box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from chemotaxis_lab.errors import BlowupDetected, CFLViolation
from chemotaxis_lab.evolution.duhamel import phi_functions
from chemotaxis_lab.spectral_core.grid import Field, GridSpec, forward, inverse

INTEGRATORS = ("ifrk4", "ifrk2", "etd2")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid on [0, T_final].

    Parameters
    ----------
    T_final : float
        Final time.
    steps : int
        Number of steps, at least 8.
    epsilon : float, optional
        The epsilon in T_final = epsilon * 2^{-2m}, when the grid was built
        that way.
    """

    T_final: float
    steps: int
    epsilon: float | None = None

    def __post_init__(self):
        if not self.T_final > 0:
            raise ValueError(f"T_final must be positive, got {self.T_final}")
        if int(self.steps) != self.steps or self.steps < 8:
            raise ValueError(f"steps must be an integer >= 8, got {self.steps}")

    @classmethod
    def from_epsilon(cls, epsilon: float, m: int, steps: int = 8) -> "TimeGrid":
        return cls(epsilon * 2.0 ** (-2 * m), steps, epsilon)

    @property
    def dt(self) -> float:
        return self.T_final / self.steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T_final, self.steps + 1)


def steps_for(T: float, max_frequency: float, bound: float = 0.5, minimum: int = 8) -> int:
    """Smallest step count with (T / steps) * max_frequency^2 <= bound."""
    return max(minimum, int(math.ceil(T * max_frequency**2 / bound)))


@dataclass(frozen=True)
class SolverConfig:
    """Numerical choices of the solver and the ladder.

    Parameters
    ----------
    dealias_fraction : float
        Modes with |xi_i| > fraction * Nyquist_i on some axis are removed
        from every factor and every product.
    time_integrator : {"ifrk4", "ifrk2", "etd2"}
        Time stepping scheme.
    quadrature_nodes : int
        Gauss-Legendre nodes per time slab for Duhamel integrals of
        explicitly known sources.
    picard_tol : float
        Relative stopping tolerance of the Picard iteration.
    picard_max_iters : int
        Iteration cap of the Picard iteration.
    blowup_guard : float
        Largest admissible growth of the sup norm of u relative to the data.
    cfl_limit : float
        Bound on dt * (|xi|_max |v|_max + |xi|_max sqrt(|u|_max)).
    """

    dealias_fraction: float = 2.0 / 3.0
    time_integrator: str = "ifrk4"
    quadrature_nodes: int = 3
    picard_tol: float = 1e-10
    picard_max_iters: int = 50
    blowup_guard: float = 1e8
    cfl_limit: float = 2.5

    def __post_init__(self):
        if not 0.0 < self.dealias_fraction <= 1.0:
            raise ValueError("dealias_fraction must lie in (0, 1]")
        if self.time_integrator not in INTEGRATORS:
            raise ValueError(f"time_integrator must be one of {INTEGRATORS}")
        if self.quadrature_nodes < 1:
            raise ValueError("quadrature_nodes must be >= 1")


def dealias_mask(grid: GridSpec, fraction: float) -> np.ndarray:
    """Boolean box of retained modes on the spectral layout."""
    ks = grid.wavenumbers()
    mask = np.ones(grid.spectral_shape, dtype=bool)
    for k, nyq in zip(ks, grid.nyquist_per_axis):
        mask = mask & (np.abs(k) <= fraction * nyq * (1.0 + 1e-12))
    return mask


class ProductOperator:
    """Dealiased bilinear operations shared by the solver and the ladder."""

    def __init__(self, grid: GridSpec, fraction: float):
        self.grid = grid
        self.fraction = fraction
        self.mask = dealias_mask(grid, fraction)
        self.ks = grid.wavenumbers()
        self.lam = grid.wavenumber_sq()

    def to_physical(self, spec: np.ndarray) -> np.ndarray:
        if spec.ndim == self.grid.d:
            return inverse(spec * self.mask, self.grid)
        # component by component keeps the masked temporary small
        out = np.empty(spec.shape[:-self.grid.d] + self.grid.shape)
        for i in range(spec.shape[0]):
            out[i] = inverse(spec[i] * self.mask, self.grid)
        return out

    def to_spectral(self, phys: np.ndarray) -> np.ndarray:
        return forward(phys, self.grid.d) * self.mask

    def div_spectral(self, vec_spec: np.ndarray) -> np.ndarray:
        return sum(1j * k * vec_spec[i] for i, k in enumerate(self.ks))

    def grad_spectral(self, spec: np.ndarray) -> np.ndarray:
        return np.stack([1j * k * spec for k in self.ks])

    def grad_physical(self, spec: np.ndarray) -> np.ndarray:
        """Physical samples of grad of a scalar spectrum."""
        out = np.empty((self.grid.d,) + self.grid.shape)
        for i, k in enumerate(self.ks):
            out[i] = inverse((1j * k) * (spec * self.mask), self.grid)
        return out

    def div_components(self, component: Callable[[int], np.ndarray]) -> np.ndarray:
        """Spectrum of div w where ``component(i)`` gives the samples of w_i."""
        out = None
        for i, k in enumerate(self.ks):
            spec = forward(component(i), self.grid.d)
            spec *= self.mask
            spec *= 1j * k
            if out is None:
                out = spec
            else:
                out += spec
        return out

    def div_product(self, a_phys: np.ndarray, b_phys: np.ndarray) -> np.ndarray:
        """Spectrum of div(a b) for scalar ``a`` and vector ``b`` on the grid."""
        return self.div_components(lambda i: a_phys * b_phys[i])

    def dealias_violation(self, spec: np.ndarray) -> float:
        """Relative spectral mass outside the retained box."""
        w = self.grid.parseval_weights()
        p = w * np.abs(spec) ** 2
        total = float(p.sum())
        if total == 0.0:
            return 0.0
        outside = p[..., ~self.mask] if p.ndim == self.grid.d else p[:, ~self.mask]
        return math.sqrt(float(outside.sum()) / total)


@dataclass
class SolutionTrace:
    """Time samples of (u, v) and conserved diagnostics.

    Attributes
    ----------
    times : ndarray
        Times at which fields were stored.
    u, v : list of Field
        Stored fields (possibly only the final one).
    step_times : ndarray
        Every step time.
    mean_u : ndarray
        Spatial mean of u at every step time.
    v_integral_residual : float
        Largest relative L2 size of v - v0 - grad int_0^t u over the run.
    """

    times: np.ndarray
    u: list[Field]
    v: list[Field]
    step_times: np.ndarray
    mean_u: np.ndarray
    v_integral_residual: float
    integrated_u: Field | None = None
    diagnostics: dict = dc_field(default_factory=dict)

    @property
    def final_u(self) -> Field:
        return self.u[-1]

    @property
    def final_v(self) -> Field:
        return self.v[-1]

    def mean_drift(self) -> float:
        ref = max(abs(self.mean_u[0]), 1.0)
        return float(np.max(np.abs(self.mean_u - self.mean_u[0])) / ref)


Forcing = Callable[[float], np.ndarray]


def _check_cfl(op: ProductOperator, u_phys, v_phys, dt: float, limit: float, t: float) -> float:
    kmax = op.fraction * max(op.grid.nyquist_per_axis)
    vmax = float(np.max(np.sqrt(np.sum(v_phys**2, axis=0))))
    umax = float(np.max(np.abs(u_phys)))
    number = dt * kmax * (vmax + math.sqrt(umax))
    if number > limit:
        raise CFLViolation(f"CFL number {number:.3g} exceeds {limit} at t = {t:.6e}")
    return number


def solve_chemotaxis(u0: Field, v0: Field, tgrid: TimeGrid, cfg: SolverConfig | None = None,
                     forcing: Forcing | None = None, store: str = "final",
                     check_cfl: bool = True) -> SolutionTrace:
    """Integrate the chemotaxis system from (u0, v0).

    Parameters
    ----------
    u0, v0 : Field
        Scalar and vector data on the same grid.
    tgrid : TimeGrid
        Time grid.
    cfg : SolverConfig, optional
        Numerical configuration.
    forcing : callable, optional
        ``forcing(t)`` returns the spectrum of an extra source for the u
        equation (used by manufactured solutions).
    store : {"final", "all"}
        Which fields to keep.

    Raises
    ------
    BlowupDetected
        When the sup norm of u grows past the guard or turns non-finite.
    CFLViolation
        When the explicit part leaves its stability region.
    """
    cfg = cfg or SolverConfig()
    grid = u0.grid
    op = ProductOperator(grid, cfg.dealias_fraction)
    lam = op.lam
    dt = tgrid.dt

    def rhs(t, u_s, v_s, cfl=False):
        u_p = op.to_physical(u_s)
        v_p = op.to_physical(v_s)
        if cfl:
            cfl_numbers.append(_check_cfl(op, u_p, v_p, dt, cfg.cfl_limit, t))
        nu = op.div_product(u_p, v_p)
        del u_p, v_p
        if forcing is not None:
            nu += forcing(t)
        return nu, op.grad_spectral(u_s)

    u = np.array(u0.spectral)
    v = np.array(v0.spectral)
    v_init = v0.spectral
    integ = np.zeros_like(u)
    e_full = np.exp(-dt * lam)
    e_half = np.exp(-0.5 * dt * lam)
    if cfg.time_integrator == "etd2":
        p1, p2 = phi_functions(-dt * lam, 2)
    scale0 = max(float(np.max(np.abs(u0.physical))), np.finfo(float).tiny)
    stored_t, stored_u, stored_v = [0.0], [u0], [v0]
    means = [float(np.real(u[(0,) * grid.d]) / grid.n_points)]
    worst_resid = 0.0
    cfl_numbers = []
    for step in range(tgrid.steps):
        t = step * dt
        a_u, a_v = rhs(t, u, v, check_cfl)
        if cfg.time_integrator == "ifrk4":
            # Lawson RK4 accumulated in place; I has no linear part and its
            # stage slopes are the stage values of u, so v - v0 - grad I
            # stays at rounding level
            acc_u = e_full * (u + (dt / 6.0) * a_u)
            acc_v = v + (dt / 6.0) * a_v
            integ += (dt / 6.0) * u
            s_u = e_half * (u + (0.5 * dt) * a_u)
            s_v = v + (0.5 * dt) * a_v
            del a_u, a_v
            integ += (dt / 3.0) * s_u
            b_u, b_v = rhs(t + 0.5 * dt, s_u, s_v)
            acc_u += (dt / 3.0) * e_half * b_u
            acc_v += (dt / 3.0) * b_v
            np.multiply(e_half, u, out=s_u)
            s_u += (0.5 * dt) * b_u
            np.multiply(b_v, 0.5 * dt, out=s_v)
            s_v += v
            del b_u, b_v
            integ += (dt / 3.0) * s_u
            c_u, c_v = rhs(t + 0.5 * dt, s_u, s_v)
            acc_u += (dt / 3.0) * e_half * c_u
            acc_v += (dt / 3.0) * c_v
            np.multiply(e_full, u, out=s_u)
            s_u += dt * e_half * c_u
            np.multiply(c_v, dt, out=s_v)
            s_v += v
            del c_u, c_v
            integ += (dt / 6.0) * s_u
            d_u, d_v = rhs(t + dt, s_u, s_v)
            del s_u, s_v
            acc_u += (dt / 6.0) * d_u
            acc_v += (dt / 6.0) * d_v
            del d_u, d_v
            u, v = acc_u, acc_v
            del acc_u, acc_v
        elif cfg.time_integrator == "ifrk2":
            u1 = e_full * (u + dt * a_u)
            v1 = v + dt * a_v
            b_u, b_v = rhs(t + dt, u1, v1)
            integ += 0.5 * dt * (u + u1)
            u = e_full * u + 0.5 * dt * (e_full * a_u + b_u)
            v = v + 0.5 * dt * (a_v + b_v)
            del u1, v1, b_u, b_v
        else:
            u1 = e_full * u + dt * p1 * a_u
            v1 = v + dt * a_v
            b_u, b_v = rhs(t + dt, u1, v1)
            integ += 0.5 * dt * (u + u1)
            u = u1 + dt * p2 * (b_u - a_u)
            v = v + 0.5 * dt * (a_v + b_v)
            del u1, v1, b_u, b_v
        t_new = (step + 1) * dt
        means.append(float(np.real(u[(0,) * grid.d]) / grid.n_points))
        if not np.all(np.isfinite(u)):
            raise BlowupDetected("non-finite values in u", t_new)
        top = float(np.max(np.abs(inverse(u, grid))))
        if top > cfg.blowup_guard * scale0:
            raise BlowupDetected(f"sup|u| = {top:.3e} exceeds guard", t_new)
        ref = max(_l2(v, grid), np.finfo(float).tiny)
        resid_sq = 0.0
        for i, k in enumerate(op.ks):
            r_i = v[i] - v_init[i]
            r_i -= 1j * k * integ
            resid_sq += _l2(r_i, grid) ** 2
        worst_resid = max(worst_resid, math.sqrt(resid_sq) / ref)
        if store == "all" or step == tgrid.steps - 1:
            stored_t.append(t_new)
            stored_u.append(Field(grid, spectral=u.copy()))
            stored_v.append(Field(grid, spectral=v.copy(), kind="vector"))
    if store != "all":
        stored_t, stored_u, stored_v = [0.0, stored_t[-1]], [u0, stored_u[-1]], \
            [v0, stored_v[-1]]
    trace = SolutionTrace(np.array(stored_t), stored_u, stored_v, tgrid.times,
                          np.array(means), worst_resid,
                          Field(grid, spectral=integ))
    trace.diagnostics["max_cfl"] = max(cfl_numbers) if cfl_numbers else 0.0
    return trace


def _l2(spec: np.ndarray, grid: GridSpec) -> float:
    w = grid.parseval_weights()
    return math.sqrt(float(np.sum(w * np.abs(spec) ** 2)) * grid.volume) / grid.n_points
