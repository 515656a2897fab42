"""Checks of the frame, the Duhamel operators, the solver and the ladder."""

from __future__ import annotations

import math

import numpy as np

from chemotaxis_lab.construction.family import build_initial_data
from chemotaxis_lab.evolution.duhamel import duhamel_const_source, duhamel_quadrature
from chemotaxis_lab.evolution.ladder import build_ladder, build_U2
from chemotaxis_lab.evolution.solver import SolverConfig, TimeGrid, solve_chemotaxis
from chemotaxis_lab.spectral_core.cutoffs import CutoffProfile
from chemotaxis_lab.spectral_core.grid import Field, GridSpec, forward
from chemotaxis_lab.spectral_core.littlewood_paley import (
    decompose, partition_residual, resolvable_range)
from chemotaxis_lab.spectral_core.multipliers import heat_propagate
from chemotaxis_lab.spectral_core.norms import BesovParams, besov_norm
from chemotaxis_lab.verification.corpus import random_ball_field
from chemotaxis_lab.verification.families import member
from chemotaxis_lab.verification.report import CheckReport, fit_exponent

NOMINAL_ORDER = {"ifrk4": 4.0, "ifrk2": 2.0, "etd2": 2.0}


# ------------------------------------------------------------------- LP frame

def check_lp_frame(corpus_size: int = 50, points: int = 1024, seed: int = 0,
                   recon_tol: float = 1e-10, partition_tol: float = 1e-12) -> CheckReport:
    """Reconstruction from the blocks and the partition of unity.

    Fields are band-limited to the annulus where the resolvable blocks sum
    to one.
    """
    grid = GridSpec(2, points, 2.0 * np.pi)
    cutoffs = CutoffProfile()
    rng = np.random.default_rng(seed)
    rep = CheckReport("lp_frame")
    j_lo, j_hi = resolvable_range(grid)
    resid = partition_residual(grid, cutoffs)
    rep.add({"quantity": "partition_residual", "j_lo": j_lo, "j_hi": j_hi}, resid, partition_tol)
    lo, hi = (4.0 / 3.0) * 2.0**j_lo, 0.75 * 2.0 ** (j_hi + 1)
    rho = grid.wavenumber_abs()
    inside = (rho >= lo) & (rho <= hi)
    worst = 0.0
    for i in range(corpus_size):
        radius = hi * float(rng.uniform(0.05, 1.0))
        f = random_ball_field(grid, rng, radius)
        f = Field(grid, spectral=f.spectral * inside)
        dec = decompose(f, cutoffs)
        err = (dec.reconstruct() - f).l2_norm() / f.l2_norm()
        rep.add({"quantity": "reconstruction", "index": i, "radius": radius}, err, recon_tol)
        worst = max(worst, err)
    rep.constants = {"partition_residual": resid, "reconstruction_worst": worst}
    return rep


# -------------------------------------------------------------------- Duhamel

def check_duhamel(corpus_size: int = 20, points: int = 64, band: float = 8.0,
                  times=(0.01, 0.1, 0.5), nodes: int = 64, seed: int = 0,
                  tol: float = 1e-10, semigroup_tol: float = 1e-12) -> CheckReport:
    """Closed-form Duhamel term against Gauss-Legendre quadrature, and semigroup laws."""
    grid = GridSpec(2, points, 2.0 * np.pi)
    rng = np.random.default_rng(seed + 4)
    rep = CheckReport("duhamel")
    worst = {"closed_vs_quadrature": 0.0, "heat_semigroup": 0.0, "duhamel_semigroup": 0.0}
    for i in range(corpus_size):
        g = random_ball_field(grid, rng, band)
        for t in times:
            closed = duhamel_const_source(g, t)
            quad = duhamel_quadrature(lambda s, _g=g: _g, t, nodes=nodes)
            err = (closed - quad).l2_norm() / closed.l2_norm()
            rep.add({"quantity": "closed_vs_quadrature", "index": i, "t": t}, err, tol)
            worst["closed_vs_quadrature"] = max(worst["closed_vs_quadrature"], err)
        s, t = float(rng.uniform(0.01, 0.3)), float(rng.uniform(0.01, 0.3))
        both = heat_propagate(g, s + t)
        err = (heat_propagate(heat_propagate(g, s), t) - both).l2_norm() / both.l2_norm()
        rep.add({"quantity": "heat_semigroup", "index": i, "s": s, "t": t}, err, semigroup_tol)
        worst["heat_semigroup"] = max(worst["heat_semigroup"], err)
        # D(s + t) = e^{t Delta} D(s) + D(t) for a constant source
        whole = duhamel_const_source(g, s + t)
        parts = heat_propagate(duhamel_const_source(g, s), t) + duhamel_const_source(g, t)
        err = (parts - whole).l2_norm() / whole.l2_norm()
        rep.add({"quantity": "duhamel_semigroup", "index": i, "s": s, "t": t}, err, semigroup_tol)
        worst["duhamel_semigroup"] = max(worst["duhamel_semigroup"], err)
    rep.constants = worst
    return rep


# --------------------------------------------------------------------- solver

class ManufacturedSolution:
    """u = e^{-t} sin x1, v = (sin x2 + (1 - e^{-t}) cos x1, 0, ...) on the 2 pi torus.

    ``v_t = grad u`` holds exactly; the u equation needs the forcing
    ``-div(u v)`` because ``u_t - Lap u = 0`` for this u.
    """

    def __init__(self, grid: GridSpec):
        self.grid = grid
        x = grid.coordinates()
        self.x1 = np.broadcast_to(x[0], grid.shape)
        self.x2 = np.broadcast_to(x[1], grid.shape)
        self.ks = grid.wavenumbers()

    def exact(self, t: float):
        u = math.exp(-t) * np.sin(self.x1)
        v = np.zeros((self.grid.d,) + self.grid.shape)
        v[0] = np.sin(self.x2) + (1.0 - math.exp(-t)) * np.cos(self.x1)
        return u, v

    def forcing(self, t: float) -> np.ndarray:
        u, v = self.exact(t)
        uv = forward(u[None] * v, self.grid.d)
        return -sum(1j * self.ks[a] * uv[a] for a in range(self.grid.d))

    def data(self):
        u, v = self.exact(0.0)
        return Field(self.grid, physical=u), Field(self.grid, physical=v, kind="vector")


def check_solver(integrators=("ifrk4", "ifrk2", "etd2"), steps=(16, 32, 64, 128),
                 points: int = 32, T: float = 1.0, order_band: float = 0.3,
                 residual_tol: float = 1e-10, drift_tol: float = 1e-12) -> CheckReport:
    """Convergence order on a manufactured solution and the conserved diagnostics."""
    grid = GridSpec(2, points, 2.0 * np.pi)
    mms = ManufacturedSolution(grid)
    u0, v0 = mms.data()
    rep = CheckReport("solver")
    for name in integrators:
        errs, dts = [], []
        for n in steps:
            tr = solve_chemotaxis(u0, v0, TimeGrid(T, n), SolverConfig(time_integrator=name),
                                  forcing=mms.forcing)
            ue, ve = mms.exact(T)
            err = max(float(np.max(np.abs(tr.final_u.physical - ue))),
                      float(np.max(np.abs(tr.final_v.physical - ve))))
            errs.append(err)
            dts.append(T / n)
            rep.add({"quantity": "v_integral_residual", "integrator": name, "steps": n},
                    tr.v_integral_residual, residual_tol)
            rep.add({"quantity": "mean_drift", "integrator": name, "steps": n},
                    tr.mean_drift(), drift_tol)
        nominal = NOMINAL_ORDER[name]
        for a in range(len(steps) - 1):
            order = math.log2(errs[a] / errs[a + 1])
            rep.add({"quantity": "order_deviation", "integrator": name,
                     "steps": steps[a + 1]}, abs(order - nominal), order_band)
            rep.constants[f"order_{name}_{steps[a + 1]}"] = order
        rep.fits.append(fit_exponent(f"error vs dt ({name})", dts, errs, target=nominal,
                                     band=order_band))
        rep.constants[f"errors_{name}"] = errs
    return rep


# --------------------------------------------------------------------- ladder

def band_limited_pair(points: int = 64, band: float = 6.0, seed: int = 1):
    """Random unit-sup data pair with spectra in ``0 < |xi| <= band``."""
    grid = GridSpec(2, points, 2.0 * np.pi)
    rng = np.random.default_rng(seed)
    mask = (grid.wavenumber_abs() <= band) & (grid.wavenumber_abs() > 0)
    out = []
    for kind in ("scalar", "vector"):
        lead = () if kind == "scalar" else (grid.d,)
        shape = lead + grid.spectral_shape
        spec = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * mask
        fld = Field(grid, physical=np.array(Field(grid, spectral=spec, kind=kind).physical),
                    kind=kind)
        out.append(fld * (1.0 / float(np.max(np.abs(fld.physical)))))
    return out


def check_ladder(scales=(1.0, 0.5, 0.25), T: float = 0.05, steps: int = 64,
                 min_order: float = 1.8, epsilons=(1 / 8, 1 / 16, 1 / 32),
                 eps_member=None, eps_steps: int = 8, u22_target: float = 2.0,
                 u22_band: float = 0.2, cfg: SolverConfig | None = None) -> CheckReport:
    """Ladder against the solver under amplitude scaling, and the eps^2 law of U22.

    The defect is ``||u_solver - (U1 + U2 + U3)||_2 / ||u_solver||_2`` at T.
    U22 is measured in the critical norm of u at ``eps 2^{-2m}`` on a small
    atom family.
    """
    cfg = cfg or SolverConfig()
    rep = CheckReport("ladder")
    u0b, v0b = band_limited_pair()
    defects = []
    for lam in scales:
        u0, v0 = u0b * lam, v0b * lam
        tg = TimeGrid(T, steps)
        tr = solve_chemotaxis(u0, v0, tg, cfg)
        lad = build_ladder(u0, v0, tg, cfg, store="final")
        defect = (tr.final_u - lad.u()).l2_norm() / tr.final_u.l2_norm()
        defects.append(defect)
        rep.constants[f"defect_{lam:g}"] = defect
        rep.constants[f"picard_iterations_{lam:g}"] = int(max(lad.picard_iterations))
    rep.fits.append(fit_exponent("defect vs amplitude", scales, defects, lower=min_order,
                                 band=0.4))
    mem = eps_member or member(7, (4, 5), 1024)
    pair = build_initial_data(mem.params, mem.spec, mem.grid, with_norms=False)
    cutoffs = CutoffProfile()
    bp = BesovParams(-1.5, 2.0 * mem.params.d, mem.params.r)
    u22 = []
    for eps in epsilons:
        tg = TimeGrid.from_epsilon(eps, mem.params.m, steps=eps_steps)
        lad = build_U2(pair.u0, pair.v0, tg, cfg, store="final")
        u22.append(besov_norm(lad.U("U22"), bp, cutoffs))
        rep.constants[f"U22_eps_{eps:g}"] = u22[-1]
    rep.fits.append(fit_exponent("U22 vs epsilon", epsilons, u22, target=u22_target,
                                 band=u22_band))
    return rep
