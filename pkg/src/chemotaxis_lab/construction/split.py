"""Split of the squared atom sum into its shell-relevant pieces.

With g_k = 2^{k/2} a(2^k (x - c_k)) and f~ = f / count_factor = S sin(W x_1),
S = sum_k g_k, W the outer frequency:

    f~^2 = dc + G + H,
    dc = 1/2 sum_k g_k^2,
    G  = -dc cos(2 W x_1),
    H  = 1/2 sum_{k != j} g_k g_j (1 - cos(2 W x_1)).

At a shell l in K the diagonal piece gives the closed form
K1 = 2^{2l-1} h(2^l (x - c_l)) with
h(y) = -theta(y_1) theta'(y_1) theta^2(y_2) ... theta^2(y_d) cos(2 w y_d),
and K2 = d_1 Dl (1/2 sum_{k != l} g_k^2) collects the other atoms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from chemotaxis_lab.construction.atoms import AtomSpec
from chemotaxis_lab.construction.family import (
    Annulus, ConstructionParams, atom_centers, atom_spectra, support_report)
from chemotaxis_lab.errors import ShellNotResolvable
from chemotaxis_lab.spectral_core.cutoffs import CutoffProfile
from chemotaxis_lab.spectral_core.grid import Field, GridSpec, forward, inverse
from chemotaxis_lab.spectral_core.littlewood_paley import block_symbol, require_resolvable
from chemotaxis_lab.spectral_core.norms import ball_norm_refined


def h_hat(spec: AtomSpec, eta) -> np.ndarray:
    """Transform of h, built from the transform of theta^2.

    theta theta' = (theta^2)' / 2 and theta^2(y) cos(2 w y) shifts the
    transform of theta^2 to +-2w.
    """
    eta = [np.asarray(e, dtype=float) for e in eta]
    d = len(eta)
    T = spec.theta_sq_hat
    w2 = 2.0 * spec.modulation_inner
    out = -0.5j * eta[0] * T(eta[0])
    for i in range(1, d - 1):
        out = out * T(eta[i])
    return out * 0.5 * (T(eta[d - 1] - w2) + T(eta[d - 1] + w2))


def h_values(spec: AtomSpec, y) -> np.ndarray:
    """h evaluated pointwise from theta and theta' (independent of h_hat)."""
    y = [np.asarray(c, dtype=float) for c in y]
    d = len(y)
    out = -spec.theta(y[0]) * spec.theta_prime(y[0])
    for i in range(1, d):
        out = out * spec.theta(y[i]) ** 2
    return out * np.cos(2.0 * spec.modulation_inner * y[d - 1])


def h_ball_norm(spec: AtomSpec, d: int, p: float, radial: int = 64, angular: int = 128) -> float:
    """||h||_{L^p(|y| <= 1)} by polar (d = 2) or spherical (d = 3) quadrature."""
    xr, wr = np.polynomial.legendre.leggauss(radial)
    rho = 0.5 * (xr + 1.0)
    wrho = 0.5 * wr
    phi = 2.0 * np.pi * np.arange(angular) / angular
    if d == 2:
        R, P = np.meshgrid(rho, phi, indexing="ij")
        vals = np.abs(h_values(spec, (R * np.cos(P), R * np.sin(P)))) ** p
        total = np.sum(wrho[:, None] * R * vals) * (2.0 * np.pi / angular)
    elif d == 3:
        xc, wc = np.polynomial.legendre.leggauss(radial)
        R, C, P = np.meshgrid(rho, xc, phi, indexing="ij")
        S = np.sqrt(1.0 - C**2)
        pts = (R * S * np.cos(P), R * S * np.sin(P), R * C)
        vals = np.abs(h_values(spec, pts)) ** p
        total = np.sum(wrho[:, None, None] * wc[None, :, None] * R**2 * vals) \
            * (2.0 * np.pi / angular)
    else:
        raise ValueError("h_ball_norm supports d = 2 and d = 3")
    return float(total) ** (1.0 / p)


def k1_closed_form(params: ConstructionParams, spec: AtomSpec, grid: GridSpec,
                   ell: int) -> Field:
    """K1 = 2^{2l-1} h(2^l (x - c_l)) synthesized from the transform of h."""
    centers = atom_centers(params, grid)
    c = centers[ell]
    scale = 2.0**ell
    ks = grid.wavenumbers()
    eta = [k / scale for k in ks]
    phase = 1.0
    for axis in range(grid.d):
        phase = phase * np.exp(-1j * ks[axis] * c[axis])
    amp = 2.0 ** (2 * ell - 1) * scale ** (-grid.d) * grid.n_points / grid.volume
    return Field(grid, spectral=amp * h_hat(spec, eta) * phase)


@dataclass
class ProductSplit:
    """Pieces of f~^2 and the shell-l derivative blocks.

    Attributes
    ----------
    dc, G, H : Field
        The split f~^2 = dc + G + H.
    K1 : Field
        Closed form of the diagonal block.
    K1_block : Field
        d_1 Dl (g_l^2 / 2) computed on the grid; equals K1 when Dl is the
        identity on the modulated part of g_l^2 and kills its mean part.
    K2 : Field
        d_1 Dl of the remaining diagonal terms.
    ell : int
        Shell.
    split_defect : float
        Relative sup-norm defect of dc + G + H - f~^2.
    identity_defect : float
        ||Dl d_1 (f~^2) - K1 - K2||_2 / ||Dl d_1 (f~^2)||_2.
    """

    dc: Field
    G: Field
    H: Field
    K1: Field
    K1_block: Field
    K2: Field
    ell: int
    center: tuple
    split_defect: float
    identity_defect: float
    pair_products: dict

    def ball_norms(self, p: float, points: int = 129) -> dict:
        """L^p norms of K1, K1_block and K2 over B_l = {|x - c_l| <= 2^{-l}}."""
        radius = 2.0 ** (-self.ell)
        return {name: ball_norm_refined(fld, p, self.center, radius, points)
                for name, fld in (("K1", self.K1), ("K1_block", self.K1_block),
                                  ("K2", self.K2))}


def product_bandwidth_problems(params: ConstructionParams, spec: AtomSpec,
                               grid: GridSpec) -> list[str]:
    """Axes on which products of the data would alias."""
    kmax = max(params.K)
    b = spec.beta * 2.0**kmax
    need = [2.0 * b] * grid.d
    need[0] = 2.0 * (params.outer_frequency + b)
    need[-1] = max(need[-1], 2.0 * (spec.modulation_inner + spec.beta) * 2.0**kmax)
    out = []
    for axis, (req, nyq) in enumerate(zip(need, grid.nyquist_per_axis)):
        if req >= nyq:
            out.append(f"axis {axis}: squared data reach {req:.6g} >= Nyquist {nyq:.6g}")
    return out


def product_split(f: Field, params: ConstructionParams, spec: AtomSpec, grid: GridSpec,
                  ell: int, cutoffs: CutoffProfile | None = None) -> ProductSplit:
    """Decompose f~^2 and form K1, K2 at shell ``ell``.

    Parameters
    ----------
    f : Field
        Output of ``build_f(params, spec, grid)``.
    ell : int
        Shell; must belong to ``params.K``.

    Raises
    ------
    ShellNotResolvable
        If shell ``ell`` or the squared data do not fit below Nyquist.
    """
    if ell not in params.K:
        raise ValueError(f"shell {ell} is not in K = {params.K}")
    cutoffs = cutoffs or CutoffProfile()
    require_resolvable(grid, ell)
    problems = product_bandwidth_problems(params, spec, grid)
    if problems:
        raise ShellNotResolvable("; ".join(problems))
    d = grid.d
    atoms = atom_spectra(params, spec, grid)
    g_phys = {k: inverse(s, grid) for k, s in atoms.items()}
    x1 = grid.coordinates()[0].reshape((-1,) + (1,) * (d - 1))
    cos2 = np.cos(2.0 * params.outer_frequency * x1)
    sq = {k: 0.5 * g**2 for k, g in g_phys.items()}
    dc = sum(sq.values())
    ft = f.physical / params.count_factor
    ft2 = ft**2
    G = -dc * cos2
    H = ft2 - dc - G
    S = sum(g_phys.values())
    sin1 = np.sin(params.outer_frequency * x1)
    ref = max(float(np.max(np.abs(ft2))), np.finfo(float).tiny)
    split_defect = float(np.max(np.abs(dc + G + 0.5 * (S**2 - 2.0 * dc) * (1.0 - cos2)
                                       - (S * sin1) ** 2))) / ref
    sym = block_symbol(grid, ell, cutoffs)
    ik1 = 1j * grid.wavenumbers()[0]
    K1_block = forward(sq[ell], d) * sym * ik1
    others = sum((s for k, s in sq.items() if k != ell), np.zeros(grid.shape))
    K2 = forward(others, d) * sym * ik1
    K1 = k1_closed_form(params, spec, grid, ell)
    lhs = forward(ft2, d) * sym * ik1
    w = grid.parseval_weights()
    num = float(np.sum(w * np.abs(lhs - K1.spectral - K2) ** 2))
    den = float(np.sum(w * np.abs(lhs) ** 2))
    identity_defect = math.sqrt(num / den) if den > 0 else math.sqrt(num)
    ks = sorted(params.K)
    pairs = {}
    for i, k in enumerate(ks):
        for j in ks[i + 1:]:
            pairs[(k, j)] = Field(grid, physical=g_phys[k] * g_phys[j])
    centers = atom_centers(params, grid)
    return ProductSplit(Field(grid, physical=dc), Field(grid, physical=G),
                        Field(grid, physical=H), K1, Field(grid, spectral=K1_block),
                        Field(grid, spectral=K2), ell, centers[ell], split_defect,
                        identity_defect, pairs)


def pair_support_leakage(pair: Field, k: int, j: int, modulation_inner: float) -> float:
    """Leakage of g_k g_j outside {33/48, 35/48} * 2^{max(k, j)} scaled to w."""
    top = 2.0 ** max(k, j)
    # 33/48 and 35/48 are 17/24 -+ 1/48; scale with the inner modulation
    lo = (modulation_inner - 1.0 / 48.0) * top
    hi = (modulation_inner + 1.0 / 48.0) * top
    return support_report(pair, Annulus(lo, hi))
