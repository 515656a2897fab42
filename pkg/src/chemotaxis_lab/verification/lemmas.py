"""Corpus checks of the harmonic-analysis inequalities.

Each check measures the ratio ``lhs / rhs`` of an inequality on a seeded
corpus of band-limited fields, records the worst ratio as the corpus
constant, and compares it with a frozen bound.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from chemotaxis_lab.errors import ExponentConstraintViolated
from chemotaxis_lab.spectral_core.cutoffs import CutoffProfile
from chemotaxis_lab.spectral_core.grid import GridSpec, forward, inverse
from chemotaxis_lab.spectral_core.littlewood_paley import resolvable_range
from chemotaxis_lab.spectral_core.norms import lp_of_samples
from chemotaxis_lab.evolution.duhamel import phi_functions
from chemotaxis_lab.verification.corpus import (
    besov_from_blocks, block_lp_table, chemin_lerner_from_table, random_ball_field,
    random_shell_field, sup_in_time)
from chemotaxis_lab.verification.report import CheckReport

INF = math.inf

# Frozen corpus bounds, fixed by calibration runs with seed 0.
BERNSTEIN_BOUND = 8.0
EMBEDDING_BOUND = 8.0
HEAT_BOUND = 8.0
PRODUCT_BOUNDS = {"p": 8.0, "n1": 8.0, "n2": 8.0}


def corpus_grid(points: int = 256, periods: float = 4.0, d: int = 2) -> GridSpec:
    """Square torus of side ``2 pi periods`` (fundamental frequency 1/periods)."""
    return GridSpec(d, points, 2.0 * np.pi * periods)


def multi_indices(d: int, k: int) -> list[tuple[int, ...]]:
    return [a for a in itertools.product(range(k + 1), repeat=d) if sum(a) == k]


def max_derivative_norm(spec: np.ndarray, grid: GridSpec, k: int, p: float) -> float:
    """sup over |alpha| = k of ||d^alpha f||_p."""
    ks = grid.wavenumbers()
    best = 0.0
    for alpha in multi_indices(grid.d, k):
        sym = 1.0
        for axis, a in enumerate(alpha):
            if a:
                sym = sym * (1j * ks[axis]) ** a
        phys = inverse(spec * sym, grid)
        best = max(best, lp_of_samples(np.abs(phys), p, grid.cell_volume))
    return best


# ------------------------------------------------------------------ Bernstein

def check_bernstein(corpus_size: int = 100, shells=(0, 1, 2, 3), ps=(1.0, 2.0, 4.0, INF),
                    pq_pairs=((1.0, 2.0), (2.0, 4.0), (2.0, INF), (4.0, INF), (1.0, INF)),
                    orders=(1, 2), seed: int = 0, grid: GridSpec | None = None,
                    bound: float = BERNSTEIN_BOUND) -> CheckReport:
    """Annulus and ball Bernstein inequalities on random band-limited fields.

    Annulus: ``C^{-k-1} 2^{jk} ||f||_p <= sup_|a|=k ||d^a f||_p <= C^{k+1} 2^{jk} ||f||_p``
    for spectra in ``{3/4 <= 2^{-j}|xi| <= 8/3}``.  Ball: for spectra in
    ``|xi| <= 2^j`` and ``p <= q``,
    ``sup_|a|=k ||d^a f||_q <= C^{k+1} 2^{j(k + d/p - d/q)} ||f||_p`` with ``k`` in
    ``{0} + orders``.  The corpus constant is the largest ``C`` needed.
    """
    grid = grid or corpus_grid()
    cutoffs = CutoffProfile()
    rng = np.random.default_rng(seed)
    rep = CheckReport("bernstein")
    worst = {"annulus_upper": 0.0, "annulus_lower": 0.0, "ball": 0.0}
    for i in range(corpus_size):
        j = shells[i % len(shells)]
        lam = 2.0**j
        f = random_shell_field(grid, rng, [j], cutoffs)
        for p in ps:
            base = lp_of_samples(np.abs(f.physical), p, grid.cell_volume)
            for k in orders:
                ratio = max_derivative_norm(f.spectral, grid, k, p) / (lam**k * base)
                par = {"case": "annulus", "index": i, "j": j, "k": k, "p": p}
                rep.add(dict(par, side="upper"), ratio, bound ** (k + 1))
                rep.add(dict(par, side="lower"), 1.0 / ratio, bound ** (k + 1))
                worst["annulus_upper"] = max(worst["annulus_upper"], ratio ** (1.0 / (k + 1)))
                worst["annulus_lower"] = max(worst["annulus_lower"],
                                             ratio ** (-1.0 / (k + 1)))
        g = random_ball_field(grid, rng, lam)
        for p, q in pq_pairs:
            base = lp_of_samples(np.abs(g.physical), p, grid.cell_volume)
            for k in (0,) + tuple(orders):
                top = max_derivative_norm(g.spectral, grid, k, q)
                ratio = top / (lam ** (k + grid.d / p - grid.d / q) * base)
                rep.add({"case": "ball", "index": i, "j": j, "k": k, "p": p, "q": q},
                        ratio, bound ** (k + 1))
                worst["ball"] = max(worst["ball"], ratio ** (1.0 / (k + 1)))
    rep.constants = {f"C_{name}": v for name, v in worst.items()}
    rep.constants["C"] = max(worst.values())
    rep.constants["bound"] = bound
    return rep


# ------------------------------------------------------------------ embedding

DEFAULT_EMBEDDINGS = (
    # (s, p1, r1, p2, r2)
    (0.5, 2.0, 1.0, 4.0, 1.0),
    (-0.5, 2.0, 2.0, 4.0, INF),
    (-1.5, 4.0, 1.0, INF, 1.0),
    (0.0, 2.0, 1.0, 2.0, 2.0),
    (-0.5, 3.5, 1.0, 4.0, 1.0),
    (1.0, 1.0, 1.0, 2.0, 2.0),
)


def check_embedding(corpus_size: int = 40, embeddings=DEFAULT_EMBEDDINGS, seed: int = 0,
                    grid: GridSpec | None = None, bound: float = EMBEDDING_BOUND) -> CheckReport:
    """``||f||_{B^{s - d(1/p1 - 1/p2)}_{p2,r2}} <= C ||f||_{B^s_{p1,r1}}`` for p1 <= p2, r1 <= r2."""
    grid = grid or corpus_grid()
    cutoffs = CutoffProfile()
    rng = np.random.default_rng(seed + 1)
    j_lo, j_hi = resolvable_range(grid)
    shells = list(range(j_lo, j_hi + 1))
    ps = sorted({e[1] for e in embeddings} | {e[3] for e in embeddings})
    rep = CheckReport("embedding")
    worst = 0.0
    for s, p1, r1, p2, r2 in embeddings:
        if not (p1 <= p2 and r1 <= r2):
            raise ExponentConstraintViolated(f"embedding needs p1 <= p2, r1 <= r2: {p1, r1, p2, r2}")
    for i in range(corpus_size):
        width = 1 + i % 4
        start = int(rng.integers(max(j_lo, -1), j_hi - width + 2))
        f = random_shell_field(grid, rng, range(start, start + width), cutoffs)
        table = block_lp_table(f.spectral[None], grid, ps, cutoffs, shells)
        for s, p1, r1, p2, r2 in embeddings:
            t = s - grid.d * (1.0 / p1 - 1.0 / p2)
            lhs = besov_from_blocks(table[p2][:, 0], shells, t, r2)
            rhs = besov_from_blocks(table[p1][:, 0], shells, s, r1)
            rep.add({"index": i, "s": s, "p1": p1, "r1": r1, "p2": p2, "r2": r2},
                    lhs / rhs, bound)
            worst = max(worst, lhs / rhs)
    rep.constants = {"C": worst, "bound": bound}
    return rep


# ----------------------------------------------------------- heat regularity

DEFAULT_HEAT_INDICES = ((-1.5, 2.0, 1.0), (-0.5, 4.0, 1.0), (0.5, 2.0, 2.0), (-1.5, 4.0, 1.0))
HEAT_PAIRS = ((1.0, 1.0), (1.0, INF), (2.0, 2.0))


def heat_solution_stack(u0_hat: np.ndarray, g1_hat: np.ndarray, g2_hat: np.ndarray,
                        lam: np.ndarray, times: np.ndarray, T: float) -> np.ndarray:
    """Exact u(t) for u_t - Lap u = g1 + (t/T) g2, u(0) = u0, at every time.

    Uses ``int_0^t e^{-(t-s) lam} ds = t phi_1`` and
    ``int_0^t e^{-(t-s) lam} s ds = t^2 phi_2`` evaluated at ``-t lam``.
    """
    out = np.empty((len(times),) + u0_hat.shape, dtype=complex)
    for n, t in enumerate(times):
        p1, p2 = phi_functions(-t * lam, orders=2)
        out[n] = np.exp(-t * lam) * u0_hat + t * p1 * g1_hat + (t * t / T) * p2 * g2_hat
    return out


def check_heat_regularity(corpus_size: int = 50, indices=DEFAULT_HEAT_INDICES,
                          pairs=HEAT_PAIRS, T: float = 1.0, samples: int = 257, seed: int = 0,
                          grid: GridSpec | None = None, bound: float = HEAT_BOUND) -> CheckReport:
    """Smoothing estimate of the inhomogeneous heat equation on a random corpus.

    For each (s, p, r) and (q1, q2):
    ``||u||_{L~^{q2}B^{s+2/q2}} <= C (||u0||_{B^s} + ||f||_{L~^{q1}B^{s+2/q1-2}})``.
    """
    grid = grid or corpus_grid(points=64, periods=2.0)
    cutoffs = CutoffProfile()
    rng = np.random.default_rng(seed + 2)
    j_lo, j_hi = resolvable_range(grid)
    shells = list(range(j_lo, j_hi + 1))
    lam = grid.wavenumber_sq()
    times = np.linspace(0.0, T, samples)
    ps = sorted({ix[1] for ix in indices})
    rep = CheckReport("heat_regularity")
    worst = {pair: 0.0 for pair in pairs}
    for q1, q2 in pairs:
        if not q1 <= q2:
            raise ExponentConstraintViolated(f"heat regularity needs q1 <= q2, got {q1, q2}")
    for i in range(corpus_size):
        def draw():
            width = 1 + int(rng.integers(0, 4))
            start = int(rng.integers(j_lo, j_hi - width + 2))
            return random_shell_field(grid, rng, range(start, start + width), cutoffs).spectral
        u0 = draw() * (0.0 if i % 10 == 9 else 1.0)
        g1, g2 = draw(), draw() * float(rng.standard_normal())
        u_stack = heat_solution_stack(u0, g1, g2, lam, times, T)
        f_stack = g1[None] + (times / T).reshape((-1,) + (1,) * grid.d) * g2[None]
        u_tab = block_lp_table(u_stack, grid, ps, cutoffs, shells)
        f_tab = block_lp_table(f_stack, grid, ps, cutoffs, shells)
        u0_tab = block_lp_table(u0[None], grid, ps, cutoffs, shells)
        for s, p, r in indices:
            u0_norm = besov_from_blocks(u0_tab[p][:, 0], shells, s, r)
            for q1, q2 in pairs:
                lhs = chemin_lerner_from_table(u_tab[p], shells, times, q2, s + 2.0 / q2, r)
                rhs = u0_norm + chemin_lerner_from_table(f_tab[p], shells, times, q1,
                                                         s + 2.0 / q1 - 2.0, r)
                rep.add({"index": i, "s": s, "p": p, "r": r, "q1": q1, "q2": q2},
                        lhs / rhs, bound)
                worst[(q1, q2)] = max(worst[(q1, q2)], lhs / rhs)
    rep.constants = {f"C_q1={q1:g}_q2={q2:g}": v for (q1, q2), v in worst.items()}
    rep.constants["C"] = max(worst.values())
    rep.constants["bound"] = bound
    return rep


# --------------------------------------------------------------- product laws

DEFAULT_RHO = (
    # (rho, rho1, rho2, rho3, rho4) with 1/rho = 1/rho1 + 1/rho2 = 1/rho3 + 1/rho4
    (1.0, 2.0, 2.0, 2.0, 2.0),
    (2.0, INF, 2.0, 2.0, INF),
    (1.0, INF, 1.0, 1.0, INF),
)


def _harmonic_ok(rho, *parts) -> bool:
    inv = sum(0.0 if math.isinf(x) else 1.0 / x for x in parts)
    return abs(inv - (0.0 if math.isinf(rho) else 1.0 / rho)) < 1e-12


def product_law_problems(law: str, d: int, p: float, q: float | None = None,
                         s: float | None = None) -> list[str]:
    """Violated hypotheses of a product law."""
    out = []
    if law == "p":
        if s is None or not s > 0:
            out.append(f"law p needs s > 0, got s = {s}")
        if not p >= 1:
            out.append(f"law p needs p >= 1, got {p}")
    elif law == "n1":
        if not 1 <= p < 2 * d:
            out.append(f"law n1 needs 1 <= p < 2d = {2 * d}, got p = {p}")
    elif law == "n2":
        if q is None:
            out.append("law n2 needs q")
        else:
            if not d < p < 2 * d <= q < INF:
                out.append(f"law n2 needs d < p < 2d <= q < inf, got p = {p}, q = {q}")
            if not d / p + d / q > 1:
                out.append(f"law n2 needs d/p + d/q > 1, got {d / p + d / q:.6g}")
    else:
        out.append(f"unknown product law {law!r}")
    return out


def _time_stack(a_hat, b_hat, times, omega):
    shape = (-1,) + (1,) * a_hat.ndim
    c, s = np.cos(omega * times).reshape(shape), np.sin(omega * times).reshape(shape)
    return c * a_hat[None] + s * b_hat[None]


def check_product_laws(corpus_size: int = 30, p_laws=((0.5, 2.0, 1.0), (1.0, 4.0, 2.0)),
                       n1_ps=(2.0, 3.5), n2_pq=((3.5, 4.0), (3.0, 5.0)),
                       rhos=DEFAULT_RHO, T: float = 1.0, samples: int = 33, seed: int = 0,
                       grid: GridSpec | None = None, bounds=None) -> CheckReport:
    """Product laws in Chemin-Lerner spaces on random time-dependent pairs.

    The first law is tested in the symmetric form
    ``C (||f||_{L^rho1 L^inf} ||g||_{L~^rho2 B^s} + ||g||_{L^rho3 L^inf} ||f||_{L~^rho4 B^s})``.
    The data band is kept below a quarter of the Nyquist frequency so that
    products are exact on the grid and covered by the resolvable shells.

    Raises
    ------
    ExponentConstraintViolated
        If a requested exponent set breaks a law's hypotheses.
    """
    grid = grid or corpus_grid(points=128, periods=2.0)
    bounds = dict(PRODUCT_BOUNDS, **(bounds or {}))
    d = grid.d
    for s, p, r in p_laws:
        _raise(product_law_problems("p", d, p, s=s))
    for p in n1_ps:
        _raise(product_law_problems("n1", d, p))
    for p, q in n2_pq:
        _raise(product_law_problems("n2", d, p, q))
    for rr in rhos:
        if not (_harmonic_ok(rr[0], rr[1], rr[2]) and _harmonic_ok(rr[0], rr[3], rr[4])):
            raise ExponentConstraintViolated(f"time exponents {rr} break 1/rho = 1/rho1 + 1/rho2")
    cutoffs = CutoffProfile()
    rng = np.random.default_rng(seed + 3)
    j_lo, j_hi = resolvable_range(grid)
    shells = list(range(j_lo, j_hi + 1))
    band = (4.0 / 3.0) * 2.0**j_hi / 2.0
    band_shells = [j for j in shells if (8.0 / 3.0) * 2.0**j <= band]
    times = np.linspace(0.0, T, samples)
    ps = sorted({x[1] for x in p_laws} | set(n1_ps) | {x[0] for x in n2_pq}
                | {x[1] for x in n2_pq})
    rep = CheckReport("product_laws")
    worst = {"p": 0.0, "n1": 0.0, "n2": 0.0}

    def draw():
        width = 1 + int(rng.integers(0, 3))
        start = int(rng.integers(band_shells[0], band_shells[-1] - width + 2))
        return random_shell_field(grid, rng, range(start, start + width), cutoffs).spectral

    for i in range(corpus_size):
        omega = 2.0 * np.pi * float(rng.uniform(0.25, 2.0)) / T
        fa, fb, ga, gb = draw(), draw(), draw(), draw()
        if i % 5 == 4:
            # single lowest lattice mode times a shell field
            x1 = grid.coordinates()[0]
            k1 = grid.fundamental[0]
            ga = forward(np.broadcast_to(np.cos(k1 * x1), grid.shape), d)
            gb = forward(np.broadcast_to(np.sin(k1 * x1), grid.shape), d)
        f_st = _time_stack(fa, fb, times, omega)
        g_st = _time_stack(ga, gb, times, omega)
        fg_phys = inverse(f_st, grid) * inverse(g_st, grid)
        fg_st = forward(fg_phys, d)
        tabs = {name: block_lp_table(st, grid, ps, cutoffs, shells)
                for name, st in (("f", f_st), ("g", g_st), ("fg", fg_st))}
        cl = {name: (lambda rho, s, p, r, _t=tab: chemin_lerner_from_table(
            _t[p], shells, times, rho, s, r)) for name, tab in tabs.items()}
        for rho, r1, r2, r3, r4 in rhos:
            f_inf = sup_in_time(f_st, grid, r1, times)
            g_inf = sup_in_time(g_st, grid, r3, times)
            for s, p, r in p_laws:
                lhs = cl["fg"](rho, s, p, r)
                rhs = f_inf * cl["g"](r2, s, p, r) + g_inf * cl["f"](r4, s, p, r)
                rep.add({"law": "p", "index": i, "rho": (rho, r1, r2, r3, r4), "s": s,
                         "p": p, "r": r}, lhs / rhs, bounds["p"])
                worst["p"] = max(worst["p"], lhs / rhs)
            for p in n1_ps:
                sp = d / p - 1.0
                lhs = cl["fg"](rho, sp, p, 1.0)
                rhs = cl["f"](r1, sp, p, 1.0) * cl["g"](r2, d / p, p, 1.0)
                rep.add({"law": "n1", "index": i, "rho": (rho, r1, r2), "p": p},
                        lhs / rhs, bounds["n1"])
                worst["n1"] = max(worst["n1"], lhs / rhs)
            for p, q in n2_pq:
                sp = d / p - 1.0
                lhs = cl["fg"](rho, sp, p, 1.0)
                rhs = cl["f"](r1, sp, p, 1.0) * cl["g"](r2, d / q, q, 1.0)
                rep.add({"law": "n2", "index": i, "rho": (rho, r1, r2), "p": p, "q": q},
                        lhs / rhs, bounds["n2"])
                worst["n2"] = max(worst["n2"], lhs / rhs)
    rep.constants = {f"C_{k}": v for k, v in worst.items()}
    rep.constants.update({f"bound_{k}": v for k, v in bounds.items()})
    rep.notes.append("law p tested in the symmetric (f, g) form")
    return rep


def _raise(problems: list[str]) -> None:
    if problems:
        raise ExponentConstraintViolated("; ".join(problems))
