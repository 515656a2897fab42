"""Heat-flow Duhamel integrals: closed forms and quadratures.

Every quadrature node is carried to the final time by the exact heat
multiplier, so the only approximation is in the time dependence of the
source.  The exponential trapezoid integrates the piecewise-linear
interpolant of a sampled source exactly against the heat kernel; its
weights are written with the functions phi_k(z) = sum_n z^n / (n + k)!.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from chemotaxis_lab.errors import EmptyTrace, NegativeTime
from chemotaxis_lab.spectral_core.grid import Field

_SERIES_TERMS = 24


def phi_functions(z: np.ndarray, orders: int = 3) -> list[np.ndarray]:
    """phi_1 .. phi_orders evaluated at ``z`` (real, non-positive).

    Small |z| uses the Taylor series; elsewhere the recursion
    phi_{k+1} = (phi_k - 1/k!) / z starting from phi_1 = expm1(z) / z.
    """
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1.0
    out = []
    zs = np.where(small, z, 0.0)
    zl = np.where(small, -1.0, z)
    fact = 1.0
    prev = np.expm1(zl) / zl
    for k in range(1, orders + 1):
        # Taylor branch
        coef = 1.0 / np.prod(np.arange(1, k + 1, dtype=float))
        series = np.zeros_like(z)
        term = np.full_like(z, coef)
        for n in range(_SERIES_TERMS):
            series = series + term
            term = term * zs / (n + k + 1)
        if k > 1:
            prev = (prev - fact) / zl
        fact = 1.0 / np.prod(np.arange(1, k + 1, dtype=float))
        out.append(np.where(small, series, prev))
    return out


def duhamel_const_symbol(lam: np.ndarray, t: float) -> np.ndarray:
    """(1 - exp(-t lam)) / lam, equal to t at lam = 0."""
    return t * phi_functions(-t * lam, 1)[0]


def duhamel_const_source(g: Field, t: float) -> Field:
    """int_0^t e^{(t-s) Delta} g ds for a time-independent source ``g``.

    Raises
    ------
    NegativeTime
        If ``t < 0``.
    """
    if t < 0:
        raise NegativeTime(f"t must be >= 0, got {t}")
    sym = duhamel_const_symbol(g.grid.wavenumber_sq(), t)
    return Field(g.grid, spectral=g.spectral * sym, kind=g.kind)


def integrated_const_symbol(lam: np.ndarray, t: float) -> np.ndarray:
    """int_0^t (1 - exp(-s lam)) / lam ds = t^2 phi_2(-t lam)."""
    return t * t * phi_functions(-t * lam, 2)[1]


def gauss_nodes(t0: float, t1: float, nodes: int, panels: int = 1):
    """Composite Gauss-Legendre nodes and weights on [t0, t1]."""
    per = max(1, nodes // panels)
    x, w = np.polynomial.legendre.leggauss(per)
    edges = np.linspace(t0, t1, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    s = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    ws = (half[:, None] * w[None, :]).ravel()
    return s, ws


def duhamel_quadrature(source: Callable[[float], Field] | tuple[Sequence[float], Sequence[Field]],
                       t: float, nodes: int = 64, panels: int = 1,
                       rule: str = "gauss") -> Field:
    """Approximate int_0^t e^{(t-s) Delta} source(s) ds.

    Parameters
    ----------
    source : callable or (times, fields)
        Either a function of time returning a Field, or samples on [0, t].
    t : float
        Final time.
    nodes : int
        Gauss-Legendre node count for callable sources.
    panels : int
        Number of composite panels for callable sources.
    rule : {"gauss", "trapezoid", "exponential"}
        "gauss" needs a callable.  For sampled sources "trapezoid" applies
        trapezoid weights to propagated samples and "exponential" integrates
        the piecewise-linear interpolant exactly.

    Raises
    ------
    EmptyTrace
        If a sampled source has no samples.
    """
    if t < 0:
        raise NegativeTime(f"t must be >= 0, got {t}")
    if callable(source):
        if rule != "gauss":
            raise ValueError("callable sources use rule='gauss'")
        s_nodes, weights = gauss_nodes(0.0, t, nodes, panels)
        acc = None
        for s, w in zip(s_nodes, weights):
            g = source(float(s))
            lam = g.grid.wavenumber_sq()
            term = g.spectral * (w * np.exp(-(t - s) * lam))
            acc = term if acc is None else acc + term
        return Field(g.grid, spectral=acc, kind=g.kind)
    times, fields = source
    times = np.asarray(times, dtype=float)
    if len(fields) == 0:
        raise EmptyTrace("duhamel_quadrature received no source samples")
    if len(fields) != len(times):
        raise ValueError("times and fields lengths differ")
    grid = fields[0].grid
    kind = fields[0].kind
    if len(fields) == 1:
        return Field.zeros(grid, kind)
    lam = grid.wavenumber_sq()
    acc = np.zeros_like(fields[0].spectral)
    if rule == "trapezoid":
        h = np.diff(times)
        w = np.zeros(len(times))
        w[:-1] += 0.5 * h
        w[1:] += 0.5 * h
        for wi, si, fi in zip(w, times, fields):
            acc = acc + fi.spectral * (wi * np.exp(-(t - si) * lam))
        return Field(grid, spectral=acc, kind=kind)
    if rule != "exponential":
        raise ValueError(f"unknown rule {rule!r}")
    for a in range(len(times) - 1):
        h = times[a + 1] - times[a]
        p1, p2 = phi_functions(-h * lam, 2)
        slab = h * ((p1 - p2) * fields[a].spectral + p2 * fields[a + 1].spectral)
        acc = acc * np.exp(-h * lam) + slab
    tail = t - times[-1]
    if tail:
        acc = acc * np.exp(-tail * lam)
    return Field(grid, spectral=acc, kind=kind)
