"""Chemin-Lerner bookkeeping of the ladder and the inequality table.

Block norms of every field entering the U3 estimates are sampled at each
time node while the ladder is built; Chemin-Lerner norms are assembled from
those samples afterwards.  Each row of the table compares a left side with
the right side of an estimate (without its constant); ``constant`` is
lhs / rhs and ``slack`` its inverse.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from chemotaxis_lab.evolution.ladder import LadderBuilder, PerturbationLadder, RungState
from chemotaxis_lab.spectral_core.cutoffs import CutoffProfile
from chemotaxis_lab.spectral_core.grid import GridSpec, inverse
from chemotaxis_lab.spectral_core.littlewood_paley import block_symbol, resolvable_range
from chemotaxis_lab.spectral_core.norms import aggregate_lr, lp_of_samples, time_lp


def critical_exponents(d: int) -> tuple[float, float]:
    """(p0, q0): p0 = 7/2 for d = 2 and 2d - 1 for d >= 3; q0 = 2d."""
    p0 = 3.5 if d == 2 else 2.0 * d - 1.0
    return p0, 2.0 * d


def block_table(spec: np.ndarray, grid: GridSpec, ps, cutoffs: CutoffProfile,
                shells, skip_tol: float = 1e-28) -> dict:
    """L^p norms of each dyadic block for several p from one inverse FFT.

    Blocks whose spectral energy is below ``skip_tol`` times the total are
    recorded as zero without being transformed.
    """
    w = grid.parseval_weights()
    power = w * (spec.real**2 + spec.imag**2)
    if power.ndim > grid.d:
        power = power.sum(axis=0)
    total = float(power.sum())
    out = {p: {} for p in ps}
    for j in shells:
        sym = block_symbol(grid, j, cutoffs)
        if total == 0.0 or float(np.sum(power * sym**2)) <= skip_tol * total:
            for p in ps:
                out[p][j] = 0.0
            continue
        phys = inverse(spec * sym, grid)
        phys = np.sqrt(np.sum(phys**2, axis=0)) if phys.ndim > grid.d else np.abs(phys)
        for p in ps:
            out[p][j] = lp_of_samples(phys, p, grid.cell_volume)
    return out


@dataclass
class BlockSamples:
    """Per-time block norm tables of named fields."""

    times: list = dc_field(default_factory=list)
    tables: dict = dc_field(default_factory=dict)
    sup: dict = dc_field(default_factory=dict)

    def chemin_lerner(self, name: str, rho: float, s: float, p: float, r: float = 1.0) -> float:
        rows = self.tables[name]
        shells = sorted(rows[0][p])
        times = np.asarray(self.times)
        vals = []
        for j in shells:
            samples = np.array([row[p][j] for row in rows])
            vals.append(2.0 ** (s * j) * time_lp(samples, times, rho))
        return aggregate_lr(vals, r)

    def besov_at(self, name: str, index: int, s: float, p: float, r: float = 1.0) -> float:
        row = self.tables[name][index][p]
        return aggregate_lr([2.0 ** (s * j) * v for j, v in sorted(row.items())], r)


class LedgerObserver:
    """Samples block norms of the ladder fields at every time node."""

    SCALARS = ("U1", "U2", "U3")
    VECTORS = ("V1", "V2", "V3")
    PRODUCTS = ("U1V1", "U3V3", "U2V12", "U1V2", "U3V12", "V3U12", "F")

    def __init__(self, builder: LadderBuilder, cutoffs: CutoffProfile | None = None,
                 shells=None):
        self.b = builder
        self.grid = builder.grid
        self.cutoffs = cutoffs or CutoffProfile()
        d = self.grid.d
        self.p0, self.q0 = critical_exponents(d)
        if shells is None:
            lo, hi = resolvable_range(self.grid)
            shells = range(lo, hi + 1)
        self.shells = list(shells)
        self.samples = BlockSamples()
        self.data = {}

    def __call__(self, t: float, cur: dict):
        op = self.b.op
        grad = op.grad_spectral
        u1 = cur["U1"].U
        u2 = cur["U21"].U + cur["U22"].U
        u3 = cur["U3"].U
        v1 = self.b.v0.spectral + grad(cur["U1"].I)
        v2 = grad(cur["U21"].I + cur["U22"].I)
        v3 = grad(cur["U3"].I)
        spec = {"U1": u1, "U2": u2, "U3": u3, "V1": v1, "V2": v2, "V3": v3}
        phys = {k: op.to_physical(v) for k, v in spec.items()}
        prods = {
            "U1V1": phys["U1"][None] * phys["V1"],
            "U3V3": phys["U3"][None] * phys["V3"],
            "U2V12": phys["U2"][None] * (phys["V1"] + phys["V2"]),
            "U1V2": phys["U1"][None] * phys["V2"],
            "U3V12": phys["U3"][None] * (phys["V1"] + phys["V2"]),
            "V3U12": (phys["U1"] + phys["U2"])[None] * phys["V3"],
        }
        prods["F"] = (prods["U3V3"] + prods["U3V12"] + prods["V3U12"] + prods["U1V2"]
                      + prods["U2V12"])
        for k, v in prods.items():
            spec[k] = op.to_spectral(v)
        # the V1 + V2 and U1 + U2 combinations enter through their own norms
        spec["V12"] = v1 + v2
        spec["U12"] = u1 + u2
        ps = (self.p0, self.q0)
        self.samples.times.append(t)
        for k, v in spec.items():
            self.samples.tables.setdefault(k, []).append(
                block_table(v, self.grid, ps, self.cutoffs, self.shells))
        for k in ("U1", "V1"):
            arr = phys[k]
            top = float(np.max(np.sqrt(np.sum(arr**2, axis=0)) if arr.ndim > self.grid.d
                               else np.abs(arr)))
            self.samples.sup[k] = max(self.samples.sup.get(k, 0.0), top)
        if t == 0.0:
            self.data["v0"] = block_table(self.b.v0.spectral, self.grid, ps, self.cutoffs,
                                          self.shells)
        return None


@dataclass
class LedgerRow:
    name: str
    lhs: float
    rhs: float
    exact: bool = False

    @property
    def constant(self) -> float:
        if self.rhs == 0.0:
            return 0.0 if self.lhs == 0.0 else math.inf
        return self.lhs / self.rhs

    @property
    def slack(self) -> float:
        if self.lhs == 0.0:
            return math.inf
        return self.rhs / self.lhs


@dataclass
class NormLedger:
    """X_T, Y_T and the inequality rows of the U3 bootstrap."""

    p0: float
    q0: float
    T: float
    X_T: float
    Y_T: float
    rows: list
    norms: dict

    def row(self, name: str) -> LedgerRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row", "lhs", "rhs", "constant", "slack", "exact"])
        for r in self.rows:
            w.writerow([r.name, repr(r.lhs), repr(r.rhs), repr(r.constant), repr(r.slack),
                        int(r.exact)])
        return buf.getvalue()


def ladder_norm_ledger(observer: LedgerObserver, m: int, count: int, r: float,
                       T: float | None = None) -> NormLedger:
    """Assemble the ledger from the samples of a :class:`LedgerObserver`.

    Parameters
    ----------
    observer : LedgerObserver
        Observer passed to the ladder build.
    m : int
        Base frequency exponent of the data.
    count : int
        Number of atoms, the finite stand-in for the asymptotic parameter.
    r : float
        Summation exponent of the data space.
    T : float, optional
        Horizon; defaults to the last sample time.
    """
    S = observer.samples
    d = observer.grid.d
    p0, q0 = observer.p0, observer.q0
    sa, sb, sc, sq = d / p0 - 2.0, d / p0, d / p0 - 1.0, d / q0
    T = S.times[-1] if T is None else T
    cl = S.chemin_lerner
    n = {}
    for k in ("U1", "U2", "U3"):
        n[f"{k}|inf|sa"] = cl(k, math.inf, sa, p0)
        n[f"{k}|1|sb"] = cl(k, 1.0, sb, p0)
        n[f"{k}|1|sq"] = cl(k, 1.0, sq, q0)
    n["U3|2|sc"] = cl("U3", 2.0, sc, p0)
    n["U1|inf|-3/2"] = cl("U1", math.inf, -1.5, q0)
    n["U1|1|1/2"] = cl("U1", 1.0, 0.5, q0)
    n["U1|1|3/2"] = cl("U1", 1.0, 1.5, q0)
    for k in ("V1", "V2", "V3"):
        n[f"{k}|inf|sc"] = cl(k, math.inf, sc, p0)
        n[f"{k}|2|sq"] = cl(k, 2.0, sq, q0)
    n["V1|1|sb"] = cl("V1", 1.0, sb, p0)
    n["V12|2|sq"] = cl("V12", 2.0, sq, q0)
    n["U12|1|sq"] = cl("U12", 1.0, sq, q0)
    for k in ("U1V1", "U3V3", "U2V12", "U1V2", "U3V12", "V3U12", "F"):
        n[f"{k}|1|sc"] = cl(k, 1.0, sc, p0)
    n["U1V1|1|sb"] = cl("U1V1", 1.0, sb, p0)
    v0 = observer.data["v0"]
    n["v0|sc"] = aggregate_lr([2.0 ** (sc * j) * x for j, x in sorted(v0[p0].items())], 1.0)
    n["v0|1/2"] = aggregate_lr([2.0 ** (0.5 * j) * x for j, x in sorted(v0[q0].items())], 1.0)
    n["U1|LinfLinf"] = S.sup["U1"]
    n["V1|LinfLinf"] = S.sup["V1"]
    X = n["U3|inf|sa"] + n["U3|1|sb"]
    Y = n["V3|inf|sc"]
    v12_inf = n["V1|inf|sc"] + n["V2|inf|sc"]
    v12_2q = n["V1|2|sq"] + n["V2|2|sq"]
    u12_1q = n["U1|1|sq"] + n["U2|1|sq"]
    A = u12_1q + v12_2q
    big = 2.0 ** m
    rows = [
        LedgerRow("u1_p0", n["U1|inf|sa"] + n["U1|1|sb"],
                  big ** (3 * d / (4 * p0) - 3 / 8) * count ** (1 / p0 - 1 / (2 * r))),
        LedgerRow("u1_2d", n["U1|inf|-3/2"] + n["U1|1|1/2"],
                  count ** (1 / (2 * d) - 1 / (2 * r))),
        LedgerRow("v1_p0", n["V1|inf|sc"], n["v0|sc"] + n["U1|1|sb"]),
        LedgerRow("v1_2d", n["V1|2|sq"], math.sqrt(T) * (n["v0|1/2"] + n["U1|1|3/2"])),
        LedgerRow("u2_heat", n["U2|inf|sa"], n["U1V1|1|sc"]),
        LedgerRow("u2_product", n["U1V1|1|sc"], n["U1|1|sb"] * n["V1|inf|sc"]),
        LedgerRow("u2_p0", n["U2|1|sb"] + n["V2|inf|sc"],
                  math.sqrt(T) * (n["U1|LinfLinf"] * n["V1|1|sb"]
                                  + n["V1|LinfLinf"] * n["U1|1|sb"])),
        LedgerRow("v2_q0", n["U2|1|sq"] + n["V2|2|sq"],
                  big ** (-0.25) * count ** (1 / q0 - 1 / (2 * r) - 0.5)),
        LedgerRow("Y_T", Y, X),
        LedgerRow("l1", X, n["F|1|sc"]),
        LedgerRow("j1", n["U3V3|1|sc"], n["U3|1|sb"] * Y),
        LedgerRow("j2", n["U2V12|1|sc"], n["U2|1|sb"] * v12_inf),
        LedgerRow("j3", n["U1V2|1|sc"], n["U1|1|sb"] * n["V2|inf|sc"]),
        LedgerRow("j4", n["U3V12|1|sc"], n["U3|2|sc"] * v12_2q),
        LedgerRow("j4_interpolation", n["U3|2|sc"],
                  math.sqrt(n["U3|inf|sa"] * n["U3|1|sb"]), exact=True),
        LedgerRow("j5", n["V3U12|1|sc"], Y * u12_1q),
        LedgerRow("j6", X, X * X + X * A + n["U2|1|sb"] * v12_inf
                  + n["U1|1|sb"] * n["V2|inf|sc"]),
        LedgerRow("X_T_bound", X, big ** (3 * d / (2 * p0) - 1) * count ** (2 / p0)),
    ]
    return NormLedger(p0, q0, T, X, Y, rows, n)
