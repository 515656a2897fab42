"""Norm-inflation experiment over the number of scales and over epsilon."""

from __future__ import annotations

import gc
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from chemotaxis_lab.construction.family import build_initial_data
from chemotaxis_lab.errors import NonContraction
from chemotaxis_lab.evolution.ladder import build_ladder
from chemotaxis_lab.evolution.solver import SolverConfig, TimeGrid, solve_chemotaxis
from chemotaxis_lab.spectral_core.cutoffs import CutoffProfile
from chemotaxis_lab.spectral_core.grid import Field
from chemotaxis_lab.spectral_core.norms import BesovParams, besov_norm
from chemotaxis_lab.verification.families import FamilyMember, headline_member, member
from chemotaxis_lab.verification.report import ExperimentReport, RunRecord, fit_exponent


@dataclass
class DiscontinuityConfig:
    """Knobs of the experiment.

    The count sweep uses ``headline_member`` (shells ending at ``m - 2``);
    the epsilon sweep uses a cheaper two-scale member.
    """

    counts: tuple = (1, 2, 3, 4)
    m: int = 10
    points: int = 4096
    r: float = 1.0
    epsilon: float = 1.0 / 16.0
    steps: int = 8
    eps_sweep: tuple = (1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0)
    eps_m: int = 7
    eps_K: tuple = (4, 5)
    eps_points: int = 1024
    gate: float = 0.05
    exponent_band: float = 0.05
    min_ratio: float = 0.5
    dominance: float = 5.0
    halving: tuple = (0.4, 0.6)
    u22_target: float = 2.0
    u22_band: float = 0.2
    workers: int = 1
    solver: SolverConfig = field(default_factory=SolverConfig)

    @property
    def data_exponent(self) -> float:
        # the data norm of |K| scales behaves like |K|^{1/p - 1/(2r)} with p = 2d = 4
        return 1.0 / 4.0 - 1.0 / (2.0 * self.r)


def run_member(mem: FamilyMember, epsilon: float, steps: int, cfg: SolverConfig,
               gate: float = 0.05) -> RunRecord:
    """Solver and ladder for one family member at time ``epsilon 2^{-2m}``."""
    cutoffs = CutoffProfile()
    params = mem.params
    pair = build_initial_data(params, mem.spec, mem.grid, cutoffs)
    norms = dict(pair.norms)
    # spectral-only copies; f and cached samples are dropped to save memory
    u0 = Field(mem.grid, spectral=pair.u0.spectral)
    v0 = Field(mem.grid, spectral=pair.v0.spectral, kind="vector")
    del pair
    gc.collect()
    bp = BesovParams(-1.5, 2.0 * params.d, params.r)
    K = list(params.K)
    tg = TimeGrid.from_epsilon(epsilon, params.m, steps=steps)
    record = RunRecord(mem.describe(), float(epsilon), norms["u0"], norms["v0"], 0.0, 0.0)
    # ladder first, so that it never coexists with the solver state
    try:
        lad = build_ladder(u0, v0, tg, cfg, store="final")
    except NonContraction as exc:
        record.excluded = f"non-contraction: {exc}"
        lad = None
    if lad is not None:
        record.ladder_norms["picard_iterations"] = int(max(lad.picard_iterations))
        for name in ("U1", "U21", "U22", "U3", "U2"):
            fld = lad.U2() if name == "U2" else lad.U(name)
            record.ladder_norms[name] = besov_norm(fld, bp, cutoffs)
            record.ladder_norms[name + "_K"] = besov_norm(fld, bp, cutoffs, shells=K)
            if name == "U21":
                u21_l2 = fld.l2_norm()
            del fld
        record.u21_shell_norm = record.ladder_norms["U21_K"]
        u_lad = lad.u()
        del lad
        gc.collect()
        record.ladder_norms["ladder_u_K"] = besov_norm(u_lad, bp, cutoffs, shells=K)
    trace = solve_chemotaxis(u0, v0, tg, cfg)
    u_sol = Field(mem.grid, spectral=trace.final_u.spectral)
    del trace, u0, v0
    gc.collect()
    record.solution_norm = besov_norm(u_sol, bp, cutoffs)
    record.ladder_norms["solution_K"] = besov_norm(u_sol, bp, cutoffs, shells=K)
    if record.excluded:
        return record
    record.defect = (u_sol - u_lad).l2_norm() / u21_l2
    if record.defect > gate:
        record.excluded = f"defect {record.defect:.3g} exceeds gate {gate:g}"
    return record


def _count_job(args):
    count, cfg = args
    mem = headline_member(count, m=cfg.m, points=cfg.points, r=cfg.r)
    return run_member(mem, cfg.epsilon, cfg.steps, cfg.solver, cfg.gate)


def _eps_job(args):
    eps, cfg = args
    mem = member(cfg.eps_m, cfg.eps_K, cfg.eps_points, r=cfg.r)
    return run_member(mem, eps, cfg.steps, cfg.solver, cfg.gate)


def _map(func, jobs, workers: int):
    if workers <= 1:
        return [func(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, jobs))


def _audit(rep: ExperimentReport, rec: RunRecord, dominance: float, sweep: str) -> None:
    ln = rec.ladder_norms
    tag = {"sweep": sweep, "K": rec.params["K"], "epsilon": rec.epsilon}
    rep.add(dict(tag, quantity="U2_K dominates U1_K + U3_K"),
            dominance * (ln["U1_K"] + ln["U3_K"]), ln["U2_K"])
    rep.add(dict(tag, quantity="lower bound below ladder u_K"),
            rec.lower_bound, ln["ladder_u_K"] * (1.0 + 1e-9))


def run_discontinuity_experiment(cfg: DiscontinuityConfig | None = None,
                                 with_epsilon_sweep: bool = True) -> ExperimentReport:
    """Count sweep at fixed epsilon plus the epsilon sweep.

    Conditions checked: strictly decreasing data norms with the expected
    power law, solution norms stable within ``min_ratio``, the triangle
    audit, and the epsilon-linearity of the lower bound with the eps^2 law
    of U22.
    """
    cfg = cfg or DiscontinuityConfig()
    rep = ExperimentReport()
    rep.records = _map(_count_job, [(c, cfg) for c in cfg.counts], cfg.workers)
    inc = rep.included
    counts = [len(r.params["K"]) for r in inc]
    for a in range(len(inc) - 1):
        for key in ("data_norm_u", "data_norm_v"):
            rep.add({"quantity": f"{key} strictly decreasing", "count": counts[a + 1]},
                    getattr(inc[a + 1], key), getattr(inc[a], key) * (1.0 - 1e-9))
    if len(inc) >= 3:
        rep.fits.append(fit_exponent("data_norm_u vs count", counts,
                                     [r.data_norm_u for r in inc],
                                     target=cfg.data_exponent, band=cfg.exponent_band))
        rep.fits.append(fit_exponent("data_norm_v vs count", counts,
                                     [r.data_norm_v for r in inc],
                                     target=cfg.data_exponent, band=cfg.exponent_band))
    if inc:
        sol = [r.solution_norm for r in inc]
        lows = [r.lower_bound for r in inc]
        rep.add({"quantity": "solution norm min/max"}, cfg.min_ratio * max(sol), min(sol))
        rep.add({"quantity": "lower bound min/max"}, cfg.min_ratio * max(lows), min(lows))
        rep.constants["solution_ratio"] = min(sol) / max(sol)
        rep.constants["lower_bound_ratio"] = min(lows) / max(lows)
    for rec in inc:
        _audit(rep, rec, cfg.dominance, "count")
    if with_epsilon_sweep:
        rep.epsilon_records = _map(_eps_job, [(e, cfg) for e in cfg.eps_sweep], cfg.workers)
        eps_inc = [r for r in rep.epsilon_records if not r.excluded]
        for rec in eps_inc:
            _audit(rep, rec, cfg.dominance, "epsilon")
        for a in range(len(eps_inc) - 1):
            hi, lo = eps_inc[a], eps_inc[a + 1]
            ratio = lo.lower_bound / hi.lower_bound
            tag = {"quantity": "lower bound halving ratio", "epsilon": lo.epsilon}
            rep.add(tag, cfg.halving[0], ratio)
            rep.add(tag, ratio, cfg.halving[1])
            rep.constants[f"halving_ratio_{lo.epsilon:g}"] = ratio
        if len(eps_inc) >= 3:
            rep.fits.append(fit_exponent("U22 vs epsilon", [r.epsilon for r in eps_inc],
                                         [r.ladder_norms["U22"] for r in eps_inc],
                                         target=cfg.u22_target, band=cfg.u22_band))
    excluded = [r for r in rep.records + rep.epsilon_records if r.excluded]
    for r in excluded:
        rep.notes.append(f"excluded {r.params['K']} eps={r.epsilon:g}: {r.excluded}")
    return rep
