"""Command dispatch for the batch front end."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from chemotaxis_lab.cli.config import ExperimentConfig
from chemotaxis_lab.cli.emit import TableReport, emit_report, versions
from chemotaxis_lab.construction.design import design_grid
from chemotaxis_lab.construction.family import (
    build_initial_data, lattice_alignment_error, separation_table)
from chemotaxis_lab.evolution.solver import SolverConfig, TimeGrid, solve_chemotaxis
from chemotaxis_lab.errors import ChemotaxisLabError
from chemotaxis_lab.spectral_core.cutoffs import CutoffProfile
from chemotaxis_lab.spectral_core.grid import GridSpec, load_field, save_field
from chemotaxis_lab.spectral_core.littlewood_paley import (
    decompose, partition_residual, resolvable_range)
from chemotaxis_lab.spectral_core.norms import BesovParams, besov_norm, lebesgue_norm
from chemotaxis_lab.verification import CHECKS, run_check
from chemotaxis_lab.verification.experiment import (
    DiscontinuityConfig, run_discontinuity_experiment, run_member)
from chemotaxis_lab.verification.families import FamilyMember

COMMANDS = ("construct", "norm", "decompose", "evolve", "ladder", "verify", "experiment",
            "sweep")
OUT_ENV = "CHEMOTAXIS_LAB_OUT"

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


@dataclass
class Flags:
    """Command line overrides; ``None`` means "use the config"."""

    seed: int | None = None
    workers: int = 1
    out: str | None = None
    formats: tuple | None = None
    check_id: str | None = None
    input: str | None = None


@dataclass
class CommandResult:
    status: int
    reports: list = field(default_factory=list)
    files: list = field(default_factory=list)


def output_root(cfg: ExperimentConfig, flags: Flags) -> Path:
    """--out, then the environment variable, then the config."""
    return Path(flags.out or os.environ.get(OUT_ENV) or cfg["output"]["directory"])


def _formats(cfg: ExperimentConfig, flags: Flags) -> tuple:
    return tuple(flags.formats or cfg["output"]["formats"])


def _seed(cfg: ExperimentConfig, flags: Flags) -> int:
    return int(cfg["checks"]["seed"] if flags.seed is None else flags.seed)


class UsageError(ChemotaxisLabError):
    """Unknown command or check id."""


def _lebesgue(p) -> float:
    return np.inf if p == "inf" else float(p)


def _pname(p) -> str:
    return "inf" if p == "inf" else f"{float(p):g}"


def _solver_config(cfg: ExperimentConfig) -> SolverConfig:
    s = cfg["solver"]
    return SolverConfig(dealias_fraction=float(s["dealias_fraction"]),
                        time_integrator=s["integrator"])


def make_member(cfg: ExperimentConfig, K=None, m=None, points=None) -> FamilyMember:
    """Family member described by the construction and grid blocks."""
    params = cfg.construction_params(K=K, m=m)
    spec = cfg.atom_spec()
    g = cfg["grid"]
    points = int(g["points_per_axis"] if points is None else points)
    if g["box_length"] == "auto":
        grid = design_grid(params, spec, points)
    else:
        grid = GridSpec(params.d, points, g["box_length"])
    return FamilyMember(params, spec, grid)


def sweep_members(cfg: ExperimentConfig) -> list[FamilyMember]:
    """Members over ``count_sweep`` or ``m_sweep``, else the single configured member."""
    c = cfg["construction"]
    if c["count_sweep"]:
        m = int(c["m"])
        return [make_member(cfg, K=range(m - 1 - n, m - 1)) for n in c["count_sweep"]]
    if c["m_sweep"]:
        return [make_member(cfg, m=int(m)) for m in c["m_sweep"]]
    return [make_member(cfg)]


def _manifest(name: str, cfg: ExperimentConfig, flags: Flags, **extra) -> dict:
    return dict({"command": name, "config_sha256": cfg.digest(), "config": cfg.data,
                 "config_source": cfg.source, "seed": _seed(cfg, flags),
                 "workers": flags.workers, "versions": versions()}, **extra)


def _emit(name, report, cfg, flags, out: Path, **extra) -> list:
    manifest = _manifest(name, cfg, flags, verdict=report.verdict, **extra)
    return emit_report(report, _formats(cfg, flags), out, manifest)


# ------------------------------------------------------------------ commands

def cmd_construct(cfg: ExperimentConfig, flags: Flags, out: Path):
    mem = make_member(cfg)
    pair = build_initial_data(mem.params, mem.spec, mem.grid)
    rows = [{"k_a": a, "k_b": b, "separation": s}
            for a, b, s in separation_table(mem.params, mem.grid)]
    constants = {"data_norm_u": pair.norms["u0"], "data_norm_v": pair.norms["v0"],
                 "lattice_alignment_error": lattice_alignment_error(mem.params, mem.grid),
                 "box_length": list(mem.grid.box_length), "points": mem.grid.points_per_axis}
    rep = TableReport("construct", rows, constants)
    fields = out / "fields"
    fields.mkdir(parents=True, exist_ok=True)
    for name in ("f", "u0", "v0"):
        save_field(fields / f"{name}.npz", getattr(pair, name))
    return rep, _emit("construct", rep, cfg, flags, out, fields=["f.npz", "u0.npz", "v0.npz"])


def _input_field(cfg: ExperimentConfig, flags: Flags):
    if flags.input:
        return load_field(flags.input)
    mem = make_member(cfg)
    return build_initial_data(mem.params, mem.spec, mem.grid, with_norms=False).u0


def cmd_norm(cfg: ExperimentConfig, flags: Flags, out: Path):
    f = _input_field(cfg, flags)
    cutoffs = CutoffProfile()
    a = cfg["analysis"]
    rows = []
    for s, p, r in a["besov"]:
        bp = BesovParams(float(s), _lebesgue(p), _lebesgue(r))
        rows.append({"norm": "besov", "s": float(s), "p": _pname(p), "r": _pname(r),
                     "value": besov_norm(f, bp, cutoffs, shells=a["shells"])})
    for p in a["lebesgue"]:
        rows.append({"norm": "lebesgue", "s": "", "p": _pname(p), "r": "",
                     "value": lebesgue_norm(f, _lebesgue(p))})
    rep = TableReport("norm", rows, {"input": flags.input or "constructed u0"})
    return rep, _emit("norm", rep, cfg, flags, out, input=flags.input)


def cmd_decompose(cfg: ExperimentConfig, flags: Flags, out: Path):
    f = _input_field(cfg, flags)
    cutoffs = CutoffProfile()
    shells = cfg["analysis"]["shells"]
    j_range = (min(shells), max(shells)) if shells else None
    dec = decompose(f, cutoffs, j_range)
    fractions = dec.mass_fractions()
    rows = []
    for j, block in dec.blocks.items():
        row = {"shell": j, "mass_fraction": fractions[j]}
        for p in cfg["analysis"]["lebesgue"]:
            row[f"L{_pname(p)}"] = lebesgue_norm(block, _lebesgue(p))
        rows.append(row)
    recon = (dec.reconstruct() - f).l2_norm() / f.l2_norm() if f.l2_norm() else 0.0
    rng = j_range or resolvable_range(f.grid)
    constants = {"truncation_residual": dec.truncation_residual,
                 "reconstruction_error": recon, "shell_range": list(rng),
                 "partition_residual": partition_residual(f.grid, cutoffs, rng)}
    series = {"block L2 vs shell": (list(dec.blocks), [r["L2"] for r in rows])} \
        if rows and "L2" in rows[0] else {}
    rep = TableReport("decompose", rows, constants, series)
    return rep, _emit("decompose", rep, cfg, flags, out, input=flags.input)


def cmd_evolve(cfg: ExperimentConfig, flags: Flags, out: Path):
    mem = make_member(cfg)
    pair = build_initial_data(mem.params, mem.spec, mem.grid, with_norms=False)
    scfg = _solver_config(cfg)
    cutoffs = CutoffProfile()
    bp = BesovParams(-1.5, 2.0 * mem.params.d, mem.params.r)
    rows = []
    fields = out / "fields"
    fields.mkdir(parents=True, exist_ok=True)
    for eps in cfg["solver"]["epsilon"]:
        tg = TimeGrid.from_epsilon(float(eps), mem.params.m, steps=int(cfg["solver"]["steps"]))
        tr = solve_chemotaxis(pair.u0, pair.v0, tg, scfg)
        rows.append({"epsilon": float(eps), "T": tg.T_final, "steps": tg.steps,
                     "solution_norm": besov_norm(tr.final_u, bp, cutoffs),
                     "sup_u": lebesgue_norm(tr.final_u, np.inf),
                     "v_integral_residual": tr.v_integral_residual,
                     "mean_drift": tr.mean_drift()})
        save_field(fields / f"u_eps_{float(eps):g}.npz", tr.final_u)
    rep = TableReport("evolve", rows, {"member": mem.describe()})
    return rep, _emit("evolve", rep, cfg, flags, out)


def _member_job(args):
    mem, eps, steps, scfg, gate = args
    return run_member(mem, eps, steps, scfg, gate)


def _run_members(jobs, workers: int):
    # each worker returns its record; the merge below is single-threaded
    if workers <= 1:
        return [_member_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_member_job, jobs))


def _records_report(name, records, constants=None) -> TableReport:
    rows = [r.row() for r in records]
    for row, rec in zip(rows, records):
        row["lower_bound"] = rec.lower_bound if "U2_K" in rec.ladder_norms else float("nan")
    return TableReport(name, rows, constants or {}, passed=not any(r.excluded for r in records))


def cmd_ladder(cfg: ExperimentConfig, flags: Flags, out: Path):
    mem = make_member(cfg)
    s = cfg["solver"]
    gate = float(cfg["experiment"]["gate"])
    jobs = [(mem, float(e), int(s["steps"]), _solver_config(cfg), gate) for e in s["epsilon"]]
    rep = _records_report("ladder", _run_members(jobs, flags.workers),
                          {"member": mem.describe(), "gate": gate})
    return rep, _emit("ladder", rep, cfg, flags, out)


def cmd_sweep(cfg: ExperimentConfig, flags: Flags, out: Path):
    s = cfg["solver"]
    gate = float(cfg["experiment"]["gate"])
    jobs = [(mem, float(e), int(s["steps"]), _solver_config(cfg), gate)
            for mem in sweep_members(cfg) for e in s["epsilon"]]
    records = _run_members(jobs, flags.workers)
    rep = _records_report("sweep", records, {"gate": gate})
    counts = [len(r.params["K"]) for r in records]
    rep.series_data = {"data_norm vs count": (counts, [r.data_norm_u for r in records]),
                       "solution_norm vs count": (counts, [r.solution_norm for r in records])}
    return rep, _emit("sweep", rep, cfg, flags, out)


def experiment_config(cfg: ExperimentConfig, workers: int = 1) -> DiscontinuityConfig:
    e = cfg["experiment"]
    em = e["epsilon_member"]
    return DiscontinuityConfig(
        counts=tuple(int(c) for c in e["counts"]), m=int(e["m"]),
        points=int(e["points_per_axis"]), r=float(e["r"]), epsilon=float(e["epsilon"]),
        steps=int(cfg["solver"]["steps"]), eps_sweep=tuple(float(x) for x in e["epsilon_sweep"]),
        eps_m=int(em["m"]), eps_K=tuple(em["K"]), eps_points=int(em["points_per_axis"]),
        gate=float(e["gate"]), workers=workers, solver=_solver_config(cfg))


def cmd_experiment(cfg: ExperimentConfig, flags: Flags, out: Path):
    rep = run_discontinuity_experiment(experiment_config(cfg, flags.workers))
    return rep, _emit("experiment", rep, cfg, flags, out)


def enabled_checks(cfg: ExperimentConfig) -> list[str]:
    enabled = cfg["checks"]["enabled"]
    return list(CHECKS) if enabled == "all" else list(enabled)


def cmd_verify(cfg: ExperimentConfig, flags: Flags, out: Path):
    """One check, or every enabled check with ``all``; each gets its own directory."""
    ids = enabled_checks(cfg) if flags.check_id == "all" else [flags.check_id]
    unknown = [c for c in ids if c not in CHECKS]
    if unknown:
        raise UsageError(f"unknown check id(s) {unknown}; known: {', '.join(CHECKS)}")
    seed = _seed(cfg, flags)
    reports, files = [], []
    for cid in ids:
        rep = run_check(cid, seed=seed, corpus_size=cfg["checks"]["corpus_sizes"].get(cid))
        target = out / cid if len(ids) > 1 else out
        files += _emit(f"verify {cid}", rep, cfg, flags, target, check_id=cid)
        reports.append(rep)
    return reports, files


HANDLERS = {"construct": cmd_construct, "norm": cmd_norm, "decompose": cmd_decompose,
            "evolve": cmd_evolve, "ladder": cmd_ladder, "verify": cmd_verify,
            "experiment": cmd_experiment, "sweep": cmd_sweep}


def run_command(name: str, cfg: ExperimentConfig, flags: Flags | None = None) -> CommandResult:
    """Run a command and write its artifacts.

    Parameters
    ----------
    name : str
        One of :data:`COMMANDS`.
    cfg : ExperimentConfig
        Validated configuration.
    flags : Flags, optional
        Command line overrides.

    Returns
    -------
    CommandResult
        Exit status 0 when every report passes, else 1, with the reports
        and written files.

    Raises
    ------
    UsageError
        For an unknown command or check id.
    """
    flags = flags or Flags()
    if name not in HANDLERS:
        raise UsageError(f"unknown command {name!r}; known: {', '.join(COMMANDS)}")
    if name == "verify" and not flags.check_id:
        raise UsageError("verify needs a check id or 'all'")
    out = output_root(cfg, flags) / name
    if name == "verify" and flags.check_id != "all":
        out = out / flags.check_id
    reports, files = HANDLERS[name](cfg, flags, out)
    reports = reports if isinstance(reports, list) else [reports]
    status = EXIT_PASS if all(r.passed for r in reports) else EXIT_FAIL
    return CommandResult(status, reports, files)
