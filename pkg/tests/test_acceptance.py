"""One test per acceptance criterion, tolerances pinned here rather than read from the checks.

Every test records a PASS/FAIL line that the terminal summary prints. Wall
times are reported next to their budgets; the budgets assume a workstation
and are not asserted.
"""

import math
import time

import pytest

from chemotaxis_lab.verification import run_check
from chemotaxis_lab.verification.construction_checks import check_block_identity
from chemotaxis_lab.verification.experiment import (
    DiscontinuityConfig, run_discontinuity_experiment)
from chemotaxis_lab.verification.families import broken_beta_member

LEMMA_CHECKS = ("bernstein", "embedding", "heat-regularity", "product-laws")


def timed(func, *args, **kwargs):
    t0 = time.perf_counter()
    out = func(*args, **kwargs)
    return out, time.perf_counter() - t0


def values(rep, quantity):
    return [m.lhs for m in rep.measured if m.params.get("quantity") == quantity]


def ratios(rep, quantity):
    return [m.rhs for m in rep.measured if m.params.get("quantity") == quantity]


def clock(seconds, budget):
    return f"{seconds:.0f}s (budget {budget:.0f}s)"


def test_criterion_1_lp_frame(acceptance):
    rep, sec = timed(run_check, "lp-frame", corpus_size=50, points=1024)
    recon = values(rep, "reconstruction")
    resid = values(rep, "partition_residual")
    ok = len(recon) == 50 and max(recon) <= 1e-10 and max(resid) <= 1e-12
    acceptance(1, ok, f"reconstruction {max(recon):.1e} <= 1e-10 on {len(recon)} fields, "
                      f"partition {max(resid):.1e} <= 1e-12, {clock(sec, 60)}")
    assert ok


def test_criterion_2_block_identity(acceptance):
    rep, sec = timed(run_check, "block-identity")
    keep = max(values(rep, "retained_defect"))
    others = max(values(rep, "other_shells"))
    broken = check_block_identity([broken_beta_member()], check_support=False)
    ok = keep <= 1e-8 and others <= 1e-8 and not broken.passed
    acceptance(2, ok, f"retained 1-{keep:.1e}, other shells {others:.1e} (<= 1e-8), "
                      f"broken beta fails: {not broken.passed}, {clock(sec, 60)}")
    assert ok


def test_criterion_3_lemma_corpora(acceptance):
    total, worst, constants = 0.0, math.inf, {}
    reports = {}
    for cid in LEMMA_CHECKS:
        rep, sec = timed(run_check, cid, seed=0)
        total += sec
        reports[cid] = rep
        worst = min(worst, rep.worst_slack)
        constants[cid] = rep.constants.get("C", rep.constants)
    finite = all(math.isfinite(m.lhs) and math.isfinite(m.rhs)
                 for rep in reports.values() for m in rep.measured)
    # determinism: a seeded rerun on a short corpus is byte identical
    same = all(run_check(cid, seed=3, corpus_size=2).to_csv()
               == run_check(cid, seed=3, corpus_size=2).to_csv() for cid in LEMMA_CHECKS)
    ok = worst >= 1.0 and finite and same
    acceptance(3, ok, f"worst slack {worst:.3g} >= 1, finite {finite}, deterministic {same}, "
                      f"{clock(total, 300)}")
    assert ok


def test_criterion_4_duhamel(acceptance):
    rep, sec = timed(run_check, "duhamel", corpus_size=20, nodes=64)
    quad = values(rep, "closed_vs_quadrature")
    semi = values(rep, "heat_semigroup") + values(rep, "duhamel_semigroup")
    n_sources = len({m.params["index"] for m in rep.measured
                     if m.params.get("quantity") == "closed_vs_quadrature"})
    ok = n_sources == 20 and max(quad) <= 1e-10 and max(semi) <= 1e-12
    acceptance(4, ok, f"quadrature {max(quad):.1e} <= 1e-10 on {n_sources} sources, "
                      f"semigroup {max(semi):.1e} <= 1e-12, {clock(sec, 60)}")
    assert ok


def test_criterion_5_lp_scaling(acceptance):
    rep, sec = timed(run_check, "lp-scaling", ps=(2.0, 3.5, 4.0))
    diag = values(rep, "diagonal")
    ps = {m.params["p"] for m in rep.measured if m.params.get("quantity") == "diagonal"}
    decays = ratios(rep, "cross_decay")
    n_doublings = len({m.params["distance"] for m in rep.measured
                       if m.params.get("quantity") == "cross_decay"})
    ok = (ps == {2.0, 3.5, 4.0} and max(diag) <= 0.05 and n_doublings >= 3
          and min(decays) >= 10.0)
    acceptance(5, ok, f"diagonal worst {max(diag):.2%} <= 5%, cross decay min x{min(decays):.3g} "
                      f">= x10 over {n_doublings} doublings, {clock(sec, 300)}")
    assert ok


@pytest.mark.xfail(strict=True, reason="G/H blocks of the split are not small at any "
                                       "resolvable surrogate; see the decisions ledger")
def test_criterion_6_spectral_vanishing(acceptance):
    rep, sec = timed(run_check, "spectral-vanishing")
    g = values(rep, "G_block")
    h = values(rep, "H_block")
    leak = values(rep, "pair_support")
    worst = max(g + h + leak)
    ok = worst <= 1e-8
    acceptance(6, ok, f"G blocks max {max(g):.1e}, H blocks max {max(h) if h else 0:.2g}, "
                      f"pair leak max {max(leak) if leak else 0:.2g} (all <= 1e-8), "
                      f"{clock(sec, 120)}")
    assert ok


def test_criterion_7_k1_k2(acceptance):
    rep, sec = timed(run_check, "k1-k2")
    k1 = values(rep, "K1_vs_oracle")
    ratio = values(rep, "K1_shell_ratio")
    k2 = values(rep, "K2_over_K1")
    ok = bool(k1 and ratio and k2) and max(k1) <= 0.02 and max(ratio) <= 0.02 and max(k2) <= 0.1
    acceptance(7, ok, f"K1 vs oracle {max(k1):.2%} <= 2%, shell ratio {max(ratio):.2%} <= 2%, "
                      f"K2/K1 {max(k2):.3g} <= 0.1, {clock(sec, 120)}")
    assert ok


def test_criterion_8_solver(acceptance):
    rep, sec = timed(run_check, "solver", steps=(16, 32, 64, 128))
    dev = values(rep, "order_deviation")
    resid = values(rep, "v_integral_residual")
    drift = values(rep, "mean_drift")
    halvings = {m.params["integrator"]: 0 for m in rep.measured
                if m.params.get("quantity") == "order_deviation"}
    for m in rep.measured:
        if m.params.get("quantity") == "order_deviation":
            halvings[m.params["integrator"]] += 1
    ok = (max(dev) <= 0.3 and max(resid) <= 1e-10 and max(drift) <= 1e-12
          and min(halvings.values()) >= 3)
    acceptance(8, ok, f"order deviation {max(dev):.3f} <= 0.3 over {min(halvings.values())} "
                      f"halvings, v residual {max(resid):.1e} <= 1e-10, "
                      f"drift {max(drift):.1e} <= 1e-12, {clock(sec, 300)}")
    assert ok


def test_criterion_9_ladder(acceptance):
    rep, sec = timed(run_check, "ladder", scales=(1.0, 0.5, 0.25),
                     epsilons=(1 / 8, 1 / 16, 1 / 32))
    fits = {f.name: f for f in rep.fits}
    order = fits["defect vs amplitude"].slope
    u22 = fits["U22 vs epsilon"].slope
    ok = order >= 1.8 and abs(u22 - 2.0) <= 0.2
    acceptance(9, ok, f"defect order {order:.3f} >= 1.8, U22 eps exponent {u22:.3f} in 2 +- 0.2, "
                      f"{clock(sec, 600)}")
    assert ok


def test_criterion_10_headline(acceptance):
    cfg = DiscontinuityConfig()
    assert (cfg.counts, cfg.r, cfg.epsilon) == ((1, 2, 3, 4), 1.0, 1 / 16)
    rep, sec = timed(run_discontinuity_experiment, cfg)
    inc = rep.included
    du = [r.data_norm_u for r in inc]
    dv = [r.data_norm_v for r in inc]
    decreasing = all(b < a for xs in (du, dv) for a, b in zip(xs, xs[1:]))
    fits = {f.name: f for f in rep.fits}
    eu = fits["data_norm_u vs count"].slope
    ev = fits["data_norm_v vs count"].slope
    sol = [r.solution_norm for r in inc]
    sol_ratio = min(sol) / max(sol)
    rest = [r.ladder_norms["U1_K"] + r.ladder_norms["U3_K"] for r in inc]
    dominance = min(r.ladder_norms["U2_K"] / x if x > 0 else math.inf for r, x in zip(inc, rest))
    ok = (len(inc) == 4 and decreasing and abs(eu + 0.25) <= 0.05 and abs(ev + 0.25) <= 0.05
          and sol_ratio >= 0.5 and dominance >= 5.0)
    acceptance(10, ok, f"data exponents {eu:.3f}/{ev:.3f} in -0.25 +- 0.05, strictly decreasing "
                       f"{decreasing}, solution min/max {sol_ratio:.3f} >= 0.5, U2 dominance "
                       f"x{dominance:.3g} >= x5, {clock(sec, 1800)} at "
                       f"{cfg.points}^2")
    assert ok
