"""Numerical checkers for the estimates behind the construction, and the headline experiment."""

from __future__ import annotations

import inspect

from chemotaxis_lab.verification.construction_checks import (
    check_block_identity, check_k1_k2, check_lp_scaling, check_spectral_vanishing)
from chemotaxis_lab.verification.evolution_checks import (
    check_duhamel, check_ladder, check_lp_frame, check_solver)
from chemotaxis_lab.verification.experiment import (
    DiscontinuityConfig, run_discontinuity_experiment, run_member)
from chemotaxis_lab.verification.lemmas import (
    check_bernstein, check_embedding, check_heat_regularity, check_product_laws)
from chemotaxis_lab.verification.report import (
    CheckReport, ExperimentReport, ExponentFit, Measurement, RunRecord, fit_exponent)

CHECKS = {
    "bernstein": check_bernstein,
    "embedding": check_embedding,
    "heat-regularity": check_heat_regularity,
    "product-laws": check_product_laws,
    "block-identity": check_block_identity,
    "lp-scaling": check_lp_scaling,
    "spectral-vanishing": check_spectral_vanishing,
    "k1-k2": check_k1_k2,
    "lp-frame": check_lp_frame,
    "duhamel": check_duhamel,
    "solver": check_solver,
    "ladder": check_ladder,
}


def run_check(check_id: str, **options) -> CheckReport:
    """Run a registered check, forwarding only the options it accepts.

    Raises
    ------
    KeyError
        For an unknown check id.
    """
    func = CHECKS[check_id]
    accepted = inspect.signature(func).parameters
    kwargs = {k: v for k, v in options.items() if k in accepted and v is not None}
    report = func(**kwargs)
    report.check_id = check_id
    return report


__all__ = [
    "CHECKS", "CheckReport", "DiscontinuityConfig", "ExperimentReport", "ExponentFit",
    "Measurement", "RunRecord", "check_bernstein", "check_block_identity", "check_duhamel",
    "check_embedding", "check_heat_regularity", "check_k1_k2", "check_ladder",
    "check_lp_frame", "check_lp_scaling", "check_product_laws", "check_solver",
    "check_spectral_vanishing", "fit_exponent", "run_check", "run_discontinuity_experiment",
    "run_member",
]
