"""Heat and Duhamel operators, the nonlinear solver and the perturbation ladder."""

from chemotaxis_lab.evolution.duhamel import (
    duhamel_const_source, duhamel_const_symbol, duhamel_quadrature, gauss_nodes,
    integrated_const_symbol, phi_functions)
from chemotaxis_lab.evolution.ladder import (
    LadderBuilder, PerturbationLadder, RungState, build_ladder, build_U1_V1, build_U2,
    build_U3)
from chemotaxis_lab.evolution.ledger import (
    LedgerObserver, LedgerRow, NormLedger, block_table, critical_exponents,
    ladder_norm_ledger)
from chemotaxis_lab.evolution.solver import (
    ProductOperator, SolutionTrace, SolverConfig, TimeGrid, dealias_mask, solve_chemotaxis,
    steps_for)

__all__ = [
    "LadderBuilder", "LedgerObserver", "LedgerRow", "NormLedger", "PerturbationLadder",
    "ProductOperator", "RungState", "SolutionTrace", "SolverConfig", "TimeGrid",
    "block_table", "build_U1_V1", "build_U2", "build_U3", "build_ladder",
    "critical_exponents", "dealias_mask", "duhamel_const_source", "duhamel_const_symbol",
    "duhamel_quadrature", "gauss_nodes", "integrated_const_symbol", "ladder_norm_ledger",
    "phi_functions", "solve_chemotaxis", "steps_for",
]
