import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from chemotaxis_lab.errors import CFLViolation, EmptyTrace, NegativeTime
from chemotaxis_lab.evolution.duhamel import (
    duhamel_const_source, duhamel_quadrature, integrated_const_symbol, phi_functions)
from chemotaxis_lab.evolution.ladder import build_ladder, build_U2
from chemotaxis_lab.evolution.solver import (
    SolverConfig, TimeGrid, dealias_mask, solve_chemotaxis, steps_for)
from chemotaxis_lab.spectral_core.grid import Field, GridSpec
from chemotaxis_lab.spectral_core.multipliers import divergence, gradient, heat_propagate
from chemotaxis_lab.verification.evolution_checks import ManufacturedSolution, band_limited_pair

TWO_PI = 2.0 * math.pi


def phi_exact(k, z):
    # phi_k(z) = (e^z - sum_{n<k} z^n/n!) / z^k with enough digits to absorb the cancellation
    if z == 0:
        return 1.0 / math.factorial(k)
    digits = 40 + int(k * max(0.0, -math.log10(abs(z))))
    with mpmath.workdps(digits):
        zm = mpmath.mpf(z)
        tail = mpmath.exp(zm) - sum(zm**n / mpmath.factorial(n) for n in range(k))
        return float(tail / zm**k)


def cosine(grid, k, amp=1.0):
    return Field.from_function(grid, lambda x, y: amp * np.cos(k * x) + 0.0 * y)


@pytest.fixture(scope="module")
def pair():
    return band_limited_pair(points=32, band=4.0, seed=3)


class TestPhiFunctions:
    @settings(max_examples=200, deadline=None)
    @given(st.floats(-200.0, 0.0))
    def test_against_extended_precision(self, z):
        got = phi_functions(np.array([z]), 3)
        for k in (1, 2, 3):
            ref = phi_exact(k, z)
            assert float(got[k - 1][0]) == pytest.approx(ref, rel=1e-13, abs=1e-300)

    def test_zero(self):
        got = phi_functions(np.array([0.0]), 3)
        assert [float(g[0]) for g in got] == pytest.approx([1.0, 0.5, 1.0 / 6.0], rel=1e-15)


class TestDuhamel:
    @pytest.mark.parametrize("t", [0.0, 0.01, 0.3, 2.0])
    def test_const_source_on_mode(self, t):
        g = GridSpec(2, 32, TWO_PI)
        out = duhamel_const_source(cosine(g, 3), t)
        factor = (1.0 - math.exp(-9.0 * t)) / 9.0
        assert np.allclose(out.physical, factor * cosine(g, 3).physical, atol=1e-15)

    def test_const_source_zero_mode(self):
        g = GridSpec(2, 16, TWO_PI)
        one = Field(g, physical=np.ones(g.shape))
        assert np.allclose(duhamel_const_source(one, 0.7).physical, 0.7)

    @pytest.mark.parametrize("lam,t", [(0.0, 1.0), (1e-6, 0.5), (4.0, 0.3), (900.0, 0.1)])
    def test_integrated_symbol(self, lam, t):
        ref = quad(lambda s: s if lam == 0 else -math.expm1(-s * lam) / lam, 0.0, t,
                   epsabs=1e-16)[0]
        assert float(integrated_const_symbol(np.array([lam]), t)[0]) == pytest.approx(
            ref, rel=1e-12)

    def test_exponential_rule_exact_for_linear_source(self):
        g = GridSpec(2, 32, TWO_PI)
        base = cosine(g, 4)
        a, b, t, lam = 2.0, -3.0, 0.2, 16.0
        times = np.linspace(0.0, t, 5)
        samples = [base * (a + b * s) for s in times]
        got = duhamel_quadrature((times, samples), t, rule="exponential")
        e = math.exp(-t * lam)
        exact = a * (1 - e) / lam + b * (t / lam - (1 - e) / lam**2)
        assert np.allclose(got.physical, exact * base.physical, atol=1e-14)

    def test_gauss_matches_closed_form(self):
        g = GridSpec(2, 32, TWO_PI)
        src = cosine(g, 5)
        got = duhamel_quadrature(lambda s: src, 0.1, nodes=64)
        assert (got - duhamel_const_source(src, 0.1)).l2_norm() < 1e-12

    def test_errors(self):
        g = GridSpec(2, 16, TWO_PI)
        with pytest.raises(NegativeTime):
            duhamel_const_source(cosine(g, 1), -0.1)
        with pytest.raises(EmptyTrace):
            duhamel_quadrature(([], []), 1.0, rule="exponential")


class TestTimeGrid:
    def test_from_epsilon(self):
        tg = TimeGrid.from_epsilon(1 / 16, 7, steps=8)
        assert tg.T_final == pytest.approx(2.0**-18)
        assert tg.dt == pytest.approx(2.0**-21)
        assert len(tg.times) == 9

    def test_rejects_few_steps(self):
        with pytest.raises(ValueError):
            TimeGrid(1.0, 4)

    def test_steps_for(self):
        assert steps_for(1.0, 10.0, bound=0.5) == 200
        assert steps_for(1e-9, 10.0) == 8


class TestSolver:
    def test_dealias_box(self):
        g = GridSpec(2, 32, TWO_PI)
        mask = dealias_mask(g, 2.0 / 3.0)
        k0, k1 = g.wavenumbers()
        keep = (np.abs(k0) <= 32 / 3) & (np.abs(k1) <= 32 / 3)
        assert np.array_equal(mask, np.broadcast_to(keep, mask.shape))

    def test_zero_data_stays_zero(self):
        g = GridSpec(2, 16, TWO_PI)
        tr = solve_chemotaxis(Field.zeros(g), Field.zeros(g, "vector"), TimeGrid(0.1, 8))
        assert tr.final_u.l2_norm() == 0.0
        assert tr.final_v.l2_norm() == 0.0

    def test_linear_limit(self, pair):
        u0, v0 = pair
        lam = 1e-6
        tg = TimeGrid(0.05, 16)
        tr = solve_chemotaxis(u0 * lam, Field.zeros(u0.grid, "vector"), tg)
        heat = heat_propagate(u0 * lam, 0.05)
        assert (tr.final_u - heat).l2_norm() < 1e-5 * heat.l2_norm()

    @settings(max_examples=5, deadline=None)
    @given(st.integers(0, 1000), st.sampled_from(["ifrk4", "ifrk2", "etd2"]))
    def test_conserved_quantities(self, seed, integrator):
        u0, v0 = band_limited_pair(points=32, band=4.0, seed=seed)
        u0 = u0 + Field(u0.grid, physical=np.full(u0.grid.shape, 0.5))
        tr = solve_chemotaxis(u0, v0, TimeGrid(0.05, 16),
                              SolverConfig(time_integrator=integrator))
        assert tr.mean_drift() <= 1e-12
        assert tr.v_integral_residual <= 1e-10

    def test_ifrk2_order(self):
        g = GridSpec(2, 32, TWO_PI)
        mms = ManufacturedSolution(g)
        u0, v0 = mms.data()
        errs = []
        for n in (16, 32):
            tr = solve_chemotaxis(u0, v0, TimeGrid(1.0, n), SolverConfig(time_integrator="ifrk2"),
                                  forcing=mms.forcing)
            errs.append(float(np.max(np.abs(tr.final_u.physical - mms.exact(1.0)[0]))))
        assert math.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.3)

    def test_cfl_guard(self, pair):
        u0, v0 = pair
        with pytest.raises(CFLViolation):
            solve_chemotaxis(u0 * 1e4, v0 * 1e4, TimeGrid(1.0, 8))

    def test_rejects_unknown_integrator(self):
        with pytest.raises(ValueError):
            SolverConfig(time_integrator="euler")


class TestLadder:
    def test_u1_is_heat_flow(self, pair):
        u0, v0 = pair
        lad = build_U2(u0, v0, TimeGrid(0.05, 8), store="final")
        assert (lad.U("U1") - heat_propagate(u0, 0.05)).l2_norm() < 1e-14 * u0.l2_norm()

    def test_u21_closed_form(self, pair):
        # the data sit in |xi| <= 4 on a 32-point grid, so products are alias free
        u0, v0 = pair
        T = 0.05
        lad = build_U2(u0, v0, TimeGrid(T, 8), store="final")
        prod = Field(u0.grid, physical=u0.physical[None] * v0.physical, kind="vector")
        ref = duhamel_const_source(divergence(prod), T)
        assert (lad.U("U21") - ref).l2_norm() < 1e-12 * ref.l2_norm()

    def test_v1_companion(self, pair):
        u0, v0 = pair
        T = 0.05
        lad = build_U2(u0, v0, TimeGrid(T, 8), store="final")
        lam = u0.grid.wavenumber_sq()
        integ = Field(u0.grid, spectral=u0.spectral * T * phi_functions(-T * lam, 1)[0])
        ref = v0 + gradient(integ)
        assert (lad.V("V1") - ref).l2_norm() < 1e-13 * ref.l2_norm()

    def test_rung_homogeneity(self, pair):
        u0, v0 = pair
        tg = TimeGrid(0.05, 8)
        one = build_U2(u0, v0, tg, store="final")
        half = build_U2(u0 * 0.5, v0 * 0.5, tg, store="final")
        assert (half.U("U1") - one.U("U1") * 0.5).l2_norm() < 1e-14
        for name in ("U21", "U22"):
            ref = one.U(name) * 0.25
            assert (half.U(name) - ref).l2_norm() < 1e-12 * ref.l2_norm()

    def test_ladder_tracks_solver(self, pair):
        u0, v0 = pair
        tg = TimeGrid(0.05, 32)
        for lam, tol in ((0.25, 1e-3), (0.05, 1e-4)):
            tr = solve_chemotaxis(u0 * lam, v0 * lam, tg)
            lad = build_ladder(u0 * lam, v0 * lam, tg, store="final")
            assert (tr.final_u - lad.u()).l2_norm() < tol * tr.final_u.l2_norm()

    def test_store_all_keeps_every_node(self, pair):
        u0, v0 = pair
        tg = TimeGrid(0.02, 8)
        lad = build_ladder(u0 * 0.1, v0 * 0.1, tg, store="all")
        assert len(lad.states["U3"]) == 9
        fin = build_ladder(u0 * 0.1, v0 * 0.1, tg, store="final")
        assert (lad.u() - fin.u()).l2_norm() < 1e-15 + 1e-13 * fin.u().l2_norm()
