import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chemotaxis_lab.errors import EmptyTrace, NegativeTime, NonHermitianSymbol, ShellNotResolvable
from chemotaxis_lab.spectral_core.cutoffs import (
    CHI_INNER, CHI_OUTER, PHI_PLATEAU, PHI_SUPPORT, CutoffProfile, smoothstep)
from chemotaxis_lab.spectral_core.grid import (
    Field, GridSpec, hermitian_defect, load_field, save_field)
from chemotaxis_lab.spectral_core.littlewood_paley import (
    decompose, is_resolvable, partition_residual, project_block, resolvable_range)
from chemotaxis_lab.spectral_core.multipliers import (
    apply_multiplier, divergence, gradient, heat_propagate, laplacian)
from chemotaxis_lab.spectral_core.norms import (
    BesovParams, aggregate_lr, besov_norm, block_lp_norms, chemin_lerner_norm, lebesgue_norm,
    time_lp)

TWO_PI = 2.0 * math.pi
CUT = CutoffProfile()


def cosine(grid, k):
    return Field.from_function(grid, lambda x, y: np.cos(k * x) + 0.0 * y)


def random_real(grid, seed):
    return Field(grid, physical=np.random.default_rng(seed).standard_normal(grid.shape))


# closed-form L^p norms of cos(k x1) on the (2 pi)^2 torus
COS_LP = {2.0: math.sqrt(TWO_PI**2 / 2.0), 4.0: (TWO_PI**2 * 3.0 / 8.0) ** 0.25, math.inf: 1.0}


class TestGridSpec:
    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError):
            GridSpec(2, 48, TWO_PI)

    def test_scalar_box_broadcasts(self):
        g = GridSpec(2, 16, 3.0)
        assert g.box_length == (3.0, 3.0)
        assert g.volume == pytest.approx(9.0)

    def test_nyquist_and_fundamental(self):
        g = GridSpec(2, 64, TWO_PI)
        assert g.nyquist == pytest.approx(32.0)
        assert g.fundamental == pytest.approx((1.0, 1.0))

    def test_dict_roundtrip(self):
        g = GridSpec(2, 32, (TWO_PI, 4.0))
        assert GridSpec.from_dict(g.to_dict()) == g


class TestField:
    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_fft_roundtrip(self, seed):
        f = random_real(GridSpec(2, 32, TWO_PI), seed)
        back = Field(f.grid, spectral=np.array(f.spectral)).physical
        assert np.max(np.abs(back - f.physical)) < 1e-13 * np.max(np.abs(f.physical))

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_parseval(self, seed):
        g = GridSpec(2, 32, (TWO_PI, 5.0))
        f = random_real(g, seed)
        direct = math.sqrt(float(np.sum(f.physical**2)) * g.cell_volume)
        spectral_only = Field(g, spectral=np.array(f.spectral))
        assert spectral_only.l2_norm() == pytest.approx(direct, rel=1e-12)

    def test_real_field_is_hermitian(self):
        assert hermitian_defect(random_real(GridSpec(2, 32, TWO_PI), 3)) < 1e-14

    def test_linear_combination(self):
        g = GridSpec(2, 16, TWO_PI)
        a, b = random_real(g, 1), random_real(g, 2)
        c = a * 2.0 - b
        assert np.allclose(c.physical, 2.0 * a.physical - b.physical, atol=1e-13)

    def test_save_load_roundtrip(self, tmp_path):
        g = GridSpec(2, 16, (TWO_PI, 3.0))
        f = random_real(g, 4)
        for rep in ("spectral", "physical"):
            save_field(tmp_path / f"{rep}.npz", f, rep)
            back = load_field(tmp_path / f"{rep}.npz")
            assert back.grid == g
            assert np.allclose(back.physical, f.physical, atol=1e-14)


class TestCutoffs:
    @settings(max_examples=200, deadline=None)
    @given(st.floats(0.0, 1.0))
    def test_smoothstep_symmetry(self, t):
        assert smoothstep(t, 8) + smoothstep(1.0 - t, 8) == pytest.approx(1.0, abs=1e-14)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(1e-3, 1e4))
    def test_partition_of_unity(self, rho):
        total = sum(float(CUT.block_symbol(rho, j)) for j in range(-15, 20))
        assert total == pytest.approx(1.0, abs=1e-13)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(*PHI_PLATEAU))
    def test_plateau(self, rho):
        assert float(CUT.phi(rho)) == pytest.approx(1.0, abs=1e-15)

    @settings(max_examples=100, deadline=None)
    @given(st.one_of(st.floats(0.0, PHI_SUPPORT[0]), st.floats(PHI_SUPPORT[1], 1e6)))
    def test_outside_support(self, rho):
        assert float(CUT.phi(rho)) == 0.0

    def test_chi_profile(self):
        assert float(CUT.chi(CHI_INNER)) == 1.0
        assert float(CUT.chi(CHI_OUTER)) == 0.0
        assert 0.0 < float(CUT.chi(1.0)) < 1.0

    def test_rejects_bad_order(self):
        with pytest.raises(ValueError):
            CutoffProfile(0)


class TestLittlewoodPaley:
    def test_resolvable_rule(self):
        g = GridSpec(2, 128, TWO_PI)
        assert is_resolvable(g, 4)
        assert not is_resolvable(g, 5)
        assert resolvable_range(g) == (-1, 4)

    def test_unresolvable_block_raises(self):
        with pytest.raises(ShellNotResolvable):
            project_block(random_real(GridSpec(2, 32, TWO_PI), 0), 5, CUT)

    def test_partition_residual(self):
        assert partition_residual(GridSpec(2, 256, TWO_PI), CUT) <= 1e-12

    def test_single_mode_lands_in_one_shell(self):
        g = GridSpec(2, 128, TWO_PI)
        dec = decompose(cosine(g, 11), CUT)
        fr = dec.mass_fractions()
        assert fr[3] == pytest.approx(1.0, abs=1e-14)
        assert all(fr[j] <= 1e-14 for j in fr if j != 3)

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_reconstruction_of_band_limited_field(self, seed):
        g = GridSpec(2, 64, TWO_PI)
        j_lo, j_hi = resolvable_range(g)
        rho = g.wavenumber_abs()
        keep = (rho >= 4.0 / 3.0 * 2.0**j_lo) & (rho <= 0.75 * 2.0 ** (j_hi + 1))
        f = random_real(g, seed)
        f = Field(g, spectral=f.spectral * keep)
        dec = decompose(f, CUT)
        assert (dec.reconstruct() - f).l2_norm() <= 1e-12 * f.l2_norm()


class TestMultipliers:
    def test_heat_on_cosine(self):
        g = GridSpec(2, 64, TWO_PI)
        out = heat_propagate(cosine(g, 5), 0.01)
        assert np.allclose(out.physical, math.exp(-0.25) * cosine(g, 5).physical, atol=1e-14)

    def test_negative_time(self):
        with pytest.raises(NegativeTime):
            heat_propagate(cosine(GridSpec(2, 16, TWO_PI), 1), -1.0)

    def test_non_hermitian_symbol(self):
        with pytest.raises(NonHermitianSymbol):
            apply_multiplier(cosine(GridSpec(2, 16, TWO_PI), 1), lambda ks: 1j + 0.0 * ks[0])

    def test_div_grad_is_laplacian(self):
        g = GridSpec(2, 32, TWO_PI)
        f = random_real(g, 5)
        assert (divergence(gradient(f)) - laplacian(f)).l2_norm() < 1e-12 * laplacian(f).l2_norm()

    def test_gradient_of_cosine(self):
        g = GridSpec(2, 32, TWO_PI)
        grad = gradient(cosine(g, 3)).physical
        x = g.coordinates()[0]
        assert np.allclose(grad[0], -3.0 * np.sin(3.0 * x) + 0.0 * grad[0], atol=1e-12)
        assert np.max(np.abs(grad[1])) < 1e-12


class TestNorms:
    @pytest.mark.parametrize("p", [2.0, 4.0, math.inf])
    def test_lebesgue_of_cosine(self, p):
        assert lebesgue_norm(cosine(GridSpec(2, 64, TWO_PI), 11), p) == pytest.approx(
            COS_LP[p], rel=1e-12)

    @pytest.mark.parametrize("s,p,r", [(-1.5, 4.0, 1.0), (-0.5, 4.0, 1.0), (0.5, 2.0, 2.0),
                                       (1.0, math.inf, math.inf)])
    def test_besov_of_single_shell_mode(self, s, p, r):
        # |xi| = 11 sits on the plateau of shell 3 and outside every other shell
        f = cosine(GridSpec(2, 128, TWO_PI), 11)
        assert besov_norm(f, BesovParams(s, p, r), CUT) == pytest.approx(
            2.0 ** (3 * s) * COS_LP[p], rel=1e-12)

    def test_zero_field(self):
        f = Field.zeros(GridSpec(2, 32, TWO_PI))
        assert besov_norm(f, BesovParams(-1.5, 4.0, 1.0), CUT) == 0.0
        assert lebesgue_norm(f, 2.0) == 0.0
        assert all(v == 0.0 for v in block_lp_norms(f, 4.0, CUT).values())

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0.0, 1e6), min_size=1, max_size=20))
    def test_aggregate_lr_limits(self, vals):
        assert aggregate_lr(vals, 1.0) == pytest.approx(sum(vals), rel=1e-12, abs=1e-300)
        assert aggregate_lr(vals, math.inf) == max(vals)
        assert aggregate_lr(vals, 2.0) <= aggregate_lr(vals, 1.0) * (1 + 1e-12) + 1e-300

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.floats(0.1, 10.0))
    def test_besov_homogeneity(self, seed, lam):
        f = random_real(GridSpec(2, 32, TWO_PI), seed)
        bp = BesovParams(-0.5, 4.0, 1.0)
        assert besov_norm(f * lam, bp, CUT) == pytest.approx(lam * besov_norm(f, bp, CUT),
                                                             rel=1e-12)

    def test_time_lp_constant(self):
        t = np.linspace(0.0, 2.0, 11)
        assert time_lp(np.full(11, 3.0), t, 2.0) == pytest.approx(3.0 * math.sqrt(2.0))
        assert time_lp(np.full(11, 3.0), t, math.inf) == 3.0

    def test_chemin_lerner_constant_trace(self):
        f = cosine(GridSpec(2, 128, TWO_PI), 11)
        bp = BesovParams(-0.5, 4.0, 1.0)
        t = np.linspace(0.0, 4.0, 5)
        cl = chemin_lerner_norm(t, [f] * 5, 2.0, bp, CUT)
        assert cl == pytest.approx(2.0 * besov_norm(f, bp, CUT), rel=1e-12)

    def test_chemin_lerner_empty(self):
        with pytest.raises(EmptyTrace):
            chemin_lerner_norm([], [], 2.0, BesovParams(0.0, 2.0, 2.0), CUT)
