import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from chemotaxis_lab.construction.atoms import (
    AtomSpec, build_atom, lattice_points_inside, require_beta_resolved, theta_profile)
from chemotaxis_lab.construction.design import design_grid
from chemotaxis_lab.construction.family import (
    Annulus, ConstructionParams, atom_spectral_box, build_f, build_initial_data,
    constraint_problems, largest_beta, lattice_alignment_error, separation_table,
    support_report)
from chemotaxis_lab.construction.split import h_ball_norm, h_hat, h_values
from chemotaxis_lab.errors import BetaUnresolvable, ConstraintViolation, OffsetCollision
from chemotaxis_lab.spectral_core.cutoffs import PHI_PLATEAU, CutoffProfile
from chemotaxis_lab.spectral_core.grid import Field, GridSpec
from chemotaxis_lab.spectral_core.norms import BesovParams, besov_norm, lebesgue_norm
from chemotaxis_lab.verification.families import member

SPEC = AtomSpec(0.2)
CUT = CutoffProfile()


@pytest.fixture(scope="module")
def small_member():
    return member(7, (4, 5), 1024)


@pytest.fixture(scope="module")
def small_pair(small_member):
    m = small_member
    return build_initial_data(m.params, m.spec, m.grid, CUT)


class TestAtomSpec:
    @settings(max_examples=100, deadline=None)
    @given(st.floats(-1.0, 1.0))
    def test_transform_is_even_bump(self, xi):
        v = float(SPEC.theta_hat(xi))
        assert v == float(SPEC.theta_hat(-xi))
        assert 0.0 <= v <= 1.0
        if abs(xi) <= 0.5 * SPEC.beta:
            assert v == 1.0
        if abs(xi) >= SPEC.beta:
            assert v == 0.0

    @pytest.mark.parametrize("y", [0.0, 1.0, 7.3, 40.0])
    def test_theta_against_adaptive_quadrature(self, y):
        ref = quad(lambda x: float(SPEC.theta_hat(x)) * math.cos(y * x), 0.0, SPEC.beta,
                   limit=200, epsabs=1e-15)[0] / math.pi
        assert float(SPEC.theta(np.array([y]))[0]) == pytest.approx(ref, abs=1e-14)

    def test_theta_prime_against_difference(self):
        y = np.array([0.3, 5.0, 21.0])
        h = 1e-4
        fd = (SPEC.theta(y + h) - SPEC.theta(y - h)) / (2 * h)
        assert np.allclose(SPEC.theta_prime(y), fd, atol=1e-10)

    def test_rejects_nonpositive_beta(self):
        with pytest.raises(ValueError):
            AtomSpec(0.0)


class TestAtoms:
    def test_periodized_profile_matches_image_sum(self):
        L = 400.0
        g = GridSpec(2, 256, L)
        x = g.coordinates()[0].ravel()[::16]
        images = sum(SPEC.theta(x + n * L) for n in range(-10, 11))
        got = theta_profile(SPEC, g).physical[::16, 0]
        assert np.max(np.abs(got - images)) < 1e-14

    def test_atom_matches_image_sum(self):
        L = 400.0
        g = GridSpec(2, 256, L)
        x = g.coordinates()[0].ravel()[::32]
        w = SPEC.modulation_inner
        ax0 = sum(SPEC.theta(x + n * L) for n in range(-10, 11))
        ax1 = sum(SPEC.theta(x + n * L) * np.sin(w * (x + n * L)) for n in range(-10, 11))
        got = build_atom(SPEC, g).physical[::32, ::32]
        assert np.max(np.abs(got - np.outer(ax0, ax1))) < 1e-14

    def test_lattice_count(self):
        assert lattice_points_inside(2 * math.pi, 4.0) == 4
        assert lattice_points_inside(2 * math.pi, 4.5) == 5

    def test_unresolved_beta_raises(self):
        with pytest.raises(BetaUnresolvable):
            require_beta_resolved(GridSpec(2, 64, 2 * math.pi), 2.5)


class TestParams:
    def test_r_must_be_below_d(self):
        with pytest.raises(ValueError, match="requires 1 <= r < d"):
            ConstructionParams(2, 2.0, 7, (4, 5))

    def test_duplicate_scales(self):
        with pytest.raises(ValueError):
            ConstructionParams(2, 1.0, 7, (4, 4))

    @pytest.mark.parametrize("n,r", [(1, 1.0), (2, 1.0), (4, 1.0), (3, 1.5)])
    def test_count_factor(self, n, r):
        p = ConstructionParams(2, r, 12, tuple(range(2, 2 + n)))
        assert p.count_factor == pytest.approx(n ** (-1.0 / (2.0 * r)))


class TestSupport:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(3, 6), st.floats(0.02, 0.23))
    def test_support_box_bounds_are_attained(self, k, beta):
        params = ConstructionParams(2, 1.0, 9, (k,))
        spec = AtomSpec(beta)
        lo, hi = atom_spectral_box(params, spec, k)
        s = 2.0**k
        b = beta * s
        xs = np.linspace(params.outer_frequency - b, params.outer_frequency + b, 201)
        ys = np.linspace(spec.modulation_inner * s - b, spec.modulation_inner * s + b, 201)
        rho = np.hypot(xs[:, None], ys[None, :])
        assert rho.min() == pytest.approx(lo, rel=1e-12)
        assert rho.max() == pytest.approx(hi, rel=1e-12)

    def test_default_family_satisfies_constraints(self, small_member):
        assert constraint_problems(small_member.params, small_member.spec) == []

    def test_broken_beta_names_inequality(self, small_member):
        probs = constraint_problems(small_member.params, AtomSpec(1.5))
        assert any("4/3 * 2^m" in p for p in probs)
        assert any("3/2 * 2^m" in p for p in probs)

    def test_largest_beta_is_sharp(self, small_member):
        b = largest_beta(small_member.params)
        assert constraint_problems(small_member.params, AtomSpec(b)) == []
        assert constraint_problems(small_member.params, AtomSpec(b * 1.001)) != []

    def test_build_rejects_violation(self, small_member):
        m = small_member
        with pytest.raises(ConstraintViolation):
            build_f(m.params, AtomSpec(1.5), m.grid)

    def test_spectrum_on_plateau(self, small_member, small_pair):
        lo, hi = (c * 2.0**small_member.params.m for c in PHI_PLATEAU)
        assert support_report(small_pair.f, Annulus(lo, hi)) < 1e-14


class TestGeometry:
    def test_design_grid_aligns_outer_frequency(self, small_member):
        g = small_member.grid
        assert lattice_alignment_error(small_member.params, g) < 1e-9
        assert g.nyquist_per_axis[0] >= 2.7 * 2.0**small_member.params.m

    def test_auto_offsets_are_separated(self, small_member):
        table = separation_table(small_member.params, small_member.grid)
        assert all(dist > 1.0 for _, _, dist in table)

    def test_coincident_offsets_rejected(self):
        params = ConstructionParams(2, 1.0, 7, (4, 5), offsets=(1.0, 1.0), offset_axis=1)
        grid = design_grid(params, SPEC, 1024)
        with pytest.raises(OffsetCollision):
            build_f(params, SPEC, grid)


class TestDataPair:
    def test_scalings(self, small_pair, small_member):
        m = small_member.params.m
        f = small_pair.f
        assert np.allclose(small_pair.u0.spectral, 2.0 ** (1.5 * m) * f.spectral)
        assert np.allclose(small_pair.v0.spectral[0], 2.0 ** (0.5 * m) * f.spectral)
        assert np.max(np.abs(small_pair.v0.spectral[1])) == 0.0

    def test_critical_norms_collapse_to_one_shell(self, small_pair):
        # the spectrum sits on the plateau of shell m only
        f4 = lebesgue_norm(small_pair.f, 4.0)
        assert small_pair.norms["u0"] == pytest.approx(f4, rel=1e-8)
        assert small_pair.norms["v0"] == pytest.approx(f4, rel=1e-8)
        bp = BesovParams(-1.5, 4.0, 1.0)
        assert besov_norm(small_pair.u0, bp, CUT) == pytest.approx(f4, rel=1e-8)

    def test_amplitude_is_linear(self, small_member):
        m = small_member
        a = build_f(m.params, m.spec, m.grid)
        b = build_f(m.params.with_(amplitude=3.0), m.spec, m.grid)
        assert (b - a * 3.0).l2_norm() < 1e-12 * b.l2_norm()


class TestH:
    def test_transform_matches_pointwise(self):
        # synthesize h on a fine periodic grid from its transform, compare pointwise
        L, n = 400.0, 512
        g = GridSpec(2, n, L)
        eta = g.wavenumbers()
        spec = h_hat(SPEC, eta) * g.n_points / g.volume
        synth = Field(g, spectral=spec).physical
        idx = np.arange(-60, 61, 7) % n
        x = (g.coordinates()[0].ravel()[idx] + L / 2) % L - L / 2
        X, Y = np.meshgrid(x, x, indexing="ij")
        direct = h_values(SPEC, (X, Y))
        assert np.max(np.abs(synth[np.ix_(idx, idx)] - direct)) < 1e-8 * np.max(np.abs(direct))

    def test_ball_norm_converges(self):
        coarse = h_ball_norm(SPEC, 2, 4.0, radial=32, angular=64)
        fine = h_ball_norm(SPEC, 2, 4.0, radial=64, angular=128)
        assert coarse == pytest.approx(fine, rel=1e-10)
