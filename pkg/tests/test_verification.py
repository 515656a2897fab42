import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chemotaxis_lab.construction.family import constraint_problems
from chemotaxis_lab.spectral_core.cutoffs import PHI_SUPPORT, CutoffProfile
from chemotaxis_lab.spectral_core.grid import GridSpec
from chemotaxis_lab.spectral_core.norms import block_lp_norms
from chemotaxis_lab.verification import CHECKS, run_check
from chemotaxis_lab.verification.corpus import block_lp_table, random_shell_field
from chemotaxis_lab.verification.experiment import DiscontinuityConfig, run_member
from chemotaxis_lab.verification.families import (
    block_identity_family, broken_beta_member, headline_member, member)
from chemotaxis_lab.verification.lemmas import check_bernstein, product_law_problems
from chemotaxis_lab.verification.report import (
    CheckReport, ExperimentReport, Measurement, RunRecord, fit_exponent)

CUT = CutoffProfile()


class TestFitExponent:
    @settings(max_examples=50, deadline=None)
    @given(st.floats(-3.0, 3.0), st.floats(0.1, 10.0))
    def test_recovers_power_law(self, a, c):
        x = [1.0, 2.0, 3.0, 4.0]
        fit = fit_exponent("t", x, [c * v**a for v in x], target=a, band=0.05)
        assert fit.slope == pytest.approx(a, abs=1e-10)
        assert fit.ok

    def test_band_rejects(self):
        x = [1.0, 2.0, 4.0]
        assert not fit_exponent("t", x, [v**-0.4 for v in x], target=-0.25, band=0.05).ok

    def test_noisy_fit_fails_stderr(self):
        fit = fit_exponent("t", [1, 2, 3, 4], [1.0, 0.3, 1.2, 0.4], lower=-10, band=0.1)
        assert fit.stderr > fit.max_stderr
        assert not fit.ok

    def test_one_sided(self):
        fit = fit_exponent("t", [1, 0.5, 0.25], [1, 0.25, 0.0625], lower=1.8, band=0.4)
        assert fit.ok and math.isinf(fit.upper)

    def test_needs_three_positive_points(self):
        with pytest.raises(ValueError):
            fit_exponent("t", [1, 2], [1, 2])
        with pytest.raises(ValueError):
            fit_exponent("t", [1, 2, 3], [1, 0, 2])


class TestReports:
    def test_slack(self):
        assert Measurement({}, 2.0, 3.0).slack == 1.5
        assert Measurement({}, 0.0, 3.0).slack == math.inf

    def test_csv_has_one_row_per_measurement(self):
        rep = CheckReport("demo")
        for i in range(3):
            rep.add({"i": i}, 1.0, 2.0)
        lines = rep.to_csv().strip().split("\n")
        assert len(lines) == 4
        assert lines[0] == "check_id,index,params,lhs,rhs,slack"
        assert rep.passed

    def test_failure_detected(self):
        rep = CheckReport("demo")
        rep.add({}, 2.0, 1.0)
        assert not rep.passed and rep.verdict == "fail"
        assert rep.summary()["failures"] == 1

    def _record(self, k, u):
        return RunRecord({"K": list(range(k))}, 1 / 16, u, u, 1.0, 0.5,
                         {"U1_K": 0.0, "U2_K": 2.0, "U3_K": 0.5})

    def test_lower_bound(self):
        assert self._record(1, 1.0).lower_bound == 1.5

    def test_experiment_series(self):
        rep = ExperimentReport(records=[self._record(k, 1.0 / k) for k in (1, 2, 3)])
        series = rep.series()
        assert "data_norm vs count" in series and "solution_norm vs count" in series
        assert series["data_norm vs count"][0] == [1, 2, 3]
        assert rep.passed


class TestCorpus:
    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 10**6), st.integers(0, 4))
    def test_shell_field_support_and_scale(self, seed, j):
        g = GridSpec(2, 64, 2 * math.pi)
        f = random_shell_field(g, np.random.default_rng(seed), [j], CUT)
        rho = g.wavenumber_abs()
        outside = (rho < PHI_SUPPORT[0] * 2.0**j) | (rho > PHI_SUPPORT[1] * 2.0**j)
        assert np.max(np.abs(f.spectral[outside])) < 1e-12 * np.max(np.abs(f.spectral))
        assert math.sqrt(float(np.mean(f.physical**2))) == pytest.approx(1.0)

    def test_seeded_determinism(self):
        g = GridSpec(2, 32, 2 * math.pi)
        a = random_shell_field(g, np.random.default_rng(7), [1, 2], CUT)
        b = random_shell_field(g, np.random.default_rng(7), [1, 2], CUT)
        assert np.array_equal(a.physical, b.physical)

    def test_batched_table_matches_single_route(self):
        g = GridSpec(2, 64, 2 * math.pi)
        rng = np.random.default_rng(1)
        fields = [random_shell_field(g, rng, [0, 1, 2, 3], CUT) for _ in range(3)]
        shells = [0, 1, 2, 3]
        table = block_lp_table(np.stack([f.spectral for f in fields]), g, [2.0, 4.0], CUT, shells)
        for i, f in enumerate(fields):
            for p in (2.0, 4.0):
                single = block_lp_norms(f, p, CUT, shells=shells)
                assert np.allclose(table[p][:, i], [single[j] for j in shells], rtol=1e-12)


class TestLemmaHypotheses:
    def test_product_laws(self):
        assert product_law_problems("n2", 2, 3.0, 5.0) == []
        assert product_law_problems("n1", 2, 4.0) != []
        assert product_law_problems("n2", 2, 3.5, 8.0) != []
        assert product_law_problems("p", 2, 2.0, s=0.0) != []

    def test_bernstein_small_corpus_deterministic(self):
        a = check_bernstein(corpus_size=3, seed=5)
        b = check_bernstein(corpus_size=3, seed=5)
        assert a.passed
        assert a.to_csv() == b.to_csv()


class TestFamilies:
    @pytest.mark.parametrize("count", [1, 2, 3, 4])
    def test_headline_scales(self, count):
        K = headline_member(count).params.K
        assert K[-1] == 8 and len(K) == count

    def test_block_identity_family_is_admissible(self):
        for mem in block_identity_family():
            assert constraint_problems(mem.params, mem.spec) == []

    def test_broken_member_is_inadmissible(self):
        mem = broken_beta_member()
        assert constraint_problems(mem.params, mem.spec) != []


class TestRegistry:
    def test_known_ids(self):
        assert {"block-identity", "lp-frame", "duhamel", "solver", "ladder"} <= set(CHECKS)

    def test_unknown_id(self):
        with pytest.raises(KeyError):
            run_check("nope")

    def test_forwards_accepted_options_only(self):
        rep = run_check("duhamel", corpus_size=2, seed=1, unrelated=3)
        assert rep.check_id == "duhamel"
        assert rep.passed
        assert len(rep.measured) == 2 * 3 + 2 * 2


class TestExperimentPieces:
    def test_data_exponent(self):
        assert DiscontinuityConfig().data_exponent == -0.25
        assert DiscontinuityConfig(r=1.5).data_exponent == pytest.approx(0.25 - 1 / 3)

    def test_run_member_small(self):
        rec = run_member(member(7, (4, 5), 1024), 1 / 16, 8,
                         DiscontinuityConfig().solver)
        assert not rec.excluded
        assert rec.defect < 0.05
        ln = rec.ladder_norms
        assert ln["U2_K"] >= 5 * (ln["U1_K"] + ln["U3_K"])
        assert rec.data_norm_u == pytest.approx(rec.data_norm_v, rel=1e-12)
