import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdi_dispcomp.errors import DomainError
from mdi_dispcomp.estimator import (
    ExpectedReference,
    NoiseSpec,
    alpha_from_fwhm,
    alpha_from_visibility,
    estimate_alpha,
    format_table,
    gamma,
    run_blind_protocol,
    select_side,
    table_rows,
)
from mdi_dispcomp.hom import HomSummary, analytic_fwhm, analytic_visibility
from mdi_dispcomp.signal import FiberSpec

LN2 = math.log(2)
REF20 = ExpectedReference(0.5, 67.9457)


def summary(v, d):
    return HomSummary(visibility=v, fwhm_half_ps=d * LN2)


def test_expected_reference_from_t0():
    ref = ExpectedReference.for_t0(20.0)
    assert ref.v_expected == 0.5
    assert ref.fwhm_expected_ps == pytest.approx(math.sqrt(8 * 400 / LN2), rel=1e-15)


class TestVisibilityInversion:
    def test_ceiling_is_zero_mismatch(self):
        assert alpha_from_visibility(0.5, 20.0) == 0.0

    def test_mismatch_1200(self):
        assert alpha_from_visibility(0.27735, 20.0) == pytest.approx(1200.0, rel=1e-4)
        assert alpha_from_visibility(analytic_visibility(20.0, 1200.0), 20.0) == pytest.approx(1200.0, rel=1e-12)

    @pytest.mark.parametrize("v", [0.6, 0.0, -0.1])
    def test_out_of_domain(self, v):
        with pytest.raises(DomainError):
            alpha_from_visibility(v, 20.0)


class TestFwhmInversion:
    def test_floor(self):
        assert alpha_from_fwhm(67.9457, 20.0) == pytest.approx(0.0, abs=0.5)

    def test_mismatch_1200(self):
        assert alpha_from_fwhm(122.4906, 20.0) == pytest.approx(1200.0, abs=0.05)

    def test_below_floor(self):
        with pytest.raises(DomainError):
            alpha_from_fwhm(50.0, 20.0)

    @settings(max_examples=200, deadline=None)
    @given(t0=st.floats(1.0, 100.0), frac=st.floats(0.0, 10.0))
    def test_round_trip(self, t0, frac):
        alpha = frac * t0 * t0
        back = alpha_from_fwhm(analytic_fwhm(t0, alpha), t0)
        assert back == pytest.approx(alpha, rel=1e-3, abs=1e-6 * t0 * t0)
        if analytic_visibility(t0, alpha) >= 0.05:
            back_v = alpha_from_visibility(analytic_visibility(t0, alpha), t0)
            assert back_v == pytest.approx(alpha, rel=1e-3, abs=1e-6 * t0 * t0)


class TestGamma:
    @pytest.mark.parametrize(
        "v,d,expected",
        [(0.3989, 148.87, 8.1813), (0.4901, 72.248, 0.0424), (0.4615, 119.236, 1.9759)],
    )
    def test_table_rows(self, v, d, expected):
        assert gamma(summary(v, d), REF20) == pytest.approx(expected, rel=0.01)

    def test_row_two_arithmetic(self):
        assert gamma(summary(0.3989, 148.87), REF20) == pytest.approx(80.9243 * 0.1011, rel=1e-9)

    def test_zero_at_reference(self):
        assert gamma(summary(0.5, 67.9457), REF20) == pytest.approx(0.0, abs=1e-12)

    @given(v=st.floats(0.01, 0.5), d=st.floats(67.9457, 500.0))
    def test_non_negative_and_zero_only_at_reference(self, v, d):
        g = gamma(summary(v, d), REF20)
        assert g >= 0
        if g == 0:
            assert v == 0.5 or math.isclose(d, 67.9457, rel_tol=1e-12)


class TestEstimateAlpha:
    def test_noise_just_below_floor_reads_as_zero(self):
        s = summary(0.5, 67.9457 * 0.995)
        assert estimate_alpha(s, 20.0, "fwhm") == 0.0

    def test_far_below_floor_raises(self):
        with pytest.raises(DomainError):
            estimate_alpha(summary(0.5, 60.0), 20.0, "fwhm")

    def test_super_ceiling_visibility_raises(self):
        with pytest.raises(DomainError):
            estimate_alpha(summary(0.6, 80.0), 20.0, "visibility")

    def test_mean_route(self):
        s = summary(analytic_visibility(20.0, 1200.0), analytic_fwhm(20.0, 1200.0))
        assert estimate_alpha(s, 20.0, "mean") == pytest.approx(1200.0, rel=1e-9)


def test_select_side():
    assert select_side(0.01, 5.0, 0.05) == "alice"
    assert select_side(5.0, 0.01, 0.05) == "bob"
    assert select_side(0.01, 0.04, 0.05) == "inconclusive"


class TestProtocol:
    def test_bob_side_dispersion(self):
        r = run_blind_protocol(FiberSpec(20.0, 0.0), FiberSpec(20.0, 60.0), 20.0)
        assert r.alpha_hat_ps2 == pytest.approx(1200.0, abs=1.0)
        assert r.gamma_bob < 1e-4
        assert r.gamma_alice > 1.0
        assert r.selected == "bob"
        assert r.summary_comp_bob.visibility == pytest.approx(0.5, abs=1e-3)
        assert r.summary_comp_bob.fwhm_paper_ps == pytest.approx(67.9457, abs=0.5)

    def test_alice_side_dispersion(self):
        r = run_blind_protocol(FiberSpec(20.0, 60.0), FiberSpec(20.0, 0.0), 20.0)
        assert r.selected == "alice"
        assert r.gamma_alice < 1e-4

    @pytest.mark.parametrize("length", [0.0, 30.0])
    def test_symmetric_links_inconclusive(self, length):
        r = run_blind_protocol(FiberSpec(20.0, length), FiberSpec(20.0, length), 20.0)
        assert r.alpha_hat_ps2 < 50.0
        assert r.selected == "inconclusive"
        assert r.diagnostics

    @pytest.mark.parametrize("t0,d_a,d_b", [(20.0, 0.0, 200.0), (20.0, 300.0, 1500.0), (10.0, 800.0, 0.0),
                                           (40.0, 0.0, 3000.0)])
    def test_correct_side_dominates(self, t0, d_a, d_b):
        r = run_blind_protocol(FiberSpec(1.0, d_a), FiberSpec(1.0, d_b), t0)
        right, wrong = (r.gamma_bob, r.gamma_alice) if d_b > d_a else (r.gamma_alice, r.gamma_bob)
        assert right < 1e-3 * wrong

    def test_negative_beta2_fibers(self):
        r = run_blind_protocol(FiberSpec(-20.0, 0.0), FiberSpec(-20.0, 60.0), 20.0)
        assert r.selected == "bob"

    def test_both_signs_policy_hides_the_asymmetry(self):
        r = run_blind_protocol(FiberSpec(20.0, 0.0), FiberSpec(20.0, 60.0), 20.0, sign_policy="both")
        assert r.gamma_alice < 1e-4 and r.gamma_bob < 1e-4
        assert r.selected == "inconclusive"

    @pytest.mark.parametrize("source", ["visibility", "mean"])
    def test_other_alpha_sources(self, source):
        r = run_blind_protocol(FiberSpec(20.0, 0.0), FiberSpec(20.0, 60.0), 20.0, alpha_source=source)
        assert r.alpha_hat_ps2 == pytest.approx(1200.0, abs=1.0)
        assert r.selected == "bob"

    def test_deterministic_with_noise(self):
        args = (FiberSpec(20.0, 0.0), FiberSpec(20.0, 60.0), 20.0)
        one = run_blind_protocol(*args, noise=NoiseSpec(1e5, 11))
        two = run_blind_protocol(*args, noise=NoiseSpec(1e5, 11))
        assert one == two

    def test_report_serialisation(self):
        r = run_blind_protocol(FiberSpec(20.0, 0.0), FiberSpec(20.0, 60.0), 20.0)
        d = r.to_dict()
        for key in ("alpha_hat_ps2", "gamma_alice", "gamma_bob", "selected", "summary_uncompensated",
                    "summary_comp_alice", "summary_comp_bob"):
            assert key in d
        assert d["alpha_candidates_ps2"] == [r.alpha_hat_ps2, -r.alpha_hat_ps2]
        rows = table_rows(r)
        assert [row[0] for row in rows][2].endswith("Bob's end")
        text = format_table(r)
        assert "visibility" in text and "selected: bob" in text
        assert np.isclose(rows[0][2], 67.9457, atol=1e-3)
