import cmath
import math

import numpy as np
import pytest
from scipy import integrate

from mdi_dispcomp.errors import EstimationError
from mdi_dispcomp.hom import (
    CoincidenceCurve,
    analytic_fwhm,
    analytic_visibility,
    coincidence_curve,
    default_delays,
    extract_summary,
    mutual_overlap,
    overlap_series,
    simulate_counts,
)
from mdi_dispcomp.signal import (
    PulseSpec,
    closed_form_precomp,
    gaussian_pulse,
    grid_for,
    make_time_grid,
    propagate,
)

LN2 = math.log(2)


def dispersed_field(t, t0, d):
    """Gaussian of width t0 after accumulated dispersion d, closed form."""
    q = t0 * t0 - 1j * d
    return 0.7511 / math.sqrt(t0) * t0 / cmath.sqrt(q) * cmath.exp(-t * t / (2 * q))


def quad_overlap(t0, d_a, d_b, tau):
    """Overlap integral by adaptive quadrature on the closed-form fields (oracle)."""
    def integrand(t):
        return np.conj(dispersed_field(t - tau, t0, d_a)) * dispersed_field(t, t0, d_b)

    lim = 12 * math.sqrt(t0**4 + max(d_a * d_a, d_b * d_b)) / t0 + abs(tau)
    re, _ = integrate.quad(lambda t: integrand(t).real, -lim, lim, limit=400)
    im, _ = integrate.quad(lambda t: integrand(t).imag, -lim, lim, limit=400)
    norm = integrate.quad(lambda t: abs(dispersed_field(t, t0, 0.0)) ** 2, -lim, lim)[0]
    return complex(re, im) / norm


def pair(t0, d_a, d_b, reach=None):
    if reach is None:
        reach = 4 * analytic_fwhm(t0, d_a - d_b)
    grid = grid_for(t0, d_a, d_b, delay_reach_ps=reach)
    ref = gaussian_pulse(grid, PulseSpec(t0))
    return propagate(ref, d_a), propagate(ref, d_b)


def noiseless_summary(t0, alpha, steps=201):
    a, b = pair(t0, alpha, 0.0)
    return extract_summary(coincidence_curve(a, b, default_delays(t0, alpha, steps)))


class TestOverlap:
    def test_identical_at_zero_delay(self):
        a, _ = pair(20.0, 0.0, 0.0)
        assert abs(mutual_overlap(a, a, 0.0)) == pytest.approx(1.0, abs=1e-12)

    def test_identical_gaussians_delayed(self):
        a, b = pair(20.0, 0.0, 0.0)
        oracle = abs(quad_overlap(20.0, 0.0, 0.0, 20.0)) ** 2
        assert oracle == pytest.approx(math.exp(-0.5), rel=1e-8)
        assert abs(mutual_overlap(a, b, 20.0)) ** 2 == pytest.approx(0.60653, abs=1e-5)
        assert abs(mutual_overlap(a, b, 20.0)) ** 2 == pytest.approx(oracle, rel=1e-9)

    def test_dispersion_mismatch(self):
        a, b = pair(20.0, 1200.0, 0.0)
        oracle = quad_overlap(20.0, 1200.0, 0.0, 0.0)
        numeric = mutual_overlap(a, b, 0.0)
        assert abs(numeric) ** 2 == pytest.approx(abs(oracle) ** 2, rel=1e-8)
        assert abs(numeric) ** 2 == pytest.approx(0.55470, abs=1e-5)
        assert abs(numeric) ** 2 == pytest.approx(2 * analytic_visibility(20.0, 1200.0), rel=1e-9)

    @pytest.mark.parametrize("tau", [-37.3, 0.5, 64.0])
    def test_fractional_delays_match_quadrature(self, tau):
        a, b = pair(20.0, 300.0, -600.0)
        assert mutual_overlap(a, b, tau) == pytest.approx(quad_overlap(20.0, 300.0, -600.0, tau), abs=1e-8)

    def test_bounded_by_one(self):
        a, b = pair(10.0, 2400.0, 100.0)
        gam = overlap_series(a, b, np.linspace(-500, 500, 101))
        assert np.all(np.abs(gam) <= 1 + 1e-9)

    def test_mismatched_grids(self):
        a = gaussian_pulse(make_time_grid(4096, 1000.0), PulseSpec(20.0))
        b = gaussian_pulse(make_time_grid(2048, 1000.0), PulseSpec(20.0))
        with pytest.raises(ValueError):
            mutual_overlap(a, b, 0.0)

    def test_chunking_does_not_change_values(self):
        a, b = pair(20.0, 1200.0, 0.0)
        delays = np.linspace(-300, 300, 150)
        whole = overlap_series(a, b, delays)
        single = np.array([mutual_overlap(a, b, t) for t in delays])
        assert np.array_equal(whole, single)


class TestCoincidenceCurve:
    def test_full_dip(self):
        a, _ = pair(20.0, 0.0, 0.0)
        curve = coincidence_curve(a, a, [0.0, 300.0])
        assert curve.coincidence[0] == pytest.approx(0.5, abs=1e-12)
        assert curve.coincidence[1] == pytest.approx(1.0, abs=1e-12)

    def test_dispersed_minimum(self):
        a, b = pair(20.0, 1200.0, 0.0)
        curve = coincidence_curve(a, b, [0.0])
        assert curve.coincidence[0] == pytest.approx(0.72265, abs=1e-5)

    def test_symmetric_in_delay(self):
        a, b = pair(20.0, 1200.0, 0.0)
        delays = np.linspace(-300, 300, 121)
        c = coincidence_curve(a, b, delays).coincidence
        assert np.max(np.abs(c - c[::-1])) < 1e-9

    def test_rejects_unsorted_delays(self):
        with pytest.raises(ValueError):
            CoincidenceCurve(np.array([0.0, -1.0]), np.array([1.0, 1.0]))


class TestExtractSummary:
    def test_no_dispersion_matches_table(self):
        s = noiseless_summary(20.0, 0.0)
        assert s.visibility == pytest.approx(0.5, abs=1e-3)
        assert s.fwhm_half_ps == pytest.approx(2 * math.sqrt(2 * LN2) * 20.0, rel=5e-3)
        assert s.fwhm_paper_ps == pytest.approx(67.9457, rel=5e-3)
        assert s.fwhm_paper_ps == s.fwhm_half_ps / LN2

    def test_mismatch_1200_mismatch(self):
        s = noiseless_summary(20.0, 1200.0)
        assert s.visibility == pytest.approx(0.27735, abs=1e-3)
        assert s.fwhm_paper_ps == pytest.approx(122.491, abs=0.5)

    def test_flat_curve_rejected(self):
        curve = CoincidenceCurve(np.linspace(-100, 100, 101), np.ones(101))
        with pytest.raises(EstimationError):
            extract_summary(curve)

    def test_dip_at_edge_rejected(self):
        x = np.linspace(-100, 100, 101)
        curve = CoincidenceCurve(x, 1 - 0.5 * np.exp(-((x - 100) ** 2) / 50))
        with pytest.raises(EstimationError):
            extract_summary(curve)

    def test_too_few_samples(self):
        x = np.linspace(-100, 100, 40)
        with pytest.raises(EstimationError):
            extract_summary(CoincidenceCurve(x, 1 - 0.5 * np.exp(-x * x / 50)))

    def test_monotone_in_mismatch(self):
        alphas = [0.0, 300.0, 600.0, 1200.0, 2400.0]
        sums = [noiseless_summary(20.0, a) for a in alphas]
        vis = [s.visibility for s in sums]
        widths = [s.fwhm_paper_ps for s in sums]
        assert all(v1 > v2 for v1, v2 in zip(vis, vis[1:]))
        assert all(w1 < w2 for w1, w2 in zip(widths, widths[1:]))

    def test_compensation_restores_dip(self):
        t0 = 20.0
        grid = grid_for(t0, 1200.0, delay_reach_ps=4 * analytic_fwhm(t0, 0.0))
        spec = PulseSpec(t0)
        a = propagate(closed_form_precomp(grid, spec, 1200.0), 1200.0)
        b = gaussian_pulse(grid, spec)
        s = extract_summary(coincidence_curve(a, b, default_delays(t0)))
        assert s.visibility == pytest.approx(0.5, abs=1e-3)
        assert s.fwhm_paper_ps == pytest.approx(67.95, abs=0.5)


class TestAnalytic:
    def test_visibility(self):
        assert analytic_visibility(20.0, 0.0) == 0.5
        assert analytic_visibility(20.0, 1200.0) == pytest.approx(0.27735, abs=1e-5)

    def test_fwhm(self):
        assert analytic_fwhm(20.0, 0.0) == pytest.approx(67.9457, abs=1e-3)
        assert analytic_fwhm(20.0, 1200.0) == pytest.approx(122.4906, abs=1e-3)


class TestSimulateCounts:
    def test_deterministic(self):
        a, b = pair(20.0, 0.0, 0.0)
        curve = coincidence_curve(a, b, default_delays(20.0))
        one = simulate_counts(curve, 1e5, 42)
        two = simulate_counts(curve, 1e5, 42)
        assert np.array_equal(one.coincidence, two.coincidence)
        assert not np.array_equal(one.coincidence, simulate_counts(curve, 1e5, 43).coincidence)

    def test_visibility_spread(self):
        a, b = pair(20.0, 0.0, 0.0)
        curve = coincidence_curve(a, b, default_delays(20.0))
        hits = sum(
            abs(extract_summary(simulate_counts(curve, 1e5, seed)).visibility - 0.5) <= 0.01
            for seed in range(100)
        )
        assert hits >= 95

    def test_converges_at_high_counts(self):
        a, b = pair(20.0, 1200.0, 0.0)
        curve = coincidence_curve(a, b, default_delays(20.0, 1200.0))
        exact = extract_summary(curve)
        noisy = extract_summary(simulate_counts(curve, 1e8, 3))
        assert noisy.visibility == pytest.approx(exact.visibility, abs=1e-3)
        assert noisy.fwhm_paper_ps == pytest.approx(exact.fwhm_paper_ps, rel=1e-3)

    def test_rejects_nonpositive_counts(self):
        curve = CoincidenceCurve(np.arange(3.0), np.ones(3))
        with pytest.raises(ValueError):
            simulate_counts(curve, 0, 1)
