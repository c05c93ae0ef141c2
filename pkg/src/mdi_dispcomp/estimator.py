"""Blind estimation of the dispersion mismatch and choice of compensating side.

Alice and Bob first send identical Gaussian references; the width and depth of
the announced HOM dip give |alpha|. Each party then, in its own time window,
sends a reference pre-compensated for |alpha|, and the side whose dip lands
closest to the dispersion-free one (smallest Gamma) is chosen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, EstimationError
from .hom import (
    LN2,
    V_MAX_COHERENT,
    HomSummary,
    analytic_fwhm,
    coincidence_curve,
    default_delays,
    extract_summary,
    simulate_counts,
)
from .signal import (
    ComplexEnvelope,
    FiberSpec,
    PulseSpec,
    check_truncation,
    closed_form_precomp,
    gaussian_pulse,
    grid_for,
    propagate,
)

ALPHA_SOURCES = ("fwhm", "visibility", "mean")
SIGN_POLICIES = ("fiber", "both")
DEFAULT_TIE_THRESHOLD = 0.05
# Relative slack for noisy metrics that land just past the alpha = 0 limit.
FLOOR_TOLERANCE = 0.01


@dataclass(frozen=True)
class ExpectedReference:
    v_expected: float
    fwhm_expected_ps: float

    @classmethod
    def for_t0(cls, t0_ps: float) -> "ExpectedReference":
        return cls(V_MAX_COHERENT, analytic_fwhm(t0_ps, 0.0))


@dataclass(frozen=True)
class NoiseSpec:
    mean_counts: float
    seed: int


@dataclass(frozen=True)
class ProtocolReport:
    alpha_hat_ps2: float
    summary_uncompensated: HomSummary
    summary_comp_alice: HomSummary
    summary_comp_bob: HomSummary
    gamma_alice: float
    gamma_bob: float
    selected: str
    expected: ExpectedReference
    dispersion_alice_ps2: float = 0.0
    dispersion_bob_ps2: float = 0.0
    alpha_source: str = "fwhm"
    tie_threshold: float = DEFAULT_TIE_THRESHOLD
    diagnostics: tuple = field(default=())

    @property
    def alpha_candidates_ps2(self) -> tuple[float, float]:
        return (self.alpha_hat_ps2, -self.alpha_hat_ps2)

    @property
    def gamma_uncompensated(self) -> float:
        return gamma(self.summary_uncompensated, self.expected)

    def to_dict(self) -> dict:
        return {
            "alpha_hat_ps2": self.alpha_hat_ps2,
            "alpha_candidates_ps2": list(self.alpha_candidates_ps2),
            "alpha_source": self.alpha_source,
            "gamma_alice": self.gamma_alice,
            "gamma_bob": self.gamma_bob,
            "selected": self.selected,
            "tie_threshold": self.tie_threshold,
            "dispersion_alice_ps2": self.dispersion_alice_ps2,
            "dispersion_bob_ps2": self.dispersion_bob_ps2,
            "expected": {
                "visibility": self.expected.v_expected,
                "fwhm_paper_ps": self.expected.fwhm_expected_ps,
            },
            "summary_uncompensated": self.summary_uncompensated.to_dict(),
            "summary_comp_alice": self.summary_comp_alice.to_dict(),
            "summary_comp_bob": self.summary_comp_bob.to_dict(),
            "diagnostics": list(self.diagnostics),
        }


def alpha_from_visibility(v: float, t0_ps: float) -> float:
    """|alpha| from the dip visibility; the sign is not recoverable."""
    if not 0 < v <= V_MAX_COHERENT * (1 + 1e-12):
        raise DomainError(f"visibility {v:.6g} outside (0, {V_MAX_COHERENT}]")
    return t0_ps**2 * math.sqrt(max(1.0 / v**2 - 4.0, 0.0))


def alpha_from_fwhm(d_ps: float, t0_ps: float) -> float:
    """|alpha| from the dip width d."""
    floor = analytic_fwhm(t0_ps, 0.0)
    # allow rounding of a floor-valued width, e.g. a tabulated 67.9457
    if d_ps < floor * (1.0 - 1e-6):
        raise DomainError(f"dip width {d_ps:.6g} ps is below the alpha = 0 floor {floor:.6g} ps")
    return math.sqrt(max(t0_ps**2 * (d_ps**2 * LN2 - 8.0 * t0_ps**2) / 2.0, 0.0))


def gamma(summary: HomSummary, expected: ExpectedReference) -> float:
    """Selection metric: |d - d_expected| * |V - V_expected|."""
    return abs(summary.fwhm_paper_ps - expected.fwhm_expected_ps) * abs(
        summary.visibility - expected.v_expected
    )


def estimate_alpha(summary: HomSummary, t0_ps: float, source: str = "fwhm",
                   floor_tolerance: float = FLOOR_TOLERANCE) -> float:
    """|alpha| from a measured dip.

    Metrics that fall past the alpha = 0 limit by less than ``floor_tolerance``
    (relative) are read as alpha = 0; anything further raises DomainError.
    """
    if source not in ALPHA_SOURCES:
        raise ValueError(f"alpha source must be one of {ALPHA_SOURCES}, got {source!r}")
    ref = ExpectedReference.for_t0(t0_ps)

    def from_fwhm():
        d = summary.fwhm_paper_ps
        if ref.fwhm_expected_ps * (1 - floor_tolerance) <= d < ref.fwhm_expected_ps:
            return 0.0
        return alpha_from_fwhm(d, t0_ps)

    def from_vis():
        v = summary.visibility
        if ref.v_expected < v <= ref.v_expected * (1 + floor_tolerance):
            return 0.0
        return alpha_from_visibility(v, t0_ps)

    if source == "fwhm":
        return from_fwhm()
    if source == "visibility":
        return from_vis()
    return 0.5 * (from_fwhm() + from_vis())


def _measure(env_a: ComplexEnvelope, env_b: ComplexEnvelope, delays, noise, phase):
    curve = coincidence_curve(env_a, env_b, delays)
    if noise is not None:
        seq = np.random.SeedSequence(noise.seed).spawn(3)[phase]
        curve = simulate_counts(curve, noise.mean_counts, int(seq.generate_state(1)[0]))
    return extract_summary(curve)


def select_side(gamma_alice: float, gamma_bob: float, tie_threshold: float) -> str:
    if gamma_alice < gamma_bob - tie_threshold:
        return "alice"
    if gamma_bob < gamma_alice - tie_threshold:
        return "bob"
    return "inconclusive"


def run_blind_protocol(
    fiber_a: FiberSpec,
    fiber_b: FiberSpec,
    t0_ps: float,
    noise: NoiseSpec | None = None,
    tie_threshold: float = DEFAULT_TIE_THRESHOLD,
    alpha_source: str = "fwhm",
    sign_policy: str = "fiber",
    delay_steps: int = 201,
    delays_ps=None,
) -> ProtocolReport:
    """Three reference windows: plain, Alice pre-compensated, Bob pre-compensated.

    With ``sign_policy="fiber"`` each party pre-compensates with |alpha| times
    the sign of its own beta2, i.e. assumes its own arm carries the excess
    dispersion. ``"both"`` tries +|alpha| and -|alpha| and keeps the smaller
    Gamma; note that the wrong-side party can then match the other arm by
    adding dispersion, which hides the asymmetry.
    """
    if sign_policy not in SIGN_POLICIES:
        raise ValueError(f"sign policy must be one of {SIGN_POLICIES}, got {sign_policy!r}")
    if not t0_ps > 0:
        raise ValueError(f"t0_ps must be positive, got {t0_ps}")
    d_a = fiber_a.dispersion_ps2
    d_b = fiber_b.dispersion_ps2
    true_alpha = d_a - d_b
    diagnostics = []

    spec = PulseSpec(t0_ps)
    # the grid must also hold pulses pre-chirped by up to ~2|alpha|
    reach = abs(true_alpha) * 2.0 + abs(d_a) + abs(d_b)
    if delays_ps is None:
        # Charlie's scan covers the widest dip the three windows can produce
        delays_ps = default_delays(t0_ps, 2.0 * true_alpha, delay_steps)
    delays_ps = np.asarray(delays_ps, dtype=float)
    grid = grid_for(t0_ps, reach, d_a, d_b, delay_reach_ps=float(np.max(np.abs(delays_ps))))
    ref = gaussian_pulse(grid, spec)
    expected = ExpectedReference.for_t0(t0_ps)

    at_alice = propagate(ref, d_a)
    at_bob = propagate(ref, d_b)
    for env in (at_alice, at_bob):
        check_truncation(env)

    summary0 = _measure(at_alice, at_bob, delays_ps, noise, 0)
    if summary0.visibility > expected.v_expected * (1 + FLOOR_TOLERANCE):
        raise DomainError(
            f"reference visibility {summary0.visibility:.4f} exceeds the {expected.v_expected} ceiling; "
            "measurement is inconsistent"
        )
    alpha_hat = estimate_alpha(summary0, t0_ps, alpha_source)

    def trial(fiber: FiberSpec, is_alice: bool, phase: int):
        if sign_policy == "fiber":
            signs = (1.0 if fiber.beta2_ps2_per_km >= 0 else -1.0,)
        else:
            signs = (1.0, -1.0)
        best = None
        for sign in signs:
            sent = closed_form_precomp(grid, spec, sign * alpha_hat)
            arrived = propagate(sent, fiber.dispersion_ps2)
            check_truncation(arrived)
            if is_alice:
                summary = _measure(arrived, at_bob, delays_ps, noise, phase)
            else:
                summary = _measure(at_alice, arrived, delays_ps, noise, phase)
            g = gamma(summary, expected)
            if best is None or g < best[1]:
                best = (summary, g)
        return best

    summary_a, gamma_a = trial(fiber_a, True, 1)
    summary_b, gamma_b = trial(fiber_b, False, 2)
    selected = select_side(gamma_a, gamma_b, tie_threshold)
    if selected == "inconclusive":
        diagnostics.append(
            f"|gamma_alice - gamma_bob| = {abs(gamma_a - gamma_b):.4g} <= tie threshold {tie_threshold:g}"
        )
    return ProtocolReport(
        alpha_hat_ps2=alpha_hat,
        summary_uncompensated=summary0,
        summary_comp_alice=summary_a,
        summary_comp_bob=summary_b,
        gamma_alice=gamma_a,
        gamma_bob=gamma_b,
        selected=selected,
        expected=expected,
        dispersion_alice_ps2=d_a,
        dispersion_bob_ps2=d_b,
        alpha_source=alpha_source,
        tie_threshold=tie_threshold,
        diagnostics=tuple(diagnostics),
    )


def table_rows(report: ProtocolReport) -> list[tuple[str, float, float, float]]:
    """(label, visibility, fwhm, gamma) rows in the order of the comparison table."""
    exp = report.expected
    return [
        ("Without asymmetric dispersion", exp.v_expected, exp.fwhm_expected_ps, 0.0),
        ("Asymmetric dispersion without compensation",
         report.summary_uncompensated.visibility,
         report.summary_uncompensated.fwhm_paper_ps,
         report.gamma_uncompensated),
        ("Asymmetric dispersion and compensation at Bob's end",
         report.summary_comp_bob.visibility, report.summary_comp_bob.fwhm_paper_ps, report.gamma_bob),
        ("Asymmetric dispersion and compensation at Alice's end",
         report.summary_comp_alice.visibility, report.summary_comp_alice.fwhm_paper_ps, report.gamma_alice),
    ]


def format_table(report: ProtocolReport) -> str:
    rows = table_rows(report)
    width = max(len(r[0]) for r in rows)
    lines = [f"{'scenario':<{width}}  {'visibility':>12}  {'fwhm':>12}  {'gamma':>12}"]
    for label, v, d, g in rows:
        lines.append(f"{label:<{width}}  {v:>12.4f}  {d:>12.4f}  {g:>12.4f}")
    lines.append(f"selected: {report.selected}")
    return "\n".join(lines) + "\n"
