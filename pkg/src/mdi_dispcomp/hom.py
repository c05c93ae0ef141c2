"""Hong-Ou-Mandel coincidence dips between two pulse envelopes.

The dip model is coincidence(tau) = 1 - v_max * |gamma(tau)|^2, where gamma is
the normalised overlap of the two envelopes at relative delay tau and v_max is
the visibility ceiling (0.5 for phase-randomised coherent light).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EstimationError
from .signal import ComplexEnvelope, spectrum

V_MAX_COHERENT = 0.5
LN2 = math.log(2.0)
TAIL_FRACTION = 0.1
_CHUNK = 64
_CROSS_FLOOR = 1e-20


@dataclass(frozen=True, eq=False)
class CoincidenceCurve:
    delays_ps: np.ndarray = field(repr=False)
    coincidence: np.ndarray = field(repr=False)
    baseline: float = 1.0

    def __post_init__(self):
        d = np.array(self.delays_ps, dtype=float)
        c = np.array(self.coincidence, dtype=float)
        if d.ndim != 1 or d.shape != c.shape:
            raise ValueError("delays and coincidence must be 1-D arrays of equal length")
        if d.size > 1 and np.any(np.diff(d) <= 0):
            raise ValueError("delays must be strictly increasing")
        d.flags.writeable = False
        c.flags.writeable = False
        object.__setattr__(self, "delays_ps", d)
        object.__setattr__(self, "coincidence", c)


@dataclass(frozen=True)
class HomSummary:
    visibility: float
    fwhm_half_ps: float
    baseline: float = 1.0

    @property
    def fwhm_paper_ps(self) -> float:
        """Dip width in the d convention: half-depth width divided by ln 2."""
        return self.fwhm_half_ps / LN2

    def to_dict(self) -> dict:
        return {
            "visibility": self.visibility,
            "fwhm_half_ps": self.fwhm_half_ps,
            "fwhm_paper_ps": self.fwhm_paper_ps,
            "baseline": self.baseline,
        }


def analytic_visibility(t0_ps: float, alpha_ps2: float) -> float:
    """Dip visibility for Gaussians of width T0 with dispersion mismatch alpha."""
    return t0_ps**2 / math.sqrt(4.0 * t0_ps**4 + alpha_ps2**2)


def analytic_fwhm(t0_ps: float, alpha_ps2: float) -> float:
    """Dip width d (half-depth width / ln 2) for dispersion mismatch alpha."""
    return math.sqrt((2.0 * alpha_ps2**2 / t0_ps**2 + 8.0 * t0_ps**2) / LN2)


def default_delays(t0_ps: float, alpha_ps2: float = 0.0, steps: int = 201) -> np.ndarray:
    """Symmetric delay scan over +-4 d(alpha); an odd ``steps`` samples tau = 0."""
    half = 4.0 * analytic_fwhm(t0_ps, alpha_ps2)
    return np.linspace(-half, half, steps)


def _check_pair(env_a: ComplexEnvelope, env_b: ComplexEnvelope) -> None:
    if env_a.grid != env_b.grid:
        raise ValueError(f"envelopes live on different grids: {env_a.grid} vs {env_b.grid}")


def overlap_series(env_a: ComplexEnvelope, env_b: ComplexEnvelope, delays_ps) -> np.ndarray:
    """Normalised overlap gamma(tau) for every delay in ``delays_ps``.

    Evaluated through the cross spectrum, so non-integer sample delays are
    exact for band-limited envelopes.
    """
    _check_pair(env_a, env_b)
    grid = env_a.grid
    delays = np.atleast_1d(np.asarray(delays_ps, dtype=float))
    if np.any(np.abs(delays) > grid.span_ps / 2):
        raise ValueError(f"delays must lie within +-{grid.span_ps / 2:g} ps")
    spec_a = spectrum(env_a)
    spec_b = spectrum(env_b)
    norm = math.sqrt(np.sum(np.abs(spec_a) ** 2) * np.sum(np.abs(spec_b) ** 2))
    if norm == 0:
        raise ValueError("overlap of an all-zero envelope is undefined")
    cross = np.conj(spec_a) * spec_b
    # bins this far below the peak cannot move the sum at double precision
    keep = np.abs(cross) > _CROSS_FLOOR * np.abs(cross).max()
    cross = cross[keep]
    w = grid.omega[keep]
    out = np.empty(delays.size, dtype=np.complex128)
    # row-wise sums keep every delay's value independent of chunking
    for start in range(0, delays.size, _CHUNK):
        block = delays[start:start + _CHUNK]
        out[start:start + _CHUNK] = np.sum(np.exp(1j * np.outer(block, w)) * cross, axis=1)
    return out / norm


def mutual_overlap(env_a: ComplexEnvelope, env_b: ComplexEnvelope, delay_ps: float) -> complex:
    """gamma(tau) = int a*(t - tau) b(t) dt / sqrt(E_a E_b)."""
    return complex(overlap_series(env_a, env_b, [delay_ps])[0])


def coincidence_curve(env_a, env_b, delays_ps, v_max: float = V_MAX_COHERENT) -> CoincidenceCurve:
    if not 0 < v_max <= 1:
        raise ValueError(f"v_max must lie in (0, 1], got {v_max}")
    gamma = overlap_series(env_a, env_b, delays_ps)
    return CoincidenceCurve(np.asarray(delays_ps, dtype=float), 1.0 - v_max * np.abs(gamma) ** 2, 1.0)


def _crossing(x0, y0, x1, y1, level):
    if y1 == y0:
        return x0
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0)


def extract_summary(curve: CoincidenceCurve) -> HomSummary:
    """Visibility and width of the dip in ``curve``.

    The baseline is the mean of the outer 10% of samples (5% per side); the
    half-depth crossings are linearly interpolated between bracketing samples,
    walking outward from the minimum.
    """
    x = curve.delays_ps
    y = curve.coincidence
    n = x.size
    if n < 64:
        raise EstimationError(f"need at least 64 delay samples, got {n}")
    n_tail = max(1, int(round(TAIL_FRACTION * n / 2)))
    baseline = float(np.mean(np.concatenate([y[:n_tail], y[-n_tail:]])))
    i_min = int(np.argmin(y))
    y_min = float(y[i_min])
    if i_min < n_tail or i_min >= n - n_tail:
        raise EstimationError("dip minimum lies at the edge of the delay range")
    if baseline <= 0 or y_min >= baseline:
        raise EstimationError("curve has no dip below its baseline")
    level = 0.5 * (baseline + y_min)

    left = None
    for i in range(i_min, 0, -1):
        if y[i - 1] >= level:
            left = _crossing(x[i], y[i], x[i - 1], y[i - 1], level)
            break
    right = None
    for i in range(i_min, n - 1):
        if y[i + 1] >= level:
            right = _crossing(x[i], y[i], x[i + 1], y[i + 1], level)
            break
    if left is None or right is None:
        raise EstimationError("no half-depth crossing on one side of the dip")
    return HomSummary(
        visibility=(baseline - y_min) / baseline,
        fwhm_half_ps=float(right - left),
        baseline=baseline,
    )


def simulate_counts(curve: CoincidenceCurve, mean_counts_per_bin: float, seed: int) -> CoincidenceCurve:
    """Poisson-sampled version of ``curve`` renormalised by the mean count."""
    if not mean_counts_per_bin > 0:
        raise ValueError(f"mean_counts_per_bin must be positive, got {mean_counts_per_bin}")
    rng = np.random.default_rng(seed)
    counts = rng.poisson(mean_counts_per_bin * curve.coincidence)
    return CoincidenceCurve(curve.delays_ps, counts / mean_counts_per_bin, curve.baseline)
