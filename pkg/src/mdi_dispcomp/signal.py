"""Complex pulse envelopes on a uniform time grid.

Units are ps for time, ps^2 for accumulated dispersion and rad/ps for angular
frequency. The Fourier convention is F(w) = int f(t) exp(-i w t) dt, which is
the sign used by ``numpy.fft.fft``; a fiber with accumulated dispersion D
multiplies the spectrum by exp(+i D w^2 / 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, NumericalError, TruncationError

NORM_CONST = 0.7511
DEFAULT_SAMPLES = 4096
EDGE_TOLERANCE = 1e-8


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid centred on t = 0; sample k sits at (k - n/2) * dt."""

    n_samples: int
    dt_ps: float

    def __post_init__(self):
        n = self.n_samples
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
            raise ConfigurationError(f"n_samples must be an integer, got {n!r}")
        if n < 16 or n & (n - 1):
            raise ConfigurationError(f"n_samples must be a power of two >= 16, got {n}")
        if not (self.dt_ps > 0 and math.isfinite(self.dt_ps)):
            raise ConfigurationError(f"dt_ps must be positive and finite, got {self.dt_ps}")

    @property
    def span_ps(self) -> float:
        return self.n_samples * self.dt_ps

    @property
    def t_ps(self) -> np.ndarray:
        return (np.arange(self.n_samples) - self.n_samples // 2) * self.dt_ps

    @property
    def omega(self) -> np.ndarray:
        """Angular frequencies in FFT order, matching :func:`spectrum`."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_samples, d=self.dt_ps)


@dataclass(frozen=True)
class PulseSpec:
    t0_ps: float = 20.0
    center_ps: float = 0.0
    norm_const: float = NORM_CONST

    def __post_init__(self):
        if not (self.t0_ps > 0 and math.isfinite(self.t0_ps)):
            raise ConfigurationError(f"must be positive, got {self.t0_ps}", "t0_ps")
        if self.norm_const != NORM_CONST:
            raise ConfigurationError(f"norm_const is fixed at {NORM_CONST}")


@dataclass(frozen=True)
class FiberSpec:
    beta2_ps2_per_km: float = 20.0
    length_km: float = 0.0
    loss_db_per_km: float = 0.2

    def __post_init__(self):
        if not self.length_km >= 0:
            raise ConfigurationError(f"must be >= 0, got {self.length_km}", "length_km")
        if not self.loss_db_per_km >= 0:
            raise ConfigurationError(f"must be >= 0, got {self.loss_db_per_km}", "loss_db_per_km")

    @property
    def dispersion_ps2(self) -> float:
        """Accumulated second-order dispersion beta2 * L."""
        return self.beta2_ps2_per_km * self.length_km

    @property
    def transmittance(self) -> float:
        return 10.0 ** (-self.loss_db_per_km * self.length_km / 10.0)


@dataclass(frozen=True, eq=False)
class ComplexEnvelope:
    grid: TimeGrid
    amplitude: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.array(self.amplitude, dtype=np.complex128)
        if a.shape != (self.grid.n_samples,):
            raise ValueError(
                f"amplitude has shape {a.shape}, expected ({self.grid.n_samples},)"
            )
        if not np.all(np.isfinite(a)):
            raise NumericalError("envelope contains non-finite samples")
        a.flags.writeable = False
        object.__setattr__(self, "amplitude", a)

    @property
    def t_ps(self) -> np.ndarray:
        return self.grid.t_ps

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.amplitude) ** 2) * self.grid.dt_ps)

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.amplitude)

    @property
    def phase(self) -> np.ndarray:
        return np.angle(self.amplitude)


def make_time_grid(n_samples: int, span_ps: float) -> TimeGrid:
    if not (span_ps > 0 and math.isfinite(span_ps)):
        raise ConfigurationError(f"span_ps must be positive and finite, got {span_ps}")
    return TimeGrid(n_samples, span_ps / n_samples)


def broadened_width(t0_ps: float, dispersion_ps2: float) -> float:
    """Width of a Gaussian of width T0 after accumulating ``dispersion_ps2``."""
    return math.sqrt(t0_ps**4 + dispersion_ps2**2) / t0_ps


def grid_for(t0_ps: float, *dispersions_ps2: float, delay_reach_ps: float = 0.0,
             min_samples: int = DEFAULT_SAMPLES) -> TimeGrid:
    """Grid wide enough for the most broadened pulse and fine enough for T0.

    Span is max(32 T0, 16 W, 2 (delay_reach + 8 W)) with W the largest
    broadened width, so a pulse shifted by up to ``delay_reach_ps`` still fits.
    Sample spacing stays at or below T0/2, where the Gaussian spectrum is
    ~1e-9 of its peak at Nyquist. Starts at ``min_samples`` and doubles.
    """
    widest = max(broadened_width(t0_ps, d) for d in (0.0, *dispersions_ps2))
    span = max(32.0 * t0_ps, 16.0 * widest, 2.0 * (abs(delay_reach_ps) + 8.0 * widest))
    n = min_samples
    while span / n > 0.5 * t0_ps:
        n *= 2
    return make_time_grid(n, span)


def check_truncation(env: ComplexEnvelope, tolerance: float = EDGE_TOLERANCE) -> None:
    """Raise if the envelope is not negligible at both grid edges."""
    mag = env.magnitude
    peak = mag.max()
    edge = max(mag[0], mag[-1])
    if peak == 0 or edge > tolerance * peak:
        raise TruncationError(
            f"edge amplitude {edge:.3g} exceeds {tolerance:g} of peak {peak:.3g}; widen the grid"
        )


def spectrum(env: ComplexEnvelope) -> np.ndarray:
    """Discrete spectrum in FFT order (t = 0 moved to index 0)."""
    return np.fft.fft(np.fft.ifftshift(env.amplitude))


def _from_spectrum(grid: TimeGrid, spec: np.ndarray) -> ComplexEnvelope:
    out = np.fft.fftshift(np.fft.ifft(spec))
    if not np.all(np.isfinite(out)):
        raise NumericalError("non-finite samples after dispersion filter")
    return ComplexEnvelope(grid, out)


def gaussian_pulse(grid: TimeGrid, spec: PulseSpec) -> ComplexEnvelope:
    t0 = spec.t0_ps
    if grid.span_ps < 16.0 * t0:
        raise TruncationError(
            f"grid span {grid.span_ps:g} ps is below 16*T0 = {16.0 * t0:g} ps"
        )
    t = grid.t_ps - spec.center_ps
    amp = spec.norm_const / math.sqrt(t0) * np.exp(-(t**2) / (2.0 * t0**2))
    return ComplexEnvelope(grid, amp.astype(np.complex128))


def dispersion_filter(grid: TimeGrid, dispersion_ps2: float) -> np.ndarray:
    w = grid.omega
    return np.exp(0.5j * dispersion_ps2 * w**2)


def propagate(env: ComplexEnvelope, dispersion_ps2: float) -> ComplexEnvelope:
    """Apply second-order dispersion exp(+i D w^2/2) in the frequency domain."""
    if dispersion_ps2 == 0:
        return ComplexEnvelope(env.grid, env.amplitude)
    return _from_spectrum(env.grid, spectrum(env) * dispersion_filter(env.grid, dispersion_ps2))


def precompensate(target: ComplexEnvelope, dispersion_ps2: float) -> ComplexEnvelope:
    """Pulse that turns into ``target`` after ``dispersion_ps2`` of fiber.

    This is the exact inverse filter, so ``propagate(precompensate(f, D), D)``
    gives back ``f`` up to rounding.
    """
    if dispersion_ps2 == 0:
        return ComplexEnvelope(target.grid, target.amplitude)
    return _from_spectrum(
        target.grid, spectrum(target) * np.conj(dispersion_filter(target.grid, dispersion_ps2))
    )


def closed_form_precomp(grid: TimeGrid, spec: PulseSpec, dispersion_ps2: float) -> ComplexEnvelope:
    """Analytic pre-chirped Gaussian for a fiber of accumulated dispersion D.

    Equal to the Gaussian of width T0 propagated through -D:
    0.7511 sqrt(T0) exp(-t^2 / (2 (T0^2 + iD))) / sqrt(T0^2 + iD).
    """
    t0 = spec.t0_ps
    d = dispersion_ps2
    denom = t0**4 + d**2
    t = grid.t_ps - spec.center_ps
    mag = spec.norm_const * math.sqrt(t0) * np.exp(-(t**2) * t0**2 / (2.0 * denom)) / denom**0.25
    phase = d * t**2 / (2.0 * denom) - 0.5 * math.atan2(d, t0**2)
    return ComplexEnvelope(grid, mag * np.exp(1j * phase))


def gaussian_width(env: ComplexEnvelope) -> float:
    """Gaussian width W of |env| ~ exp(-t^2/(2 W^2)), from the second moment of |env|^2."""
    p = np.abs(env.amplitude) ** 2
    t = env.t_ps
    mean = np.sum(t * p) / np.sum(p)
    var = np.sum((t - mean) ** 2 * p) / np.sum(p)
    return float(np.sqrt(2.0 * var))


def modulator_drives(env: ComplexEnvelope, threshold: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    """Split an envelope into intensity-modulator and phase-modulator drives.

    Returns:
        (intensity, phase): intensity is |env|^2 normalised to a peak of 1;
        phase is the unwrapped argument in radians, zeroed wherever |env| is
        below ``threshold`` times its peak.
    """
    mag = np.abs(env.amplitude)
    peak = mag.max()
    if peak == 0:
        raise ValueError("cannot derive modulator drives from an all-zero envelope")
    intensity = (mag / peak) ** 2
    phase = np.zeros(env.grid.n_samples)
    keep = np.flatnonzero(mag >= threshold * peak)
    phase[keep] = np.unwrap(np.angle(env.amplitude[keep]))
    return intensity, phase


def reconstruct_from_drives(intensity: np.ndarray, phase: np.ndarray, peak_power: float = 1.0) -> np.ndarray:
    """Field produced by driving the modulators with ``intensity`` and ``phase``."""
    return np.sqrt(intensity * peak_power) * np.exp(1j * phase)
