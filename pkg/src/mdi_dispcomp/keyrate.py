"""Secret key rate of an MDI-QKD link whose X-basis error depends on HOM visibility.

Gains follow a simple two-arm loss model with dark counts (no decoy-state
estimation). The X-basis single-photon error comes from mixing the singlet
detection probabilities of interfering and distinguishable photon pairs,
weighted by the normalised indistinguishability V / v_max.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .hom import analytic_visibility

X_PAIRS = ("++", "+-", "-+", "--")
REGIMES = ("interfering", "non_interfering")
RATE_MODES = ("verbatim", "asymptotic")


@dataclass(frozen=True)
class SystemParams:
    mu_a: float = 0.5
    mu_b: float = 0.5
    eta_det: float = 0.145
    p_dark: float = 3e-6
    e_align: float = 0.015
    f_ec: float = 1.14
    eps_cor: float = 1e-10
    eps_sec: float = 1e-10
    loss_db_per_km: float = 0.2
    t0_ps: float = 20.0
    beta2_ps2_per_km: float = 20.0
    v_max: float = 0.5

    def __post_init__(self):
        checks = {
            "mu_a": self.mu_a > 0,
            "mu_b": self.mu_b > 0,
            "eta_det": 0 < self.eta_det <= 1,
            "p_dark": 0 <= self.p_dark < 1,
            "e_align": 0 <= self.e_align < 0.5,
            "f_ec": self.f_ec >= 1,
            "eps_cor": 0 < self.eps_cor < 1,
            "eps_sec": 0 < self.eps_sec < 1,
            "loss_db_per_km": self.loss_db_per_km >= 0,
            "t0_ps": self.t0_ps > 0,
            "v_max": 0 < self.v_max <= 1,
        }
        for name, ok in checks.items():
            if not ok:
                raise ConfigurationError(f"value {getattr(self, name)!r} out of range", name)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Gains:
    q_z11: float
    q_z_mu_sigma: float
    e_z_mu_sigma: float
    e11_x: float


@dataclass(frozen=True)
class RatePoint:
    length_km: float
    skr_uncompensated: float
    skr_compensated: float
    skr_uncompensated_raw: float
    skr_compensated_raw: float
    visibility_uncompensated: float
    e11x_uncompensated: float


def binary_entropy(p: float) -> float:
    if not 0 <= p <= 1:
        raise DomainError(f"probability {p} outside [0, 1]")
    if p == 0 or p == 1:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def _x_state(sign: str) -> np.ndarray:
    """Time-bin amplitudes (early, late) of an X-basis state."""
    return np.array([1.0, 1.0 if sign == "+" else -1.0]) / math.sqrt(2.0)


# 50:50 beam splitter, rows = outputs (c, d), columns = inputs (a, b)
_BS = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)


def _output_amplitudes(port: int, bins: np.ndarray) -> dict:
    """Single-photon amplitude on each output mode (detector, time bin)."""
    return {(det, tb): _BS[det, port] * bins[tb] for det in (0, 1) for tb in (0, 1)}


def bsm_singlet_prob(inputs: str, regime: str) -> float:
    """Probability of the singlet signature for one photon from each party.

    The signature is one click in each detector, in different time bins.
    Enumerates every pair of output modes; interfering photons add
    symmetrised amplitudes, distinguishable photons add probabilities.
    """
    if inputs not in X_PAIRS:
        raise ValueError(f"inputs must be one of {X_PAIRS}, got {inputs!r}")
    if regime not in REGIMES:
        raise ValueError(f"regime must be one of {REGIMES}, got {regime!r}")
    amp_a = _output_amplitudes(0, _x_state(inputs[0]))
    amp_b = _output_amplitudes(1, _x_state(inputs[1]))
    total = 0.0
    for m1, m2 in itertools.combinations(sorted(amp_a), 2):
        if m1[0] == m2[0] or m1[1] == m2[1]:
            continue
        if regime == "interfering":
            total += abs(amp_a[m1] * amp_b[m2] + amp_a[m2] * amp_b[m1]) ** 2
        else:
            total += abs(amp_a[m1] * amp_b[m2]) ** 2 + abs(amp_a[m2] * amp_b[m1]) ** 2
    return total


def singlet_prob_mixed(weight: float, inputs: str) -> float:
    """weight * P(interfering) + (1 - weight) * P(non-interfering)."""
    if not 0 <= weight <= 1:
        raise DomainError(f"weight {weight} outside [0, 1]")
    return weight * bsm_singlet_prob(inputs, "interfering") + (1 - weight) * bsm_singlet_prob(
        inputs, "non_interfering"
    )


def qber_x(indistinguishability: float, e_align: float) -> float:
    """Single-photon X-basis error for a given indistinguishability I = V / v_max."""
    if not 0 <= indistinguishability <= 1:
        raise DomainError(f"indistinguishability {indistinguishability} outside [0, 1]")
    if not 0 <= e_align < 0.5:
        raise DomainError(f"e_align {e_align} outside [0, 0.5)")
    probs = {pair: singlet_prob_mixed(indistinguishability, pair) for pair in X_PAIRS}
    same = probs["++"] + probs["--"]
    e_mix = same / sum(probs.values())
    return e_mix + e_align * (1 - 2 * e_mix)


def channel_gains(params: SystemParams, length_a_km: float, length_b_km: float, visibility: float) -> Gains:
    if length_a_km < 0 or length_b_km < 0:
        raise DomainError("arm lengths must be non-negative")
    if not 0 < visibility <= params.v_max * (1 + 1e-12):
        raise DomainError(f"visibility {visibility} outside (0, {params.v_max}]")
    eta_a = params.eta_det * 10 ** (-params.loss_db_per_km * length_a_km / 10)
    eta_b = params.eta_det * 10 ** (-params.loss_db_per_km * length_b_km / 10)
    mu_prod = params.mu_a * params.mu_b
    vacuum = math.exp(-params.mu_a - params.mu_b)
    signal = 0.5 * mu_prod * eta_a * eta_b * vacuum
    dark = 2 * params.p_dark
    q_z11 = mu_prod * vacuum * (0.5 * eta_a * eta_b + 2 * params.p_dark)
    q_total = signal + dark
    e_z = (params.e_align * signal + 0.5 * dark) / q_total
    return Gains(
        q_z11=q_z11,
        q_z_mu_sigma=q_total,
        e_z_mu_sigma=e_z,
        e11_x=qber_x(min(visibility / params.v_max, 1.0), params.e_align),
    )


def finite_size_penalty(params: SystemParams) -> float:
    return math.log2(8 / params.eps_cor) + 2 * math.log2(2 / params.eps_sec)


def secret_key(gains: Gains, params: SystemParams, mode: str = "asymptotic") -> tuple[float, float]:
    """Secret key rate as (raw, clamped at zero)."""
    if mode not in RATE_MODES:
        raise ValueError(f"mode must be one of {RATE_MODES}, got {mode!r}")
    s = gains.q_z11 * (1 - binary_entropy(gains.e11_x)) - params.f_ec * gains.q_z_mu_sigma * binary_entropy(
        gains.e_z_mu_sigma
    )
    if mode == "verbatim":
        s -= finite_size_penalty(params)
    return s, max(s, 0.0)


def rate_point(params: SystemParams, length_km: float, reference_length_km: float = 0.0,
               mode: str = "asymptotic") -> RatePoint:
    """Key rates with the dispersive arm at ``length_km`` and a dispersion-free reference arm."""
    alpha = params.beta2_ps2_per_km * length_km
    v_unc = params.v_max * 2 * analytic_visibility(params.t0_ps, alpha)
    g_unc = channel_gains(params, length_km, reference_length_km, v_unc)
    g_comp = channel_gains(params, length_km, reference_length_km, params.v_max)
    raw_unc, s_unc = secret_key(g_unc, params, mode)
    raw_comp, s_comp = secret_key(g_comp, params, mode)
    return RatePoint(
        length_km=length_km,
        skr_uncompensated=s_unc,
        skr_compensated=s_comp,
        skr_uncompensated_raw=raw_unc,
        skr_compensated_raw=raw_comp,
        visibility_uncompensated=v_unc,
        e11x_uncompensated=g_unc.e11_x,
    )


def sweep(params: SystemParams, length_range_km=(0.0, 100.0), step_km: float = 1.0,
          reference_length_km: float = 0.0, mode: str = "asymptotic") -> list[RatePoint]:
    """Rates with and without compensation over a range of dispersive-arm lengths.

    Compensation only restores the visibility; both branches see the same
    fiber loss.
    """
    start, stop = length_range_km
    if not step_km > 0 or stop < start or start < 0:
        raise ConfigurationError(f"invalid sweep range {length_range_km} with step {step_km}")
    n = int(math.floor((stop - start) / step_km + 1e-9)) + 1
    lengths = start + step_km * np.arange(n)
    return [rate_point(params, float(L), reference_length_km, mode) for L in lengths]


def max_positive_distance(points: list[RatePoint], compensated: bool) -> float:
    """Largest swept length with a strictly positive raw key rate (0.0 if none)."""
    best = 0.0
    for p in points:
        raw = p.skr_compensated_raw if compensated else p.skr_uncompensated_raw
        if raw > 0:
            best = max(best, p.length_km)
    return best


def improvement_ratio(point: RatePoint) -> float:
    """skr_compensated / skr_uncompensated on clamped rates; inf if only the compensated rate is positive."""
    if point.skr_uncompensated > 0:
        return point.skr_compensated / point.skr_uncompensated
    return math.inf if point.skr_compensated > 0 else math.nan
