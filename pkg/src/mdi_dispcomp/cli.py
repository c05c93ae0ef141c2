"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 numerical or estimation
failure, 4 protocol inconclusive (the report is still written).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .config import Config, SimParams, dump_config, parse_config
from .errors import ConfigurationError, DispCompError, EstimationError
from .estimator import NoiseSpec, estimate_alpha, format_table, run_blind_protocol
from .hom import (
    analytic_fwhm,
    coincidence_curve,
    default_delays,
    extract_summary,
    simulate_counts,
)
from .keyrate import sweep
from .signal import (
    PulseSpec,
    check_truncation,
    closed_form_precomp,
    gaussian_pulse,
    grid_for,
    make_time_grid,
    modulator_drives,
    precompensate,
    propagate,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_INCONCLUSIVE = 4

COMMANDS = ("pulse", "compensate", "hom", "estimate", "protocol", "keyrate")


@dataclass
class RunReport:
    command: str
    inputs: Config
    outputs: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    exit_code: int = EXIT_OK

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "inputs": self.inputs.to_dict(),
            "outputs": [str(p) for p in self.outputs],
            "diagnostics": list(self.diagnostics),
            "exit_code": self.exit_code,
        }


def _grid(config: Config, *dispersions, delay_reach_ps: float = 0.0):
    sim = config.sim
    t0 = config.system.t0_ps
    if sim.span_ps is not None:
        return make_time_grid(sim.n_samples or 4096, sim.span_ps)
    return grid_for(t0, *dispersions, delay_reach_ps=delay_reach_ps,
                    min_samples=sim.n_samples or 4096)


def _delays(sim: SimParams, t0_ps: float, alpha_ps2: float):
    if sim.delay_min_ps is not None:
        return np.linspace(sim.delay_min_ps, sim.delay_max_ps, sim.delay_steps)
    return default_delays(t0_ps, alpha_ps2, sim.delay_steps)


def _arm_dispersion(config: Config, arm: str) -> float:
    if arm == "none":
        return 0.0
    return (config.fiber_a if arm == "a" else config.fiber_b).dispersion_ps2


def _noise(sim: SimParams):
    if sim.counts_per_bin is None:
        return None
    if sim.seed is None:
        raise ConfigurationError("noisy runs need an explicit seed (--seed or sim.seed)", "sim.seed")
    return NoiseSpec(sim.counts_per_bin, sim.seed)


def cmd_pulse(config: Config, args, report: RunReport) -> None:
    d = _arm_dispersion(config, args.arm)
    grid = _grid(config, d)
    env = propagate(gaussian_pulse(grid, PulseSpec(config.system.t0_ps)), d)
    check_truncation(env)
    report.outputs.append(io.write_envelope(args.out / "pulse_envelope.csv", env))


def cmd_compensate(config: Config, args, report: RunReport) -> None:
    d = _arm_dispersion(config, args.arm)
    grid = _grid(config, d)
    spec = PulseSpec(config.system.t0_ps)
    if args.method == "closed_form":
        env = closed_form_precomp(grid, spec, d)
    else:
        env = precompensate(gaussian_pulse(grid, spec), d)
    check_truncation(env)
    intensity, phase = modulator_drives(env)
    report.outputs.append(io.write_envelope(args.out / "precomp_envelope.csv", env))
    report.outputs.append(io.write_modulator(args.out / "modulator_drives.csv", env.t_ps, intensity, phase))


def cmd_hom(config: Config, args, report: RunReport) -> None:
    d_a = config.fiber_a.dispersion_ps2
    d_b = config.fiber_b.dispersion_ps2
    spec = PulseSpec(config.system.t0_ps)
    residual = (0.0 if args.compensate == "a" else d_a) - (0.0 if args.compensate == "b" else d_b)
    delays = _delays(config.sim, spec.t0_ps, residual)
    grid = _grid(config, d_a, d_b, delay_reach_ps=float(np.max(np.abs(delays))))
    ref = gaussian_pulse(grid, spec)
    sent_a = closed_form_precomp(grid, spec, d_a) if args.compensate == "a" else ref
    sent_b = closed_form_precomp(grid, spec, d_b) if args.compensate == "b" else ref
    at_a = propagate(sent_a, d_a)
    at_b = propagate(sent_b, d_b)
    for env in (at_a, at_b):
        check_truncation(env)
    curve = coincidence_curve(at_a, at_b, delays, config.system.v_max)
    noise = _noise(config.sim)
    if noise is not None:
        curve = simulate_counts(curve, noise.mean_counts, noise.seed)
    report.outputs.append(io.write_curve(args.out / "coincidence.csv", curve))
    summary = extract_summary(curve)
    report.outputs.append(io.write_summary(args.out / "hom_summary.json", summary))


def cmd_estimate(config: Config, args, report: RunReport) -> None:
    if args.curve is None:
        raise ConfigurationError("estimate needs --curve PATH")
    try:
        curve = io.read_curve(args.curve)
    except (OSError, ValueError) as exc:
        raise ConfigurationError(f"cannot read curve: {exc}", "--curve") from None
    summary = extract_summary(curve)
    t0 = config.system.t0_ps
    from_fwhm = estimate_alpha(summary, t0, "fwhm")
    from_vis = estimate_alpha(summary, t0, "visibility")
    chosen = {"fwhm": from_fwhm, "visibility": from_vis, "mean": 0.5 * (from_fwhm + from_vis)}
    payload = {
        "alpha_hat_ps2": chosen[config.sim.alpha_source],
        "alpha_source": config.sim.alpha_source,
        "alpha_from_fwhm_ps2": from_fwhm,
        "alpha_from_visibility_ps2": from_vis,
        "expected_fwhm_paper_ps": analytic_fwhm(t0, 0.0),
        "summary": summary.to_dict(),
    }
    report.outputs.append(io.write_json(args.out / "estimate.json", payload))


def cmd_protocol(config: Config, args, report: RunReport) -> None:
    sim = config.sim
    delays = None
    if sim.delay_min_ps is not None:
        delays = np.linspace(sim.delay_min_ps, sim.delay_max_ps, sim.delay_steps)
    result = run_blind_protocol(
        config.fiber_a,
        config.fiber_b,
        config.system.t0_ps,
        noise=_noise(sim),
        tie_threshold=sim.tie_threshold,
        alpha_source=sim.alpha_source,
        sign_policy=sim.sign_policy,
        delay_steps=sim.delay_steps,
        delays_ps=delays,
    )
    report.outputs.append(io.write_json(args.out / "protocol_report.json", result.to_dict()))
    report.outputs.append(io.atomic_write_text(args.out / "protocol_table.txt", format_table(result)))
    report.diagnostics.extend(result.diagnostics)
    if result.selected == "inconclusive":
        report.exit_code = EXIT_INCONCLUSIVE


def cmd_keyrate(config: Config, args, report: RunReport) -> None:
    sim = config.sim
    points = sweep(
        config.system,
        (sim.sweep_start_km, sim.sweep_stop_km),
        sim.sweep_step_km,
        reference_length_km=sim.reference_length_km,
        mode=sim.rate_mode,
    )
    report.outputs.append(io.write_sweep(args.out / "keyrate_sweep.csv", points))


HANDLERS = {
    "pulse": cmd_pulse,
    "compensate": cmd_compensate,
    "hom": cmd_hom,
    "estimate": cmd_estimate,
    "protocol": cmd_protocol,
    "keyrate": cmd_keyrate,
}


def dispatch(command: str, args, config: Config) -> RunReport:
    if command not in HANDLERS:
        raise ConfigurationError(f"unknown command {command!r}")
    report = RunReport(command, config)
    HANDLERS[command](config, args, report)
    return report


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file (defaults apply when omitted)")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one config value; repeatable")
    common.add_argument("--seed", type=int, help="seed for noisy runs (overrides sim.seed)")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
    common.add_argument("--dump-config", action="store_true", help="also write the resolved config.json")

    parser = argparse.ArgumentParser(
        prog="mdi-dispcomp",
        description="Dispersion pre-compensation and HOM simulation for asymmetric MDI-QKD links.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("pulse", parents=[common], help="write a Gaussian reference envelope")
    p.add_argument("--arm", choices=("none", "a", "b"), default="none",
                   help="propagate through this arm's fiber first")
    p = sub.add_parser("compensate", parents=[common], help="pre-compensated envelope and modulator drives")
    p.add_argument("--arm", choices=("a", "b"), default="b")
    p.add_argument("--method", choices=("closed_form", "spectral"), default="closed_form")
    p = sub.add_parser("hom", parents=[common], help="HOM coincidence curve and dip summary")
    p.add_argument("--compensate", choices=("none", "a", "b"), default="none")
    p = sub.add_parser("estimate", parents=[common], help="estimate |alpha| from a coincidence CSV")
    p.add_argument("--curve", type=Path, help="CSV with header delay_ps,coincidence_norm")
    sub.add_parser("protocol", parents=[common], help="blind compensation-side selection")
    sub.add_parser("keyrate", parents=[common], help="secret key rate sweep")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = list(args.overrides)
        if args.seed is not None:
            overrides.append(f"sim.seed={args.seed}")
        config = parse_config(args.config, overrides)
        report = dispatch(args.command, args, config)
        if args.dump_config:
            report.outputs.append(io.atomic_write_text(args.out / "config.json", dump_config(config)))
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EstimationError, DispCompError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for line in report.diagnostics:
        print(f"warning: {line}", file=sys.stderr)
    print(json.dumps(report.to_dict(), indent=2))
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
