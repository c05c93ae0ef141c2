"""CSV and JSON artifact writers and readers."""

from __future__ import annotations

import csv
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .hom import CoincidenceCurve, HomSummary
from .keyrate import RatePoint
from .signal import ComplexEnvelope

ENVELOPE_HEADER = ("t_ps", "re", "im", "mag", "phase_rad")
MODULATOR_HEADER = ("t_ps", "intensity_norm", "phase_rad")
CURVE_HEADER = ("delay_ps", "coincidence_norm")
SWEEP_HEADER = (
    "length_km",
    "skr_uncompensated",
    "skr_compensated",
    "visibility_uncompensated",
    "e11x_uncompensated",
)


def fmt(x) -> str:
    return format(float(x), ".17g")


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path, header, columns) -> Path:
    rows = [",".join(header)]
    for row in zip(*columns):
        rows.append(",".join(fmt(v) for v in row))
    return atomic_write_text(path, "\n".join(rows) + "\n")


def write_json(path, payload) -> Path:
    return atomic_write_text(path, json.dumps(payload, indent=2) + "\n")


def write_envelope(path, env: ComplexEnvelope) -> Path:
    a = env.amplitude
    return write_csv(path, ENVELOPE_HEADER, (env.t_ps, a.real, a.imag, np.abs(a), np.angle(a)))


def write_modulator(path, t_ps, intensity, phase) -> Path:
    return write_csv(path, MODULATOR_HEADER, (t_ps, intensity, phase))


def write_curve(path, curve: CoincidenceCurve) -> Path:
    return write_csv(path, CURVE_HEADER, (curve.delays_ps, curve.coincidence))


def write_summary(path, summary: HomSummary) -> Path:
    return write_json(path, summary.to_dict())


def write_sweep(path, points: list[RatePoint]) -> Path:
    cols = [[getattr(p, name) for p in points] for name in SWEEP_HEADER]
    return write_csv(path, SWEEP_HEADER, cols)


def read_curve(path) -> CoincidenceCurve:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != CURVE_HEADER:
            raise ValueError(f"{path}: expected header {','.join(CURVE_HEADER)}, got {','.join(header)}")
        delays, values = [], []
        for line in reader:
            if not line:
                continue
            delays.append(float(line[0]))
            values.append(float(line[1]))
    return CoincidenceCurve(np.array(delays), np.array(values), 1.0)
