"""JSON run configuration: parsing, validation, defaults and overrides."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError
from .estimator import ALPHA_SOURCES, SIGN_POLICIES
from .keyrate import RATE_MODES, SystemParams
from .signal import FiberSpec, TimeGrid


@dataclass(frozen=True)
class SimParams:
    n_samples: int | None = None
    span_ps: float | None = None
    delay_min_ps: float | None = None
    delay_max_ps: float | None = None
    delay_steps: int = 201
    seed: int | None = None
    counts_per_bin: float | None = None
    tie_threshold: float = 0.05
    alpha_source: str = "fwhm"
    sign_policy: str = "fiber"
    sweep_start_km: float = 0.0
    sweep_stop_km: float = 100.0
    sweep_step_km: float = 1.0
    reference_length_km: float = 0.0
    rate_mode: str = "asymptotic"

    def __post_init__(self):
        if self.n_samples is not None:
            try:
                TimeGrid(self.n_samples, 1.0)
            except ConfigurationError as exc:
                raise ConfigurationError(str(exc), "n_samples") from None
        if self.span_ps is not None and not self.span_ps > 0:
            raise ConfigurationError(f"must be positive, got {self.span_ps}", "span_ps")
        if (self.delay_min_ps is None) != (self.delay_max_ps is None):
            raise ConfigurationError("set both delay_min_ps and delay_max_ps or neither", "delay_min_ps")
        if self.delay_min_ps is not None and not self.delay_min_ps < self.delay_max_ps:
            raise ConfigurationError("delay_min_ps must be below delay_max_ps", "delay_min_ps")
        if self.delay_steps < 64:
            raise ConfigurationError(f"need at least 64 delay steps, got {self.delay_steps}", "delay_steps")
        if self.counts_per_bin is not None and not self.counts_per_bin > 0:
            raise ConfigurationError(f"must be positive, got {self.counts_per_bin}", "counts_per_bin")
        if not self.tie_threshold >= 0:
            raise ConfigurationError(f"must be >= 0, got {self.tie_threshold}", "tie_threshold")
        if self.alpha_source not in ALPHA_SOURCES:
            raise ConfigurationError(f"must be one of {ALPHA_SOURCES}", "alpha_source")
        if self.sign_policy not in SIGN_POLICIES:
            raise ConfigurationError(f"must be one of {SIGN_POLICIES}", "sign_policy")
        if self.rate_mode not in RATE_MODES:
            raise ConfigurationError(f"must be one of {RATE_MODES}", "rate_mode")
        if not (0 <= self.sweep_start_km <= self.sweep_stop_km and self.sweep_step_km > 0):
            raise ConfigurationError("need 0 <= sweep_start_km <= sweep_stop_km and sweep_step_km > 0",
                                     "sweep_step_km")
        if not self.reference_length_km >= 0:
            raise ConfigurationError("must be >= 0", "reference_length_km")


@dataclass(frozen=True)
class Config:
    system: SystemParams = field(default_factory=SystemParams)
    fiber_a: FiberSpec = field(default_factory=lambda: FiberSpec(20.0, 0.0, 0.2))
    fiber_b: FiberSpec = field(default_factory=lambda: FiberSpec(20.0, 60.0, 0.2))
    sim: SimParams = field(default_factory=SimParams)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_SECTIONS = {"system": SystemParams, "fiber_a": FiberSpec, "fiber_b": FiberSpec, "sim": SimParams}


def _coerce(value, type_name: str, key_path: str):
    optional = type_name.endswith("| None")
    base = type_name.replace("| None", "").strip()
    if value is None:
        if optional:
            return None
        raise ConfigurationError("null is not allowed", key_path)
    if base == "str":
        if not isinstance(value, str):
            raise ConfigurationError(f"expected a string, got {value!r}", key_path)
        return value
    if isinstance(value, bool):
        raise ConfigurationError(f"expected a number, got {value!r}", key_path)
    if base == "int":
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int):
            raise ConfigurationError(f"expected an integer, got {value!r}", key_path)
        return value
    if not isinstance(value, (int, float)):
        raise ConfigurationError(f"expected a number, got {value!r}", key_path)
    return float(value)


def _build_section(name: str, raw) -> object:
    cls = _SECTIONS[name]
    if not isinstance(raw, dict):
        raise ConfigurationError("expected an object", name)
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        path = f"{name}.{key}"
        if key not in fields:
            raise ConfigurationError("unknown key", path)
        kwargs[key] = _coerce(value, str(fields[key].type), path)
    try:
        return cls(**kwargs)
    except ConfigurationError as exc:
        inner = exc.key_path or next(iter(kwargs), "")
        message = str(exc).split(": ", 1)[-1] if exc.key_path else str(exc)
        raise ConfigurationError(message, f"{name}.{inner}" if inner else name) from None


def config_from_dict(raw: dict) -> Config:
    if not isinstance(raw, dict):
        raise ConfigurationError("top level must be a JSON object")
    for key in raw:
        if key not in _SECTIONS:
            raise ConfigurationError("unknown key", key)
    return Config(**{name: _build_section(name, raw[name]) for name in _SECTIONS if name in raw})


def apply_overrides(raw: dict, assignments) -> dict:
    """Apply ``section.key=value`` strings; values are read as JSON when possible."""
    out = {k: dict(v) if isinstance(v, dict) else v for k, v in raw.items()}
    for item in assignments or ():
        if "=" not in item:
            raise ConfigurationError(f"override {item!r} is not of the form section.key=value")
        path, text = item.split("=", 1)
        parts = path.strip().split(".")
        if len(parts) != 2:
            raise ConfigurationError("override keys must be section.key", path)
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        section = out.setdefault(parts[0], {})
        if not isinstance(section, dict):
            raise ConfigurationError("expected an object", parts[0])
        section[parts[1]] = value
    return out


def parse_config(path=None, overrides=None) -> Config:
    """Read a JSON config file (or start from ``{}``) and validate it."""
    raw = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigurationError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"invalid JSON: {exc}") from None
    return config_from_dict(apply_overrides(raw, overrides))


def dump_config(config: Config) -> str:
    return json.dumps(config.to_dict(), indent=2) + "\n"
