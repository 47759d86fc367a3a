"""Flat ``key = value`` run configuration.

Keys are dotted (``noise.accel = 0.09``). Angles are radians except keys
ending in ``_deg``. Vectors are whitespace-separated numbers. Unknown keys are
rejected so that typos do not silently fall back to defaults.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .estimator import PriorStd
from .evaluation import StudySettings
from .process import ProcessNoiseParams
from .simulator import GaitSpec


class ConfigError(ValueError):
    pass


_DEFAULT_GAIT = GaitSpec()

DEFAULTS: dict[str, object] = {
    # sensor noise standard deviations
    "noise.accel": 0.09,
    "noise.gyro": 0.01,
    "noise.accel_bias": 0.01,
    "noise.gyro_bias": 0.001,
    "noise.foot_lin": 0.009,
    "noise.foot_ang": 0.004,
    "noise.encoder_deg": 0.1,
    "noise.swing_inflation": 1e4,
    # prior standard deviations
    "prior.position": 0.01,
    "prior.orientation_deg": 10.0,
    "prior.velocity": 0.5,
    "prior.accel_bias": 0.01,
    "prior.gyro_bias": 0.002,
    "gravity": 9.80665,
    "dt": 0.01,
    "seed": 0,
    "model": "",
    "filter.gate_chi2": 0.0,
    # where the filter starts: "truth" uses the dataset's first ground-truth row
    "init.mode": "truth",
    "init.position": (0.0, 0.0, 0.0),
    "init.rotation": (0.0, 0.0, 0.0),
    "init.velocity": (0.0, 0.0, 0.0),
    "gait.step_length": _DEFAULT_GAIT.step_length,
    "gait.step_duration": _DEFAULT_GAIT.step_duration,
    "gait.double_support_fraction": _DEFAULT_GAIT.double_support_fraction,
    "gait.base_height": _DEFAULT_GAIT.base_height,
    "gait.sway_amplitude": _DEFAULT_GAIT.sway_amplitude,
    "gait.duration": _DEFAULT_GAIT.duration,
    "gait.stance_width": _DEFAULT_GAIT.stance_width,
    "gait.foot_clearance": _DEFAULT_GAIT.foot_clearance,
    "gait.tilt_amplitude": _DEFAULT_GAIT.tilt_amplitude,
    "gait.accel_bias": tuple(_DEFAULT_GAIT.accel_bias),
    "gait.gyro_bias": tuple(_DEFAULT_GAIT.gyro_bias),
    "sim.noise_scale": 1.0,
    "eval.rpe_window": 1.0,
    "converge.trials": 25,
    "converge.max_tilt_deg": 30.0,
    "converge.max_velocity": 0.5,
    "converge.settle_time": 5.0,
    "converge.tilt_tol_deg": 2.0,
    "converge.velocity_tol": 0.05,
    "converge.workers": 1,
}

_INIT_MODES = ("truth", "config")


def _parse_value(key: str, text: str, default):
    try:
        if isinstance(default, tuple):
            vals = tuple(float(x) for x in text.replace(",", " ").split())
            if len(vals) != len(default):
                raise ValueError(f"expected {len(default)} numbers")
            return vals
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        return text
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def _format_value(v) -> str:
    if isinstance(v, tuple):
        return " ".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class RunConfig:
    values: dict[str, object] = field(default_factory=lambda: dict(DEFAULTS))

    def __post_init__(self):
        merged = dict(DEFAULTS)
        for k, v in self.values.items():
            if k not in DEFAULTS:
                raise ConfigError(f"unknown key {k!r}")
            merged[k] = v
        self.values = merged
        self.validate()

    def __getitem__(self, key: str):
        return self.values[key]

    def with_overrides(self, **kw) -> "RunConfig":
        """Override by dotted key; pass keys with dots replaced by ``__``."""
        vals = dict(self.values)
        for k, v in kw.items():
            vals[k.replace("__", ".")] = v
        return RunConfig(vals)

    def validate(self) -> None:
        for k, v in self.values.items():
            if (k.startswith("noise.") or k.startswith("prior.")) and float(v) < 0:
                raise ConfigError(f"{k} must be non-negative")
        if not self["dt"] > 0:
            raise ConfigError("dt must be positive")
        if self["init.mode"] not in _INIT_MODES:
            raise ConfigError(f"init.mode must be one of {_INIT_MODES}")
        if not 0 <= self["seed"] < 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")

    # --- text form

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        vals: dict[str, object] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in DEFAULTS:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            vals[key] = _parse_value(key, val, DEFAULTS[key])
        return cls(vals)

    def serialize(self) -> str:
        return "".join(f"{k} = {_format_value(v)}\n" for k, v in sorted(self.values.items()))

    @classmethod
    def load(cls, path: str | Path | None) -> "RunConfig":
        if path is None:
            return cls()
        return cls.parse(Path(path).read_text(encoding="utf-8"))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.serialize(), encoding="utf-8", newline="\n")

    # --- typed views

    def noise_params(self) -> ProcessNoiseParams:
        return ProcessNoiseParams(
            accel=self["noise.accel"], gyro=self["noise.gyro"],
            accel_bias=self["noise.accel_bias"], gyro_bias=self["noise.gyro_bias"],
            foot_lin=self["noise.foot_lin"], foot_ang=self["noise.foot_ang"],
            swing_inflation=self["noise.swing_inflation"],
        )

    @property
    def encoder_std(self) -> float:
        return math.radians(self["noise.encoder_deg"])

    def prior(self) -> PriorStd:
        return PriorStd(
            position=self["prior.position"], orientation=math.radians(self["prior.orientation_deg"]),
            velocity=self["prior.velocity"], accel_bias=self["prior.accel_bias"],
            gyro_bias=self["prior.gyro_bias"],
        )

    def gait(self) -> GaitSpec:
        g = {k.split(".", 1)[1]: v for k, v in self.values.items() if k.startswith("gait.")}
        return GaitSpec(rate=1.0 / self["dt"], seed=self["seed"], **g)

    def study(self) -> StudySettings:
        return StudySettings(
            n_trials=self["converge.trials"], max_tilt_deg=self["converge.max_tilt_deg"],
            max_velocity=self["converge.max_velocity"], settle_time=self["converge.settle_time"],
            tilt_tol_deg=self["converge.tilt_tol_deg"], velocity_tol=self["converge.velocity_tol"],
            seed=self["seed"],
        )

    @property
    def gate(self) -> float | None:
        g = self["filter.gate_chi2"]
        return g if g > 0 else None
