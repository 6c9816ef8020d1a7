"""Run configuration: dataclasses, validation, YAML persistence.

Omitted controller fields fall back to the stock gain set (constant
stiffness 100 N/m and 5 N.m/rad, saturation errors 0.05 m and 0.0873 rad,
fractal damping 2.5 N.s/m and 1.25 N.m.s/rad, baseline damping 20 N.s/m).
A persisted config re-runs to a bit-identical trace; the config hash in
trace sidecars is derived from the canonical JSON form.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from .baseline import IcGains
from .fic import ProfileError, StiffnessProfile

SCENARIOS = (
    "exp1_drilling",
    "drilling_accuracy",
    "inclination_funnel",
    "payload_carry",
    "cooperative_hold",
    "teleop_tracking",
    "interactive",
)


class ConfigError(ValueError):
    """Invalid or unparsable run configuration (CLI exit code 2)."""


@dataclass
class ProfileConfig:
    """One diagonal block of the nonlinear controller (linear or angular)."""

    k_zeta: float
    f_max: float
    x_b: float
    damping: float

    def to_profile(self, where: str) -> StiffnessProfile:
        try:
            return StiffnessProfile.from_limits(self.k_zeta, self.f_max, self.x_b)
        except ProfileError as exc:
            raise ConfigError(f"{where}: {exc}") from exc


@dataclass
class IcConfig:
    k_lin: float = 100.0
    d_lin: float = 20.0
    k_ang: float = 5.0
    d_ang: float = 1.25

    def to_gains(self, where: str) -> IcGains:
        try:
            return IcGains(self.k_lin, self.k_ang, self.d_lin, self.d_ang)
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from exc


@dataclass
class ControllerConfig:
    kind: str = "fic"
    linear: ProfileConfig = field(default_factory=lambda: ProfileConfig(100.0, 15.0, 0.05, 2.5))
    angular: ProfileConfig = field(default_factory=lambda: ProfileConfig(5.0, 2.0, 0.0873, 1.25))
    ic: IcConfig = field(default_factory=IcConfig)

    def profiles(self) -> list[StiffnessProfile]:
        lin = self.linear.to_profile("controller.linear")
        ang = self.angular.to_profile("controller.angular")
        return [lin] * 3 + [ang] * 3

    def damping(self):
        import numpy as np

        return np.array([self.linear.damping] * 3 + [self.angular.damping] * 3)


@dataclass
class MasterConfig:
    """Master-device centering controller (zero stiffness floor by default)."""

    linear: ProfileConfig = field(default_factory=lambda: ProfileConfig(0.0, 15.0, 0.05, 2.5))
    angular: ProfileConfig = field(default_factory=lambda: ProfileConfig(0.0, 2.0, 0.0873, 0.0))
    workspace_half_width: float = 0.1
    scale: float = 1.0
    feedback_gain: float = 1.0

    def profiles(self) -> list[StiffnessProfile]:
        lin = self.linear.to_profile("master.linear")
        ang = self.angular.to_profile("master.angular")
        return [lin] * 3 + [ang] * 3

    def damping(self):
        import numpy as np

        return np.array([self.linear.damping] * 3 + [self.angular.damping] * 3)


@dataclass
class PlantConfig:
    kind: str = "planar"
    link_lengths: list[float] = field(default_factory=lambda: [0.3, 0.3, 0.2])
    link_masses: list[float] = field(default_factory=lambda: [2.0, 1.5, 1.0])
    gravity_on: bool = False
    base: list[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])


@dataclass
class ChannelConfig:
    delay: float = 0.0
    sample_rate: float = 1000.0
    drop_probability: float = 0.0


@dataclass
class RunConfig:
    scenario: str = "teleop_tracking"
    seed: int = 0
    dt: float = 1e-3
    duration: float = 10.0
    plant: PlantConfig = field(default_factory=PlantConfig)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    master: MasterConfig = field(default_factory=MasterConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    params: dict = field(default_factory=dict)


def _coerce(cls, raw: dict, where: str):
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(raw).__name__}")
    known = {f.name: f for f in fields(cls)}
    unknown = set(raw) - set(known)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kwargs = {}
    nested = {
        "plant": PlantConfig, "controller": ControllerConfig, "channel": ChannelConfig,
        "linear": ProfileConfig, "angular": ProfileConfig, "ic": IcConfig,
        "master": MasterConfig,
    }
    for name, value in raw.items():
        if name in nested and isinstance(value, dict):
            base = nested[name]
            if base is ProfileConfig:
                defaults = _profile_defaults(cls, name)
                merged = {**defaults, **value}
                unknown = set(merged) - {f.name for f in fields(ProfileConfig)}
                if unknown:
                    raise ConfigError(f"{where}.{name}: unknown keys {sorted(unknown)}")
                kwargs[name] = ProfileConfig(**merged)
            else:
                kwargs[name] = _coerce(base, value, f"{where}.{name}")
        else:
            kwargs[name] = value
    return cls(**kwargs)


def _profile_defaults(cls, name: str) -> dict:
    probe = cls()
    return asdict(getattr(probe, name))


def validate_config(cfg: RunConfig) -> RunConfig:
    if cfg.scenario not in SCENARIOS:
        raise ConfigError(f"scenario: unknown scenario {cfg.scenario!r}; "
                          f"expected one of {SCENARIOS}")
    if cfg.dt <= 0:
        raise ConfigError("dt: must be positive")
    if cfg.duration <= 0:
        raise ConfigError("duration: must be positive")
    if cfg.controller.kind not in ("fic", "ic"):
        raise ConfigError(f"controller.kind: must be 'fic' or 'ic', got {cfg.controller.kind!r}")
    if cfg.plant.kind not in ("planar", "spatial7"):
        raise ConfigError(f"plant.kind: must be 'planar' or 'spatial7', got {cfg.plant.kind!r}")
    if len(cfg.plant.link_lengths) != len(cfg.plant.link_masses):
        raise ConfigError("plant: link_lengths and link_masses must have equal length")
    if any(v <= 0 for v in cfg.plant.link_lengths + cfg.plant.link_masses):
        raise ConfigError("plant: link lengths and masses must be positive")
    for block, prof in (("controller.linear", cfg.controller.linear),
                        ("controller.angular", cfg.controller.angular),
                        ("master.linear", cfg.master.linear),
                        ("master.angular", cfg.master.angular)):
        if prof.x_b <= 0:
            raise ConfigError(f"{block}.x_b: must be positive")
        if prof.f_max <= 0:
            raise ConfigError(f"{block}.f_max: must be positive")
        if prof.damping < 0:
            raise ConfigError(f"{block}.damping: must be >= 0")
        prof.to_profile(block)  # rejects f_max/x_b - k_zeta <= 1
    cfg.controller.ic.to_gains("controller.ic")
    ch = cfg.channel
    if ch.delay < 0:
        raise ConfigError("channel.delay: must be >= 0")
    if ch.sample_rate <= 0:
        raise ConfigError("channel.sample_rate: must be > 0")
    if not 0.0 <= ch.drop_probability < 1.0:
        raise ConfigError("channel.drop_probability: must be in [0, 1)")
    if not isinstance(cfg.seed, int):
        raise ConfigError("seed: must be an integer")
    return cfg


def config_from_dict(raw: dict) -> RunConfig:
    return validate_config(_coerce(RunConfig, raw or {}, "config"))


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f" (line {mark.line + 1})" if mark else ""
        raise ConfigError(f"cannot parse {path}{loc}: {exc}") from exc
    if raw is None:
        raw = {}
    return config_from_dict(raw)


def save_config(cfg: RunConfig, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(yaml.safe_dump(asdict(cfg), sort_keys=True))
    return path


def config_hash(cfg: RunConfig) -> str:
    canonical = json.dumps(asdict(cfg), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()
