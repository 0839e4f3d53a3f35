"""Experiment configuration: a versioned YAML document layered over defaults.

An empty file reproduces the reference setup (default radio constants, the
two-user layout and the agent hyperparameters). ``configs/default.yaml`` lists
every key with its default.
"""
from __future__ import annotations

import copy
import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from .env import EnvConfig
from .geometry import AirGroundParams, NodeLayout, Position3D, RadioConfig
from .hyperparams import SacConfig, TrainConfig
from .quadrature import QuadratureConfig
from .ratedist import DistortionSpec

SCHEMA_VERSION = 1

DEFAULTS: dict[str, Any] = {
    "version": SCHEMA_VERSION,
    "seed": 0,
    "output_dir": "runs",
    "layout": {
        "bs": [0.0, 0.0, 0.0],
        "users": [[7000.0, 5000.0, 0.0], [10000.0, -6000.0, 0.0]],
        "altitude": 500.0,
    },
    "radio": {
        "pt": 0.5,
        "n0": 3.9811e-14,
        "carrier_hz": [2.0e9, 1.985e9],
        "ground_model": "a2g",
        "ground_exponent": 3.5,
    },
    "a2g": {"a": 4.88, "b": 0.43, "eta_los": 0.1, "eta_nlos": 21.0},
    "fading": {"m": 2.0},
    "distortion": {"d": [0.1, 0.3], "kappa": [1.0, 1.0, 1.0]},
    "quadrature": {"abs_tol": 1e-9, "rel_tol": 1e-10, "max_subdivisions": 4000},
    "env": {
        "area": [0.0, 20000.0, 0.0, 20000.0],
        "max_step": 500.0,
        "horizon": 100,
        # a number, or "auto" for K / (summed outage at the start position)
        "mu": 5000.0,
        "eps_guard": 1e-12,
        "start": [0.0, 0.0],
        "train_tolerance": 1e-6,
        "grid_cache": False,
        "grid_cache_n": 201,
    },
    "agent": {
        "lr_q": 0.003,
        "lr_pi": 0.001,
        "lr_alpha": 0.0003,
        "discount": 0.9,
        "batch": 128,
        "tau": 0.005,
        "alpha0": 0.2,
        "target_entropy": None,
        "hidden": [128, 128],
        "warmup_steps": 500,
        "buffer_capacity": 10000,
        "learn_trigger": "warmup",
        "twin_critics": True,
        "log_std_bounds": [-20.0, 2.0],
        "exploration_noise": 0.1,
    },
    "train": {"episodes": 300, "learn": True, "terminal_on_horizon": False},
    "validate": {
        "n_geometries": 20,
        "d_values": [0.1, 0.2, 0.3],
        "mc_samples": 1000000,
        "mc_workers": 1,
        "z_pass": 3.0,
        "z_fail": 4.0,
    },
    "outage_map": {"grid_n": 41},
    "compare": {"seeds": [0, 1, 2], "d_pairs": [[0.2, 0.2], [0.1, 0.3]], "agents": ["sac", "ddpg"]},
}


class ConfigError(ValueError):
    pass


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a dot, e.g. ``1e-9``."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                   |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
                   |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                   |[-+]?\.(?:inf|Inf|INF)
                   |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."),
)


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where!r} must be a mapping")
            out[key] = _merge(base[key], value, where + ".")
        else:
            out[key] = value
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict

    # -- construction -------------------------------------------------
    @classmethod
    def from_dict(cls, data: dict | None) -> "ExperimentConfig":
        data = data or {}
        if not isinstance(data, dict):
            raise ConfigError("config document must be a mapping")
        version = data.get("version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported config version {version!r}")
        cfg = cls(_merge(DEFAULTS, data))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path | None) -> "ExperimentConfig":
        """Read a YAML config, or the config embedded in a run manifest."""
        if path is None:
            return cls.from_dict({})
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        try:
            data = json.loads(text) if Path(path).suffix == ".json" else yaml.load(text, Loader=_Loader)
        except (yaml.YAMLError, json.JSONDecodeError) as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        if isinstance(data, dict) and "config_hash" in data and "config" in data:
            data = data["config"]
        return cls.from_dict(data)

    def with_overrides(self, **sections) -> "ExperimentConfig":
        return ExperimentConfig.from_dict(_merge(self.raw, sections))

    def validate(self) -> None:
        try:
            k = self.layout().n_users
            if len(self.radio().carrier_hz) != k:
                raise ConfigError(f"{k} users but {len(self.radio().carrier_hz)} carriers")
            if len(self.raw["distortion"]["d"]) != k:
                raise ConfigError(f"{k} users but {len(self.raw['distortion']['d'])} distortion targets")
            self.specs()
            self.a2g()
            self.quad()
            self.env_config(mu=1.0)
            self.agent()
            self.train()
            mu = self.raw["env"]["mu"]
            if mu != "auto" and not (isinstance(mu, (int, float)) and mu > 0):
                raise ConfigError("env.mu must be positive or 'auto'")
            for pair in self.raw["compare"]["d_pairs"]:
                if len(pair) != k:
                    raise ConfigError(f"compare.d_pairs entries need {k} values, got {pair}")
                self.specs(pair)
            if not set(self.raw["compare"]["agents"]) <= {"sac", "ddpg"}:
                raise ConfigError(f"unknown agent in compare.agents {self.raw['compare']['agents']}")
            for d in self.raw["validate"]["d_values"]:
                self.specs([d])
            if self.raw["outage_map"]["grid_n"] < 2:
                raise ConfigError("outage_map.grid_n must be >= 2")
            if self.raw["fading"]["m"] < 0.5:
                raise ConfigError("fading.m must be >= 0.5")
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError, IndexError) as exc:
            raise ConfigError(str(exc)) from exc

    # -- typed views ----------------------------------------------------
    def layout(self, uav_xy: tuple[float, float] | None = None) -> NodeLayout:
        lay = self.raw["layout"]
        start = self.raw["env"]["start"] if uav_xy is None else uav_xy
        return NodeLayout(
            bs=Position3D(*map(float, lay["bs"])),
            uav=Position3D(float(start[0]), float(start[1]), float(lay["altitude"])),
            users=tuple(Position3D(*map(float, u)) for u in lay["users"]),
        )

    def radio(self) -> RadioConfig:
        return RadioConfig(**self.raw["radio"])

    def a2g(self) -> AirGroundParams:
        return AirGroundParams(**self.raw["a2g"])

    @property
    def m(self) -> float:
        return float(self.raw["fading"]["m"])

    def specs(self, d: list[float] | None = None) -> list[DistortionSpec]:
        kappa = tuple(self.raw["distortion"]["kappa"])
        return [DistortionSpec(float(x), kappa) for x in (self.raw["distortion"]["d"] if d is None else d)]

    def quad(self, relaxed: bool = False) -> QuadratureConfig:
        q = dict(self.raw["quadrature"])
        if relaxed:
            q["abs_tol"] = q["rel_tol"] = float(self.raw["env"]["train_tolerance"])
        return QuadratureConfig(**q)

    def env_config(self, mu: float | None = None) -> EnvConfig:
        e = self.raw["env"]
        return EnvConfig(
            area=tuple(e["area"]), altitude=float(self.raw["layout"]["altitude"]),
            max_step=float(e["max_step"]), horizon=int(e["horizon"]),
            mu=float(e["mu"] if mu is None else mu), eps_guard=float(e["eps_guard"]),
            start=tuple(e["start"]),
        )

    def agent(self) -> SacConfig:
        a = dict(self.raw["agent"])
        a["hidden"] = tuple(a["hidden"])
        a["log_std_bounds"] = tuple(a["log_std_bounds"])
        return SacConfig(**a)

    def train(self) -> TrainConfig:
        return TrainConfig(**self.raw["train"])

    # -- identity -----------------------------------------------------
    def canonical_json(self) -> str:
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))

    def hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def dump_yaml(self) -> str:
        return yaml.safe_dump(self.raw, sort_keys=False)
