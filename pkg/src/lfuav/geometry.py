"""Node geometry, air-to-ground path loss and Nakagami-m SNR sampling.

Conventions used throughout the package:

* the elevation angle fed to the LoS/NLoS sigmoid is in **degrees**, which is
  the unit the suburban fit (a = 4.88, b = 0.43) was made in;
* path loss is computed in dB and converted to a linear ratio before the
  average SNR is formed;
* ``n0`` is the *total* receiver noise power in watts, not a per-Hz density.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

SPEED_OF_LIGHT = 2.99792458e8


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Position3D:
    x: float
    y: float
    z: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValueError(f"non-finite coordinate in {self!r}")
        if self.z < 0:
            raise ValueError(f"altitude must be >= 0, got {self.z}")

    def distance_to(self, other: "Position3D") -> float:
        return math.sqrt((self.x - other.x) ** 2 + (self.y - other.y) ** 2 + (self.z - other.z) ** 2)


@dataclass(frozen=True)
class NodeLayout:
    bs: Position3D
    uav: Position3D
    users: tuple[Position3D, ...]

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        if len(self.users) < 1:
            raise ValueError("layout needs at least one user")
        if self.uav.z <= 0:
            raise ValueError("UAV altitude must be positive")

    @property
    def n_users(self) -> int:
        return len(self.users)

    def with_uav(self, x: float, y: float, z: float | None = None) -> "NodeLayout":
        return replace(self, uav=Position3D(x, y, self.uav.z if z is None else z))

    @classmethod
    def default(cls, altitude: float = 500.0) -> "NodeLayout":
        # BS at the origin, UAV starting above it; user positions are our own choice
        return cls(
            bs=Position3D(0.0, 0.0, 0.0),
            uav=Position3D(0.0, 0.0, altitude),
            users=(Position3D(7000.0, 5000.0, 0.0), Position3D(10000.0, -6000.0, 0.0)),
        )


@dataclass(frozen=True)
class AirGroundParams:
    """Environment constants of the elevation-dependent LoS/NLoS model."""

    a: float = 4.88
    b: float = 0.43
    eta_los: float = 0.1
    eta_nlos: float = 21.0

    def __post_init__(self):
        if self.b <= 0:
            raise ValueError("b must be positive")
        if self.eta_nlos < self.eta_los:
            raise ValueError("eta_nlos must be >= eta_los")


@dataclass(frozen=True)
class RadioConfig:
    pt: float = 0.5
    n0: float = 3.9811e-14
    carrier_hz: tuple[float, ...] = (2.0e9, 1.985e9)
    c: float = SPEED_OF_LIGHT
    # "a2g" evaluates the air-to-ground formula at zero elevation;
    # "log_distance" uses free space at 1 m plus 10*n*log10(d)
    ground_model: str = "a2g"
    ground_exponent: float = 3.5

    def __post_init__(self):
        object.__setattr__(self, "carrier_hz", tuple(float(f) for f in self.carrier_hz))
        if self.pt <= 0 or self.n0 <= 0:
            raise ValueError("pt and n0 must be positive")
        if not self.carrier_hz or any(f <= 0 for f in self.carrier_hz):
            raise ValueError("carrier frequencies must be positive")
        if self.ground_model not in ("a2g", "log_distance"):
            raise ValueError(f"unknown ground model {self.ground_model!r}")


@dataclass(frozen=True)
class FadingSpec:
    m: float = 2.0

    def __post_init__(self):
        if not math.isfinite(self.m) or self.m < 0.5:
            raise ValueError(f"Nakagami m must be finite and >= 0.5, got {self.m}")


@dataclass(frozen=True)
class LinkBudget:
    """Average SNRs (linear) of the S-R, S-D and R-D links of one user."""

    g0: float
    g1: float
    g2: float

    def __post_init__(self):
        for name in ("g0", "g1", "g2"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    def scaled(self, g0: float = 1.0, g1: float = 1.0, g2: float = 1.0) -> "LinkBudget":
        return LinkBudget(self.g0 * g0, self.g1 * g1, self.g2 * g2)


def _free_space_db(d, f, c):
    return 20.0 * np.log10(4.0 * np.pi * f * d / c)


def elevation_sigmoid_db(theta_deg, params: AirGroundParams):
    """Excess loss term, bounded in [eta_los - eta_nlos, 0]."""
    return (params.eta_los - params.eta_nlos) / (
        1.0 + params.a * np.exp(-params.b * (theta_deg - params.a))
    )


def path_loss_a2g(d: float, h_rel: float, f: float, params: AirGroundParams = AirGroundParams(),
                  c: float = SPEED_OF_LIGHT) -> float:
    """Air-to-ground path loss in dB for a link of length ``d`` spanning height ``h_rel``."""
    if not all(math.isfinite(v) for v in (d, h_rel, f)):
        raise ValueError("non-finite input")
    if d <= 0:
        raise ValueError(f"link length must be positive, got {d}")
    if h_rel <= 0 or h_rel > d:
        raise ValueError(f"need 0 < h_rel <= d, got h_rel={h_rel}, d={d}")
    if f <= 0:
        raise ValueError("frequency must be positive")
    theta = math.degrees(math.asin(h_rel / d))
    return float(elevation_sigmoid_db(theta, params) + _free_space_db(d, f, c) + params.eta_nlos)


def path_loss_ground(d: float, f: float, params: AirGroundParams = AirGroundParams(),
                     c: float = SPEED_OF_LIGHT, model: str = "a2g", exponent: float = 3.5) -> float:
    if not all(math.isfinite(v) for v in (d, f)):
        raise ValueError("non-finite input")
    if d <= 0:
        raise ValueError(f"link length must be positive, got {d}")
    if f <= 0:
        raise ValueError("frequency must be positive")
    if model == "a2g":
        return float(elevation_sigmoid_db(0.0, params) + _free_space_db(d, f, c) + params.eta_nlos)
    if model == "log_distance":
        return float(_free_space_db(1.0, f, c) + 10.0 * exponent * math.log10(d))
    raise ValueError(f"unknown ground model {model!r}")


def average_snr(pt: float, n0: float, pl_db: float) -> float:
    if pt <= 0 or n0 <= 0:
        raise ValueError("pt and n0 must be positive")
    return float(pt / (n0 * 10.0 ** (pl_db / 10.0)))


def sample_instantaneous_snr(gamma_bar, m: float, rng: np.random.Generator, size=None):
    """Draw SNRs from Gamma(shape=m, mean=gamma_bar), i.e. Nakagami-m power fading."""
    return rng.gamma(m, np.asarray(gamma_bar, dtype=float) / m, size=size)


def _a2g_link_snr(tx: Position3D, rx: Position3D, f: float, radio: RadioConfig, a2g: AirGroundParams) -> float:
    d = tx.distance_to(rx)
    h_rel = abs(tx.z - rx.z)
    return average_snr(radio.pt, radio.n0, path_loss_a2g(d, h_rel, f, a2g, radio.c))


def link_budget(layout: NodeLayout, radio: RadioConfig = RadioConfig(),
                a2g: AirGroundParams = AirGroundParams(), user_index: int = 0) -> LinkBudget:
    if not 0 <= user_index < layout.n_users:
        raise IndexError(f"user index {user_index} out of range for {layout.n_users} users")
    if len(radio.carrier_hz) < layout.n_users:
        raise ValueError("need one carrier frequency per user")
    f = radio.carrier_hz[user_index]
    user = layout.users[user_index]
    g0 = _a2g_link_snr(layout.bs, layout.uav, f, radio, a2g)
    pl1 = path_loss_ground(layout.bs.distance_to(user), f, a2g, radio.c,
                           radio.ground_model, radio.ground_exponent)
    g1 = average_snr(radio.pt, radio.n0, pl1)
    g2 = _a2g_link_snr(layout.uav, user, f, radio, a2g)
    return LinkBudget(g0, g1, g2)


def link_budgets(layout: NodeLayout, radio: RadioConfig = RadioConfig(),
                 a2g: AirGroundParams = AirGroundParams()) -> list[LinkBudget]:
    return [link_budget(layout, radio, a2g, k) for k in range(layout.n_users)]
