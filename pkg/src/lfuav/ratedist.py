"""Binary-source information measures and the lossy-forward rate region.

All functions accept scalars or numpy arrays; array inputs broadcast and
return arrays, scalar inputs return floats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlog1py, xlogy

_LN2 = math.log(2.0)
BISECTION_STEPS = 60


@dataclass(frozen=True)
class DistortionSpec:
    """Acceptable Hamming distortion ``d`` and per-link rate factors.

    ``kappa[i]`` is the bandwidth to source-rate ratio of link i (S-R, S-D,
    R-D), so the supported source rate is ``kappa[i] * log2(1 + snr)``.
    """

    d: float
    kappa: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "kappa", tuple(float(k) for k in self.kappa))
        if not 0.0 <= self.d <= 0.5:
            raise ValueError(f"distortion must lie in [0, 0.5], got {self.d}")
        if len(self.kappa) != 3 or any(not k > 0 for k in self.kappa):
            raise ValueError(f"need three positive rate factors, got {self.kappa}")

    def lossless_snr(self, link: int) -> float:
        """SNR above which link ``link`` carries the source without loss."""
        return 2.0 ** (1.0 / self.kappa[link]) - 1.0


@dataclass(frozen=True)
class RateTriple:
    r0: float
    r1: float
    r2: float


@dataclass(frozen=True)
class CrossoverPair:
    rho1: float
    rho2: float

    def __post_init__(self):
        if not (0.0 <= self.rho1 <= 0.5 and 0.0 <= self.rho2 <= 0.5):
            raise ValueError(f"crossover probabilities must lie in [0, 0.5]: {self}")


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def _check_range(x, lo, hi, name):
    if np.any(~((x >= lo) & (x <= hi))):
        raise ValueError(f"{name} outside [{lo}, {hi}]")


def binary_entropy(p):
    p = np.asarray(p, dtype=float)
    _check_range(p, 0.0, 1.0, "probability")
    return _out(-(xlogy(p, p) + xlog1py(1.0 - p, -p)) / _LN2)


def binary_entropy_inv(h):
    """Inverse of the binary entropy on the branch [0, 0.5], by bisection."""
    h = np.asarray(h, dtype=float)
    _check_range(h, 0.0, 1.0, "entropy")
    lo = np.zeros_like(h)
    hi = np.full_like(h, 0.5)
    target = -_LN2 * h  # compare in nats, negated: p ln p + (1-p) ln(1-p) > target
    mid, a, b = np.empty_like(h), np.empty_like(h), np.empty_like(h)
    below = np.empty(h.shape, dtype=bool)
    for _ in range(BISECTION_STEPS):
        np.add(lo, hi, out=mid)
        mid *= 0.5
        # midpoints stay strictly inside (0, 0.5], so plain logs are safe here
        np.log(mid, out=a)
        a *= mid
        np.negative(mid, out=b)
        np.log1p(b, out=b)
        b *= 1.0 - mid
        a += b
        np.greater(a, target, out=below)
        np.copyto(lo, mid, where=below)
        np.logical_not(below, out=below)
        np.copyto(hi, mid, where=below)
    p = 0.5 * (lo + hi)
    p = np.where(h <= 0.0, 0.0, np.where(h >= 1.0, 0.5, p))
    return _out(p)


def binary_convolution(a, b):
    """Crossover probability of two cascaded binary symmetric channels."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_range(a, 0.0, 1.0, "probability")
    _check_range(b, 0.0, 1.0, "probability")
    return _out(a * (1.0 - b) + b * (1.0 - a))


def crossover_from_snr(gamma, kappa: float = 1.0):
    """Crossover probability of a link whose SNR supports ``kappa*log2(1+gamma)`` bits.

    Zero once the link carries a full bit per source symbol.
    """
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0):
        raise ValueError("SNR must be non-negative")
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    deficit = 1.0 - kappa * np.log2(1.0 + gamma)
    return binary_entropy_inv(np.clip(deficit, 0.0, 1.0))


def threshold_snr(rho1, rho2, d: float, kappa1: float = 1.0):
    """S-D SNR needed to reach distortion ``d`` given the relay-path crossovers."""
    x = binary_convolution(binary_convolution(rho1, rho2), d)
    excess = np.maximum(np.asarray(binary_entropy(x)) - binary_entropy(d), 0.0)
    return _out(np.exp2(excess / kappa1) - 1.0)


def outage_threshold_snr(rho: CrossoverPair, spec: DistortionSpec) -> float:
    return float(threshold_snr(rho.rho1, rho.rho2, spec.d, spec.kappa[1]))


def admissible(r0, r1, r2, d: float):
    """Vectorised region-membership test on raw rate arrays.

    The least crossover each relay link can deliver is the best choice, since
    the S-D requirement is nondecreasing in both crossovers.
    """
    r0 = np.asarray(r0, dtype=float)
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    if d >= 0.5:
        return _out(np.ones(np.broadcast(r0, r1, r2).shape, dtype=bool))
    r0, r1, r2 = np.broadcast_arrays(r0, r1, r2)
    # the S-D requirement never exceeds 1 - H_b(d), so samples above that bound
    # (plus a rounding margin) are admissible without inverting any entropy
    result = np.asarray(r1 >= 1.0 - binary_entropy(d) + 1e-12)
    open_ = ~result
    if np.any(open_):
        q0, q1, q2 = r0[open_], r1[open_], r2[open_]
        rho1 = np.zeros(q0.shape)
        rho2 = np.zeros(q2.shape)
        # bisection only where the link is lossy
        lossy0 = q0 < 1.0
        lossy2 = q2 < 1.0
        if np.any(lossy0):
            rho1[lossy0] = binary_entropy_inv(1.0 - np.maximum(q0[lossy0], 0.0))
        if np.any(lossy2):
            rho2[lossy2] = binary_entropy_inv(1.0 - np.maximum(q2[lossy2], 0.0))
        x = binary_convolution(binary_convolution(rho1, rho2), d)
        need = np.asarray(binary_entropy(x)) - binary_entropy(d)
        result[open_] = q1 >= need
    return result if result.ndim else bool(result)


def in_admissible_region(rates: RateTriple, spec: DistortionSpec) -> bool:
    return bool(admissible(rates.r0, rates.r1, rates.r2, spec.d))
