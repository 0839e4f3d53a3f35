"""Per-user outage probability of the lossy-forward relay link.

Three estimators are provided and are expected to agree:

``outage_closed_form``
    complement form ``1 - Q0*Q2 - Q0*I2 - Q2*I0 - I02``, where ``Qi`` is the
    probability that link i is lossless and the ``I`` terms integrate the
    probability that the direct link *succeeds* over the lossy region of the
    relay links;
``outage_case_decomposition``
    sums the four (S-R lossless?, R-D lossless?) cases, integrating the
    probability that the direct link *fails*;
``outage_monte_carlo``
    samples fading triples and applies the rate-region membership test.

A derivation note on the constant term is in ``docs/derivation.md``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import gammainc, gammaincc, gammaln, xlogy

from .geometry import AirGroundParams, LinkBudget, NodeLayout, RadioConfig, link_budget
from .quadrature import QuadratureConfig, QuadratureError, integrate
from .ratedist import DistortionSpec, admissible, crossover_from_snr, threshold_snr

__all__ = [
    "LinkBudget", "OutageEstimate", "CaseContributions", "SystemOutage",
    "upper_gamma_ratio", "lower_gamma_ratio", "outage_closed_form", "printed_closed_form",
    "outage_case_decomposition", "outage_monte_carlo", "system_outage",
]

MC_CHUNK = 250_000


@dataclass(frozen=True)
class OutageEstimate:
    value: float
    std_error: float = 0.0
    method: str = "closed_form"
    quad_error: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"outage probability outside [0, 1]: {self.value}")
        if self.std_error < 0:
            raise ValueError("std_error must be >= 0")


@dataclass(frozen=True)
class CaseContributions:
    """Outage mass split by whether the S-R and R-D links are lossless."""

    both_clear: float
    sr_clear_rd_lossy: float
    sr_lossy_rd_clear: float
    both_lossy: float
    # unconditioned probabilities of the same four cases
    p_both_clear: float
    p_sr_clear_rd_lossy: float
    p_sr_lossy_rd_clear: float
    p_both_lossy: float
    quad_error: float = 0.0

    @property
    def total(self) -> float:
        return self.both_clear + self.sr_clear_rd_lossy + self.sr_lossy_rd_clear + self.both_lossy

    @property
    def case_probability_sum(self) -> float:
        return self.p_both_clear + self.p_sr_clear_rd_lossy + self.p_sr_lossy_rd_clear + self.p_both_lossy


def _is_integer(m: float) -> bool:
    return float(m).is_integer() and m <= 170


def upper_gamma_ratio(m: float, x):
    """Regularised upper incomplete gamma Q(m, x) = Pr{Gamma(m, 1) > x}."""
    x = np.asarray(x, dtype=float)
    if m < 0.5 or np.any(x < 0):
        raise ValueError("need m >= 0.5 and x >= 0")
    if _is_integer(m):
        # e^-x * sum_{j<m} x^j / j!, Horner form
        acc = np.ones_like(x)
        for j in range(int(m) - 1, 0, -1):
            acc = 1.0 + acc * x / j
        out = np.exp(-x) * acc
    else:
        out = gammaincc(m, x)
    return float(out) if out.ndim == 0 else out


def lower_gamma_ratio(m: float, x):
    x = np.asarray(x, dtype=float)
    if m < 0.5 or np.any(x < 0):
        raise ValueError("need m >= 0.5 and x >= 0")
    out = gammainc(m, x)
    return float(out) if np.ndim(out) == 0 else out


def _snr_pdf(g, gbar: float, m: float):
    log_p = m * math.log(m / gbar) + xlogy(m - 1.0, g) - gammaln(m) - m * g / gbar
    return np.exp(log_p)


@lru_cache(maxsize=8192)
def _phi_cached(key: bytes, kappa: float) -> np.ndarray:
    x = np.frombuffer(key, dtype=float)
    out = np.asarray(crossover_from_snr(x, kappa))
    out.setflags(write=False)
    return out


def _phi(x: np.ndarray, kappa: float) -> np.ndarray:
    # node sets recur between passes of the nested integration
    return _phi_cached(np.ascontiguousarray(x, dtype=float).tobytes(), kappa)


def _breakpoints(gbar: float, m: float, upper: float) -> list[float]:
    pts = [0.25 * upper, 0.5 * upper, 0.75 * upper]
    # a weak link packs its density near zero, below what the coarse panels resolve
    scale = gbar / m
    if 4.0 * scale < 0.25 * upper:
        pts += [scale, 4.0 * scale]
    return pts


class _Integrals:
    """The three lossy-region integrals, with ``tail`` mapping the S-D threshold to a probability."""

    def __init__(self, budget: LinkBudget, spec: DistortionSpec, m: float, quad: QuadratureConfig, tail):
        self.budget, self.spec, self.m, self.quad, self.tail = budget, spec, m, quad, tail
        self.c0 = spec.lossless_snr(0)
        self.c2 = spec.lossless_snr(2)
        self.error = 0.0

    def _sd_term(self, rho1, rho2):
        t = threshold_snr(rho1, rho2, self.spec.d, self.spec.kappa[1])
        return self.tail(self.m, self.m * np.asarray(t) / self.budget.g1)

    def _run(self, f, upper, gbar, tol):
        res = integrate(f, 0.0, upper, breakpoints=_breakpoints(gbar, self.m, upper),
                        abs_tol=tol, rel_tol=self.quad.rel_tol,
                        max_subdivisions=self.quad.max_subdivisions)
        if not np.all(res.converged):
            raise QuadratureError(
                f"quadrature did not converge (estimate {res.value!r}, error {res.error!r})",
                res.value, res.error)
        return res

    def single(self, link: int, tol: float) -> float:
        """Integral over the lossy range of one relay link, the other being lossless."""
        gbar = self.budget.g0 if link == 0 else self.budget.g2
        upper = self.c0 if link == 0 else self.c2
        kappa = self.spec.kappa[link]

        def f(g):
            rho = _phi(g, kappa)
            pair = (rho, 0.0) if link == 0 else (0.0, rho)
            return _snr_pdf(g, gbar, self.m) * self._sd_term(*pair)

        res = self._run(f, upper, gbar, tol)
        self.error += res.error
        return res.value

    def double(self, tol: float) -> float:
        g0, g2 = self.budget.g0, self.budget.g2
        k0, k2 = self.spec.kappa[0], self.spec.kappa[2]
        inner_err = [0.0]

        def inner_for(x0):
            rho1 = _phi(x0, k0)[:, None]

            def f2(x2):
                rho2 = _phi(x2, k2)[None, :]
                return _snr_pdf(x2, g2, self.m)[None, :] * self._sd_term(rho1, rho2)

            return f2

        def outer(x0):
            res = self._run(inner_for(x0), self.c2, g2, tol / 2)
            inner_err[0] = max(inner_err[0], float(np.max(res.error)))
            return _snr_pdf(x0, g0, self.m) * res.value

        res = self._run(outer, self.c0, g0, tol / 2)
        self.error += res.error + inner_err[0]
        return res.value


def _finish(value: float, err: float, quad: QuadratureConfig, what: str) -> float:
    slack = max(err, quad.abs_tol)
    if -slack <= value < 0.0:
        return 0.0
    if 1.0 < value <= 1.0 + slack:
        return 1.0
    if not 0.0 <= value <= 1.0:
        raise QuadratureError(f"{what} left [0, 1] by more than the quadrature tolerance: {value}",
                              value, err)
    return value


def _closed_form_parts(budget, spec, m, quad):
    ints = _Integrals(budget, spec, m, quad, upper_gamma_ratio)
    q0 = upper_gamma_ratio(m, m * ints.c0 / budget.g0)
    q2 = upper_gamma_ratio(m, m * ints.c2 / budget.g2)
    tol = quad.abs_tol / 3.0
    i2 = ints.single(2, tol)
    i0 = ints.single(0, tol)
    i02 = ints.double(tol)
    return q0, q2, i0, i2, i02, ints.error


def outage_closed_form(budget: LinkBudget, spec: DistortionSpec, m: float = 2.0,
                       quad: QuadratureConfig = QuadratureConfig()) -> OutageEstimate:
    q0, q2, i0, i2, i02, err = _closed_form_parts(budget, spec, m, quad)
    value = 1.0 - q0 * q2 - q0 * i2 - q2 * i0 - i02
    return OutageEstimate(_finish(value, err, quad, "closed form"), 0.0, "closed_form", err)


def printed_closed_form(budget: LinkBudget, spec: DistortionSpec, m: float = 2.0,
                        quad: QuadratureConfig = QuadratureConfig()) -> float:
    """The expression with a ``+2*Q0*Q2`` leading term instead of ``-Q0*Q2``.

    Kept only for comparison; it is not a probability in general.
    """
    q0, q2, i0, i2, i02, _ = _closed_form_parts(budget, spec, m, quad)
    return 1.0 + 2.0 * q0 * q2 - q0 * i2 - q2 * i0 - i02


def outage_case_decomposition(budget: LinkBudget, spec: DistortionSpec, m: float = 2.0,
                              quad: QuadratureConfig = QuadratureConfig()) -> CaseContributions:
    c0, c2 = spec.lossless_snr(0), spec.lossless_snr(2)
    q0 = upper_gamma_ratio(m, m * c0 / budget.g0)
    q2 = upper_gamma_ratio(m, m * c2 / budget.g2)
    p0 = lower_gamma_ratio(m, m * c0 / budget.g0)
    p2 = lower_gamma_ratio(m, m * c2 / budget.g2)
    probs = (q0 * q2, q0 * p2, p0 * q2, p0 * p2)
    ints = _Integrals(budget, spec, m, quad, lower_gamma_ratio)
    tol = quad.abs_tol / 3.0
    # both links lossless: the S-D threshold is zero and the direct link never fails
    both_clear = q0 * q2 * lower_gamma_ratio(m, 0.0)
    sr_clear = q0 * ints.single(2, tol)
    rd_clear = q2 * ints.single(0, tol)
    both_lossy = ints.double(tol)
    return CaseContributions(both_clear, sr_clear, rd_clear, both_lossy, *probs, quad_error=ints.error)


def _mc_count(budget: LinkBudget, spec: DistortionSpec, m: float, n: int, seed_seq) -> int:
    rng = np.random.default_rng(seed_seq)
    k0, k1, k2 = spec.kappa
    outages = 0
    left = n
    while left > 0:
        size = min(left, MC_CHUNK)
        g0 = rng.gamma(m, budget.g0 / m, size)
        g1 = rng.gamma(m, budget.g1 / m, size)
        g2 = rng.gamma(m, budget.g2 / m, size)
        ok = admissible(k0 * np.log2(1.0 + g0), k1 * np.log2(1.0 + g1), k2 * np.log2(1.0 + g2), spec.d)
        outages += size - int(np.count_nonzero(ok))
        left -= size
    return outages


def outage_monte_carlo(budget: LinkBudget, spec: DistortionSpec, m: float = 2.0, n: int = 1_000_000,
                       seed: int = 0, workers: int = 1, parallel: bool = False) -> OutageEstimate:
    """Fraction of sampled rate triples outside the admissible region.

    The sample budget is split over ``workers`` independent substreams of
    ``seed``; the estimate depends on ``workers`` only through that split, so
    running the workers in threads (``parallel=True``) gives the same number.
    """
    if n < 1 or workers < 1:
        raise ValueError("need n >= 1 and workers >= 1")
    streams = np.random.SeedSequence(seed).spawn(workers)
    sizes = [n // workers + (1 if i < n % workers else 0) for i in range(workers)]
    jobs = [(budget, spec, m, size, ss) for size, ss in zip(sizes, streams) if size > 0]
    if parallel and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=len(jobs)) as pool:
            counts = list(pool.map(lambda a: _mc_count(*a), jobs))
    else:
        counts = [_mc_count(*a) for a in jobs]
    p = sum(counts) / n
    return OutageEstimate(p, math.sqrt(p * (1.0 - p) / n), "monte_carlo")


@dataclass(frozen=True)
class SystemOutage:
    per_user: tuple[OutageEstimate, ...]

    @property
    def values(self) -> list[float]:
        return [e.value for e in self.per_user]

    @property
    def total(self) -> float:
        return float(sum(self.values))


def system_outage(layout: NodeLayout, radio: RadioConfig, a2g: AirGroundParams,
                  specs: Sequence[DistortionSpec], m: float = 2.0,
                  quad: QuadratureConfig = QuadratureConfig()) -> SystemOutage:
    if len(specs) != layout.n_users:
        raise ValueError(f"{layout.n_users} users but {len(specs)} distortion specs")
    return SystemOutage(tuple(
        outage_closed_form(link_budget(layout, radio, a2g, k), specs[k], m, quad)
        for k in range(layout.n_users)
    ))
