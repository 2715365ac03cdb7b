"""Delay, slice utilities, objective, SLA feasibility and fairness."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .scenario import SLICES, Slice

TWO_OVER_PI = 2.0 / math.pi


@dataclass(frozen=True)
class DelayBreakdown:
    d_trans: float
    d_queue: float
    d_total: float
    stable: bool


def total_delay(d_trans: float, rate_bps: float, effective_packet_bits: float,
                eta_pps: float, delay_cap_s: float) -> DelayBreakdown:
    """Transmission delay plus the M/M/1 waiting term ``1 / (mu - eta)``.

    ``mu = rate / effective_packet_bits``.  An unstable queue (``mu <= eta``)
    reports ``delay_cap_s`` as the total.
    """
    if not rate_bps > 0:
        raise ValueError(f"rate must be > 0, got {rate_bps}")
    if eta_pps < 0:
        raise ValueError(f"arrival rate must be >= 0, got {eta_pps}")
    mu = rate_bps / effective_packet_bits
    if mu > eta_pps:
        q = 1.0 / (mu - eta_pps)
        return DelayBreakdown(d_trans, q, d_trans + q, True)
    return DelayBreakdown(d_trans, math.inf, delay_cap_s, False)


def total_delays(d_trans: np.ndarray, rate_bps: np.ndarray, effective_bits: np.ndarray,
                 eta: np.ndarray, cap: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`total_delay`; zero-rate links are unstable.

    Returns ``(d_total, stable)``.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        mu = np.where(rate_bps > 0, rate_bps / effective_bits, 0.0)
        stable = mu > eta
        d = np.where(stable, d_trans + 1.0 / np.where(stable, mu - eta, 1.0), cap)
    return d, stable


@dataclass(frozen=True)
class UtilityInputs:
    slice: Slice
    rate_norm: float
    delay_norm: float
    hit: int = 0
    kappa: float = 0.0


def rate_term(rate_norm):
    return TWO_OVER_PI * np.arctan(rate_norm)


def delay_term(delay_norm, hit, kappa):
    return 1.0 - TWO_OVER_PI * np.arctan(np.asarray(delay_norm) * (1.0 - kappa * np.asarray(hit)))


def utility(inputs: UtilityInputs) -> float:
    """Slice utility in [0, 1]: rate form, delay form, or their mean."""
    if inputs.rate_norm < 0 or inputs.delay_norm < 0:
        raise ValueError("normalised rate and delay must be >= 0")
    return float(utilities(np.array([inputs.slice]), np.array([inputs.rate_norm]),
                           np.array([inputs.delay_norm]), np.array([inputs.hit]),
                           inputs.kappa)[0])


def utilities(slices, rate_norm, delay_norm, hit, kappa: float,
              mode: str = "full") -> np.ndarray:
    """Per-user utilities.

    ``mode`` selects the form: ``full`` applies each slice's own form;
    ``latency`` applies the delay form and ``throughput`` the rate form to every
    user; ``unshaped`` applies the mixed form to every user.
    """
    slices = np.asarray(slices)
    r = rate_term(np.asarray(rate_norm, dtype=float))
    d = delay_term(np.asarray(delay_norm, dtype=float), hit, kappa)
    if mode == "throughput":
        return r
    if mode == "latency":
        return d
    if mode == "unshaped":
        return 0.5 * (r + d)
    if mode != "full":
        raise ValueError(f"unknown utility mode {mode!r}")
    return np.where(slices == Slice.EMBB, r, np.where(slices == Slice.URLLC, d, 0.5 * (r + d)))


def objective(per_user_utilities: Iterable[float]) -> float:
    """Aggregate utility; each user contributes once, at its serving BS."""
    return float(math.fsum(per_user_utilities))


@dataclass
class SlaReport:
    slices: np.ndarray
    delay_ok: np.ndarray
    rate_ok: np.ndarray

    @classmethod
    def evaluate(cls, slices, delays, rates, sla: Mapping[Slice, "object"]) -> "SlaReport":
        slices = np.asarray(slices)
        d_th = np.array([sla[Slice(s)].delay_threshold for s in slices])
        r_th = np.array([sla[Slice(s)].rate_threshold for s in slices])
        return cls(slices, np.asarray(delays) <= d_th, np.asarray(rates) > r_th)

    @property
    def satisfied(self) -> np.ndarray:
        return self.delay_ok & self.rate_ok

    @classmethod
    def concat(cls, reports: Sequence["SlaReport"]) -> "SlaReport":
        return cls(np.concatenate([r.slices for r in reports]),
                   np.concatenate([r.delay_ok for r in reports]),
                   np.concatenate([r.rate_ok for r in reports]))


@dataclass
class Violation:
    constraint: str  # "delay" (i), "rate" (ii), "capacity" (iii)
    index: int  # user id, or BS id for capacity


@dataclass
class FeasibilityReport:
    violations: list[Violation] = field(default_factory=list)

    def count(self, constraint: str | None = None) -> int:
        return sum(1 for v in self.violations if constraint is None or v.constraint == constraint)

    @property
    def feasible(self) -> bool:
        return not self.violations

    def violating_users(self) -> set[int]:
        return {v.index for v in self.violations if v.constraint in ("delay", "rate")}


def feasibility(sla_report: SlaReport, caches=()) -> FeasibilityReport:
    """Check delay (i), rate (ii) per user and cache capacity (iii) per BS.

    Cache-hit indicators are binary by construction, so (iv) cannot fail.
    """
    out = FeasibilityReport()
    for u in np.flatnonzero(~sla_report.delay_ok):
        out.violations.append(Violation("delay", int(u)))
    for u in np.flatnonzero(~sla_report.rate_ok):
        out.violations.append(Violation("rate", int(u)))
    for c in caches:
        used = math.fsum(c.cached.values())
        if used > c.capacity_bits:
            out.violations.append(Violation("capacity", c.bs))
    return out


def jain_fairness(xs) -> float:
    """(sum x)^2 / (n * sum x^2)."""
    x = np.asarray(xs, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("need at least one value")
    if np.any(x < 0):
        raise ValueError("values must be >= 0")
    sq = float(np.dot(x, x))
    if sq == 0:
        raise ValueError("all-zero input")
    return float(x.sum()) ** 2 / (x.size * sq)


def sla_satisfaction(report: SlaReport) -> dict[str, float]:
    """Fraction of user-intervals meeting both delay and rate, per slice and overall."""
    ok = report.satisfied
    out = {}
    for s in SLICES:
        m = report.slices == s
        out[s.label] = float(ok[m].mean()) if m.any() else float("nan")
    out["overall"] = float(ok.mean()) if ok.size else float("nan")
    return out


def simulate_mm1(arrival_rate: float, service_rate: float, n_packets: int,
                 rng: np.random.Generator) -> float:
    """Mean sojourn time of a FIFO single-server queue, event by event."""
    inter = rng.exponential(1.0 / arrival_rate, n_packets)
    service = rng.exponential(1.0 / service_rate, n_packets)
    t_arrival = 0.0
    t_free = 0.0
    total = 0.0
    for a, s in zip(inter.tolist(), service.tolist()):
        t_arrival += a
        start = t_arrival if t_arrival > t_free else t_free
        t_free = start + s
        total += t_free - t_arrival
    return total / n_packets
