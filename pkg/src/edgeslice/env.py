"""Per-interval world transition, observation encoding, action decoding and reward."""
from __future__ import annotations

import copy
import enum
from dataclasses import dataclass

import numpy as np

from . import qos
from .cache import AdmitOutcome, CacheState, Catalog, sample_requests
from .radio import check_allocation, link_states, rbg_bandwidths
from .scenario import SLICES, MobilityState, Scenario, Slice, attach_users, rng_streams, \
    step_mobility

# (eMBB, URLLC, MBRLLC) shares of 50 RBGs.  Template 0 is the equal split; the
# last three are the single-slice corners of the split simplex.
DEFAULT_TEMPLATES = (
    (17, 16, 17),
    (25, 10, 15),
    (15, 10, 25),
    (20, 10, 20),
    (10, 20, 20),
    (30, 5, 15),
    (15, 5, 30),
    (50, 0, 0),
    (0, 50, 0),
    (0, 0, 50),
)


class CacheOp(enum.IntEnum):
    NOOP = 0
    CACHE_HOTTEST = 1
    EVICT_THEN_CACHE = 2


N_CACHE_OPS = len(CacheOp)


def scale_template(template, rbg_count: int) -> np.ndarray:
    """Rescale a 50-RBG template to ``rbg_count`` by largest remainder."""
    t = np.asarray(template, dtype=float)
    total = t.sum()
    if total == 0 or rbg_count == 50 and total <= 50:
        return t.astype(int)
    target = min(total, 50) * rbg_count / 50.0
    raw = t / total * target
    out = np.floor(raw).astype(int)
    rem = int(round(target)) - out.sum()
    for i in np.argsort(-(raw - out), kind="stable")[:max(rem, 0)]:
        out[i] += 1
    return out


class ActionSpace:
    """Mixed-radix index <-> (allocation template, cache op)."""

    def __init__(self, templates=DEFAULT_TEMPLATES):
        self.templates = tuple(tuple(int(x) for x in t) for t in templates)
        self.n_templates = len(self.templates)
        self.n = self.n_templates * N_CACHE_OPS

    def decode(self, index: int) -> tuple[int, CacheOp]:
        index = int(index)
        if not 0 <= index < self.n:
            raise IndexError(f"action {index} outside [0, {self.n})")
        return index // N_CACHE_OPS, CacheOp(index % N_CACHE_OPS)

    def encode(self, template: int, op: int) -> int:
        if not 0 <= template < self.n_templates:
            raise IndexError(f"template {template} outside [0, {self.n_templates})")
        return int(template) * N_CACHE_OPS + int(CacheOp(op))

    def __len__(self) -> int:
        return self.n


def decode_action(index: int, space: ActionSpace | None = None) -> tuple[int, CacheOp]:
    return (space or ActionSpace()).decode(index)


@dataclass(frozen=True)
class RewardBreakdown:
    utility_sum: float
    sla_penalty: float
    overflow_penalty: float
    total: float


@dataclass
class StepMetrics:
    """Everything measured in one interval, arrays indexed by user id."""

    interval: int
    action: int
    serving: np.ndarray
    rbgs: np.ndarray
    rate_bps: np.ndarray
    throughput_bps: np.ndarray  # content bits per second of airtime
    delay_s: np.ndarray
    stable: np.ndarray
    hit: np.ndarray
    utility: np.ndarray
    sla: qos.SlaReport
    reward: RewardBreakdown
    cache_hits: np.ndarray  # per BS
    cache_requests: np.ndarray
    occupancy_bits: np.ndarray


@dataclass
class StepResult:
    observation: np.ndarray
    reward: RewardBreakdown
    metrics: StepMetrics
    done: bool


class SliceEnv:
    """Multi-cell, multi-slice RAN with edge caches.

    One :meth:`step` is one control interval.  All randomness comes from the
    named streams derived from the seed passed to :meth:`reset`, so ``clone``
    followed by identical actions reproduces identical trajectories.
    """

    def __init__(self, scenario: Scenario, seed: int | None = None):
        self.scenario = scenario
        self.catalog = Catalog.for_scenario(scenario)
        self.actions = ActionSpace(scenario.action_templates or DEFAULT_TEMPLATES)
        self.slices = np.array([u.slice for u in scenario.users], dtype=int)
        self.n_users = scenario.n_users
        self.n_bs = scenario.n_bs
        sla = scenario.sla_profiles
        self.packet_bits = np.array([sla[Slice(s)].packet_size_bits for s in self.slices])
        self.eta = np.array([sla[Slice(s)].arrival_rate for s in self.slices])
        self.d_th = np.array([sla[Slice(s)].delay_threshold for s in self.slices])
        self.r_th = np.array([sla[Slice(s)].rate_threshold for s in self.slices])
        if scenario.reward.utility_mode == "unshaped":
            self.r_ref = np.full(self.n_users, np.mean([p.rate_threshold for p in sla.values()]))
            self.d_ref = np.full(self.n_users, np.mean([p.delay_threshold for p in sla.values()]))
        else:
            self.r_ref, self.d_ref = self.r_th, self.d_th
        self.delay_cap = scenario.reward.delay_cap_factor * self.d_th
        self.rbg_bw = rbg_bandwidths(scenario.base_stations)
        self.edge = np.array([b.edge_server for b in scenario.base_stations])
        self.scaled_templates = [
            np.stack([scale_template(t, b.rbg_count) for b in scenario.base_stations])
            for t in self.actions.templates
        ]
        total_bw = sum(b.bandwidth_hz for b in scenario.base_stations)
        self.offered_load = np.array([
            (self.eta * self.packet_bits)[self.slices == s].sum() / total_bw for s in SLICES])
        self.obs_dim = 5 * len(SLICES) + 2 * self.n_bs + 1
        self.reset(scenario.seed if seed is None else seed)

    # ------------------------------------------------------------------
    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self.seed = int(seed)
        streams = rng_streams(self.seed)
        self.rng_mobility = streams["mobility"]
        self.rng_traffic = streams["traffic"]
        # Scenario placement uses its own seed; a different reset seed re-places users.
        if self.seed == self.scenario.seed:
            users = self.scenario.users
        else:
            users = self.scenario.with_seed(self.seed).users
        self.mobility = MobilityState.from_users(users, self.scenario.coverage_radius_m)
        self.caches = [CacheState(b.id, b.cache_capacity_bits if b.edge_server else 0.0)
                       for b in self.scenario.base_stations]
        self.decayed_hits = np.zeros(self.n_bs)
        self.decayed_requests = np.zeros(self.n_bs)
        self.t = 0
        self.prev_action = 0
        self.prev = None
        links = link_states(self.mobility.positions, self.scenario.base_stations,
                            self.scenario.radio)
        self.serving = attach_users(links.spectral_efficiency() * self.rbg_bw[None, :])
        self._se = links.spectral_efficiency()[np.arange(self.n_users), self.serving]
        return self.observe()

    def clone(self) -> "SliceEnv":
        return copy.deepcopy(self)

    # ------------------------------------------------------------------
    def observe(self) -> np.ndarray:
        """Fixed-length observation, entries roughly in [0, 1]."""
        obs = np.zeros(self.obs_dim)
        k = len(SLICES)
        if self.prev is not None:
            m = self.prev
            for i, s in enumerate(SLICES):
                mask = self.slices == s
                if not mask.any():
                    continue
                obs[i] = np.mean(np.minimum(m.rate_bps[mask] / self.r_th[mask], 4.0)) / 4.0
                dn = np.minimum(m.delay_s[mask] / self.d_th[mask],
                                self.scenario.reward.delay_cap_factor)
                obs[k + i] = np.mean(dn) / self.scenario.reward.delay_cap_factor
                obs[2 * k + i] = 1.0 - np.mean(m.sla.satisfied[mask])
        for j, c in enumerate(self.caches):
            obs[3 * k + j] = c.occupancy_fraction()
            if self.decayed_requests[j] > 0:
                obs[3 * k + self.n_bs + j] = self.decayed_hits[j] / self.decayed_requests[j]
        base = 3 * k + 2 * self.n_bs
        obs[base:base + k] = np.minimum(self.offered_load, 1.0)
        for i, s in enumerate(SLICES):
            mask = self.slices == s
            if mask.any():
                obs[base + k + i] = min(float(np.mean(self._se[mask])) / 10.0, 1.0)
        obs[-1] = self.prev_action / max(self.actions.n - 1, 1)
        return obs

    # ------------------------------------------------------------------
    def allocate(self, template: int, serving: np.ndarray) -> np.ndarray:
        """Per-user RBGs: each slice's share split evenly, remainder to lower ids."""
        rbgs = np.zeros(self.n_users, dtype=int)
        split = self.scaled_templates[template]
        for m in range(self.n_bs):
            at_m = serving == m
            for i, s in enumerate(SLICES):
                users = np.flatnonzero(at_m & (self.slices == s))
                if users.size == 0:
                    continue
                base, extra = divmod(int(split[m, i]), users.size)
                rbgs[users] = base
                rbgs[users[:extra]] += 1
        return rbgs

    def _apply_cache_op(self, op: CacheOp) -> bool:
        """Apply ``op`` at every edge BS; True if any admission was refused."""
        rejected = False
        if op == CacheOp.NOOP:
            return rejected
        for m, c in enumerate(self.caches):
            if not self.edge[m]:
                continue
            f = c.hottest_uncached()
            if f is None:
                continue
            size = self.catalog.size(f)
            if op == CacheOp.CACHE_HOTTEST and not c.fits(size):
                rejected = True
                continue
            if c.admit(f, size).outcome is AdmitOutcome.REJECTED:
                rejected = True
        return rejected

    def step(self, action: int) -> StepResult:
        template, op = self.actions.decode(action)
        sc = self.scenario
        # (1) mobility, (2) attachment
        step_mobility(self.mobility, sc.control_interval_s, self.rng_mobility)
        links = link_states(self.mobility.positions, sc.base_stations, sc.radio)
        se = links.spectral_efficiency()
        serving = attach_users(se * self.rbg_bw[None, :])
        idx = np.arange(self.n_users)
        self.serving = serving
        self._se = se[idx, serving]
        # (3) allocation -> rates
        rbgs = self.allocate(template, serving)
        check_allocation(rbgs, serving, sc.base_stations)
        rate = rbgs * self.rbg_bw[serving] * self._se
        # (4) requests, lookup, cache op
        requests = sample_requests(self.slices, self.catalog, self.rng_traffic)
        hit = np.zeros(self.n_users, dtype=int)
        hits_bs = np.zeros(self.n_bs)
        req_bs = np.zeros(self.n_bs)
        for u in range(self.n_users):
            m = serving[u]
            if not self.edge[m]:
                continue
            c = self.caches[m]
            c.record_request(int(requests[u]))
            hit[u] = c.lookup(int(requests[u]))
            hits_bs[m] += hit[u]
            req_bs[m] += 1
        rejected = self._apply_cache_op(op)
        # (5) delays, utilities, feasibility
        delta = sc.cache.delta
        eff_bits = np.where(hit == 1, delta * self.packet_bits, self.packet_bits)
        with np.errstate(divide="ignore"):
            d_trans = np.where(rate > 0, eff_bits / np.where(rate > 0, rate, 1.0), np.inf)
        delay, stable = qos.total_delays(d_trans, rate, eff_bits, self.eta, self.delay_cap)
        throughput = np.where(hit == 1, rate / delta, rate)
        u_vals = qos.utilities(self.slices, rate / self.r_ref, delay / self.d_ref, hit,
                               sc.cache.kappa, sc.reward.utility_mode)
        sla = qos.SlaReport.evaluate(self.slices, delay, rate, sc.sla_profiles)
        feas = qos.feasibility(sla, self.caches)
        assert feas.count("capacity") == 0
        # (6) reward
        utility_sum = qos.objective(u_vals.tolist())
        sla_pen = len(feas.violating_users()) / self.n_users
        ovf_pen = 1.0 if rejected else 0.0
        total = (utility_sum - sc.reward.sla_penalty * sla_pen
                 - sc.reward.overflow_penalty * ovf_pen)
        reward = RewardBreakdown(utility_sum, sla_pen, ovf_pen, total)
        # (7) metrics, bookkeeping
        metrics = StepMetrics(
            interval=self.t, action=int(action), serving=serving.copy(), rbgs=rbgs,
            rate_bps=rate, throughput_bps=throughput, delay_s=delay, stable=stable, hit=hit,
            utility=u_vals, sla=sla, reward=reward, cache_hits=hits_bs, cache_requests=req_bs,
            occupancy_bits=np.array([c.occupancy_bits for c in self.caches]),
        )
        decay = sc.cache.counter_decay
        self.decayed_hits = decay * self.decayed_hits + hits_bs
        self.decayed_requests = decay * self.decayed_requests + req_bs
        for c in self.caches:
            c.decay(decay)
        self.prev = metrics
        self.prev_action = int(action)
        self.t += 1
        done = self.t >= sc.reward.horizon
        return StepResult(self.observe(), reward, metrics, done)


def step(world: SliceEnv, action: int) -> StepResult:
    return world.step(action)


def observe(world: SliceEnv) -> np.ndarray:
    return world.observe()
