"""Topology, slice populations, SLA profiles, RNG streams and pedestrian mobility.

Scenarios are described by a YAML document (see ``configs/`` and the README for
the schema).  Loading is strict: unknown keys are rejected and every error
names the offending key.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields, replace
from typing import Any, Mapping

import numpy as np
import yaml


class Slice(enum.IntEnum):
    EMBB = 0
    URLLC = 1
    MBRLLC = 2

    @property
    def label(self) -> str:
        return {Slice.EMBB: "eMBB", Slice.URLLC: "URLLC", Slice.MBRLLC: "MBRLLC"}[self]

    @classmethod
    def from_label(cls, text: str) -> "Slice":
        for s in cls:
            if s.label.lower() == str(text).lower():
                return s
        raise ConfigError(f"unknown slice {text!r}", key="slice")


SLICES = tuple(Slice)
STREAM_NAMES = ("mobility", "traffic", "agent", "channel", "placement")


class ConfigError(ValueError):
    """Invalid scenario or hyperparameter document."""

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


@dataclass(frozen=True)
class SlaProfile:
    packet_size_bits: float
    arrival_rate: float  # packets / s
    delay_threshold: float  # s
    rate_threshold: float  # bit / s

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"must be a positive number, got {v!r}", key=f.name)


# Traffic from the evaluated deployment (200 KB @ 10 pkt/s, 2 MB @ 30 pkt/s);
# thresholds are documented choices.
DEFAULT_SLA = {
    Slice.EMBB: SlaProfile(2e6 * 8, 30.0, 0.050, 10e6),
    Slice.URLLC: SlaProfile(200e3 * 8, 10.0, 0.010, 1e6),
    Slice.MBRLLC: SlaProfile(2e6 * 8, 30.0, 0.010, 10e6),
}


@dataclass(frozen=True)
class BaseStation:
    id: int
    position: tuple[float, float]
    bandwidth_hz: float = 10e6
    rbg_count: int = 50
    max_tx_power_dbm: float = 23.0
    cache_capacity_bits: float = 0.0
    edge_server: bool = True

    def __post_init__(self):
        if not self.bandwidth_hz > 0:
            raise ConfigError(f"must be > 0, got {self.bandwidth_hz}", key="bandwidth_hz")
        if int(self.rbg_count) != self.rbg_count or self.rbg_count < 1:
            raise ConfigError(f"must be an integer >= 1, got {self.rbg_count}", key="rbg_count")
        if self.cache_capacity_bits < 0:
            raise ConfigError(f"must be >= 0, got {self.cache_capacity_bits}",
                              key="cache_capacity_bits")

    @property
    def rbg_bandwidth_hz(self) -> float:
        return self.bandwidth_hz / self.rbg_count


@dataclass
class UserEquipment:
    id: int
    slice: Slice
    position: tuple[float, float]
    speed: float
    waypoint: tuple[float, float]
    attached_bs: int = 0
    pending_request: int | None = None


@dataclass(frozen=True)
class RadioParams:
    pathloss_ref_db: float = 38.0
    pathloss_exponent: float = 3.0
    noise_dbm: float = -113.8  # per RBG: thermal at 200 kHz plus 7 dB noise figure


@dataclass(frozen=True)
class CacheParams:
    delta: float = 0.5
    kappa: float = 0.7
    zipf_alpha: float = 0.8
    counter_decay: float = 0.99

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ConfigError(f"must lie in (0, 1), got {self.delta}", key="delta")
        if not 0 <= self.kappa <= 1:
            raise ConfigError(f"must lie in [0, 1], got {self.kappa}", key="kappa")
        if self.zipf_alpha < 0:
            raise ConfigError(f"must be >= 0, got {self.zipf_alpha}", key="zipf_alpha")
        if not 0 < self.counter_decay <= 1:
            raise ConfigError(f"must lie in (0, 1], got {self.counter_decay}",
                              key="counter_decay")


UTILITY_MODES = ("full", "latency", "throughput", "unshaped")


@dataclass(frozen=True)
class RewardParams:
    sla_penalty: float = 1.0
    overflow_penalty: float = 0.5
    horizon: int = 200
    # "full": per-slice utility; "latency"/"throughput": one form for every slice;
    # "unshaped": mixed form with slice-agnostic reference scales.
    utility_mode: str = "full"
    delay_cap_factor: float = 10.0

    def __post_init__(self):
        if self.utility_mode not in UTILITY_MODES:
            raise ConfigError(f"must be one of {UTILITY_MODES}, got {self.utility_mode!r}",
                              key="utility_mode")
        if self.horizon < 1:
            raise ConfigError(f"must be >= 1, got {self.horizon}", key="horizon")
        if self.sla_penalty < 0 or self.overflow_penalty < 0:
            raise ConfigError("penalty weights must be >= 0", key="penalties")


@dataclass(frozen=True)
class Scenario:
    base_stations: tuple[BaseStation, ...]
    users: tuple[UserEquipment, ...]
    sla_profiles: Mapping[Slice, SlaProfile]
    catalog_size: int = 200
    coverage_radius_m: float = 150.0
    control_interval_s: float = 0.1
    seed: int = 0
    radio: RadioParams = field(default_factory=RadioParams)
    cache: CacheParams = field(default_factory=CacheParams)
    reward: RewardParams = field(default_factory=RewardParams)
    # Per-slice RBG splits (eMBB, URLLC, MBRLLC); None selects the built-in list.
    action_templates: tuple[tuple[int, int, int], ...] | None = None

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_bs(self) -> int:
        return len(self.base_stations)

    def slice_counts(self) -> dict[Slice, int]:
        counts = {s: 0 for s in SLICES}
        for u in self.users:
            counts[u.slice] += 1
        return counts

    def with_edge_servers(self, k: int) -> "Scenario":
        """Keep caches and edge service on the ``k`` lowest-id base stations only."""
        if not 0 <= k <= self.n_bs:
            raise ConfigError(f"must lie in [0, {self.n_bs}], got {k}", key="edge_servers")
        bss = tuple(replace(b, edge_server=b.id < k) for b in self.base_stations)
        return replace(self, base_stations=bss)

    def with_kappa(self, kappa: float) -> "Scenario":
        return replace(self, cache=replace(self.cache, kappa=kappa))

    def with_utility_mode(self, mode: str) -> "Scenario":
        return replace(self, reward=replace(self.reward, utility_mode=mode))

    def with_seed(self, seed: int) -> "Scenario":
        """Same topology and config, users re-placed from the new seed."""
        counts = {s: 0 for s in SLICES}
        for u in self.users:
            counts[u.slice] += 1
        per_bs = {s: counts[s] // self.n_bs for s in SLICES}
        users = _place_users(self.n_bs, per_bs, self.coverage_radius_m,
                             rng_streams(seed)["placement"])
        return replace(self, users=users, seed=seed)


# --------------------------------------------------------------------------
# RNG streams

def rng_streams(seed: int) -> dict[str, np.random.Generator]:
    """Fan one 64-bit seed out to independent named generators."""
    children = np.random.SeedSequence(int(seed) & (2**64 - 1)).spawn(len(STREAM_NAMES))
    return {name: np.random.default_rng(ss) for name, ss in zip(STREAM_NAMES, children)}


# --------------------------------------------------------------------------
# Mobility

def uniform_in_disc(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    theta = 2.0 * np.pi * rng.random(n)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


@dataclass
class MobilityState:
    """Array view of user kinematics, shape (n, 2) for positions and waypoints."""

    positions: np.ndarray
    waypoints: np.ndarray
    speeds: np.ndarray
    radius: float
    min_speed: float = 1.0
    max_speed: float = 3.0

    @classmethod
    def from_users(cls, users, radius: float) -> "MobilityState":
        return cls(
            positions=np.array([u.position for u in users], dtype=float).reshape(-1, 2),
            waypoints=np.array([u.waypoint for u in users], dtype=float).reshape(-1, 2),
            speeds=np.array([u.speed for u in users], dtype=float),
            radius=float(radius),
        )

    def copy(self) -> "MobilityState":
        return MobilityState(self.positions.copy(), self.waypoints.copy(), self.speeds.copy(),
                             self.radius, self.min_speed, self.max_speed)


def step_mobility(state: MobilityState, dt: float, rng: np.random.Generator) -> np.ndarray:
    """Advance every user toward its waypoint by ``speed * dt``.

    Users that reach their waypoint within the interval stop on it and draw a
    fresh uniform waypoint in the disc and a fresh speed.  Draws happen only for
    arrived users, in index order.  Returns the updated positions (also stored
    in ``state``).
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    delta = state.waypoints - state.positions
    dist = np.hypot(delta[:, 0], delta[:, 1])
    step = state.speeds * dt
    arrived = dist <= step
    moving = ~arrived
    frac = np.zeros_like(dist)
    frac[moving] = step[moving] / dist[moving]
    state.positions[moving] += delta[moving] * frac[moving, None]
    idx = np.flatnonzero(arrived)
    if idx.size:
        state.positions[idx] = state.waypoints[idx]
        state.waypoints[idx] = uniform_in_disc(rng, idx.size, state.radius)
        state.speeds[idx] = rng.uniform(state.min_speed, state.max_speed, idx.size)
    # Convex combination of two in-disc points stays in the disc; guard rounding.
    r = np.hypot(state.positions[:, 0], state.positions[:, 1])
    over = r > state.radius
    if over.any():
        state.positions[over] *= (state.radius / r[over])[:, None]
    return state.positions


def attach_users(rate_matrix: np.ndarray) -> np.ndarray:
    """Serving BS per user: highest achievable rate, lowest BS id on ties.

    ``rate_matrix`` has shape (n_users, n_bs).  ``np.argmax`` returns the first
    maximum, which is the lowest id.
    """
    rate_matrix = np.asarray(rate_matrix, dtype=float)
    if rate_matrix.ndim != 2 or rate_matrix.shape[1] == 0:
        raise ValueError("rate matrix must have shape (n_users, n_bs) with n_bs >= 1")
    return np.argmax(rate_matrix, axis=1)


# --------------------------------------------------------------------------
# Construction and loading

def default_bs_positions(n: int, radius: float) -> list[tuple[float, float]]:
    """One site at the centre, the rest evenly spaced on a ring at 0.6 R."""
    if n == 1:
        return [(0.0, 0.0)]
    ring = 0.6 * radius
    pos = [(0.0, 0.0)]
    for k in range(n - 1):
        a = 2.0 * math.pi * k / (n - 1)
        pos.append((round(ring * math.cos(a), 9), round(ring * math.sin(a), 9)))
    return pos


def _place_users(n_bs: int, per_bs: Mapping[Slice, int], radius: float,
                 rng: np.random.Generator) -> tuple[UserEquipment, ...]:
    slices = [s for _ in range(n_bs) for s in SLICES for _ in range(per_bs[s])]
    n = len(slices)
    pos = uniform_in_disc(rng, n, radius)
    wps = uniform_in_disc(rng, n, radius)
    speeds = rng.uniform(1.0, 3.0, n)
    return tuple(
        UserEquipment(id=i, slice=s, position=(float(pos[i, 0]), float(pos[i, 1])),
                      speed=float(speeds[i]), waypoint=(float(wps[i, 0]), float(wps[i, 1])))
        for i, s in enumerate(slices)
    )


def make_scenario(
    n_bs: int = 7,
    users_per_bs: Mapping[Slice, int] | None = None,
    *,
    seed: int = 0,
    coverage_radius_m: float = 150.0,
    control_interval_s: float = 0.1,
    catalog_size: int = 200,
    bandwidth_hz: float = 10e6,
    rbg_count: int = 50,
    max_tx_power_dbm: float = 23.0,
    cache_capacity_bits: float = 0.0,
    edge_servers: int | None = None,
    sla_profiles: Mapping[Slice, SlaProfile] | None = None,
    radio: RadioParams | None = None,
    cache: CacheParams | None = None,
    reward: RewardParams | None = None,
    bs_positions: list[tuple[float, float]] | None = None,
    action_templates=None,
) -> Scenario:
    if n_bs < 1:
        raise ConfigError("at least one base station is required", key="base_stations")
    if not coverage_radius_m > 0:
        raise ConfigError(f"must be > 0, got {coverage_radius_m}", key="coverage_radius_m")
    if not control_interval_s > 0:
        raise ConfigError(f"must be > 0, got {control_interval_s}", key="control_interval_s")
    if catalog_size < 1:
        raise ConfigError(f"must be >= 1, got {catalog_size}", key="catalog_size")
    per_bs = dict(users_per_bs or {s: 14 for s in SLICES})
    for s in SLICES:
        per_bs.setdefault(s, 0)
        if per_bs[s] < 0:
            raise ConfigError(f"must be >= 0, got {per_bs[s]}", key=f"users_per_bs.{s.label}")
    if sum(per_bs.values()) < 1:
        raise ConfigError("at least one user is required", key="users_per_bs")
    positions = bs_positions or default_bs_positions(n_bs, coverage_radius_m)
    if len(positions) != n_bs:
        raise ConfigError("one position per base station is required", key="positions")
    k = n_bs if edge_servers is None else int(edge_servers)
    if not 0 <= k <= n_bs:
        raise ConfigError(f"must lie in [0, {n_bs}], got {k}", key="edge_servers")
    bss = tuple(
        BaseStation(id=m, position=(float(p[0]), float(p[1])), bandwidth_hz=bandwidth_hz,
                    rbg_count=int(rbg_count), max_tx_power_dbm=max_tx_power_dbm,
                    cache_capacity_bits=cache_capacity_bits, edge_server=m < k)
        for m, p in enumerate(positions)
    )
    if action_templates is not None:
        try:
            action_templates = tuple(tuple(int(x) for x in t) for t in action_templates)
        except (TypeError, ValueError):
            raise ConfigError("must be a list of integer triples", key="action_templates") from None
        if not action_templates or any(len(t) != 3 or min(t) < 0 for t in action_templates):
            raise ConfigError("must be a nonempty list of nonnegative triples",
                              key="action_templates")
        if any(sum(t) > rbg_count for t in action_templates):
            raise ConfigError(f"a template exceeds {rbg_count} RBGs", key="action_templates")
    users = _place_users(n_bs, per_bs, coverage_radius_m, rng_streams(seed)["placement"])
    return Scenario(
        base_stations=bss,
        users=users,
        sla_profiles=dict(sla_profiles or DEFAULT_SLA),
        catalog_size=int(catalog_size),
        coverage_radius_m=float(coverage_radius_m),
        control_interval_s=float(control_interval_s),
        seed=int(seed),
        radio=radio or RadioParams(),
        cache=cache or CacheParams(),
        reward=reward or RewardParams(),
        action_templates=action_templates,
    )


_TOP_KEYS = {"seed", "coverage_radius_m", "control_interval_s", "catalog_size",
             "base_stations", "users_per_bs", "sla", "radio", "cache", "reward",
             "action_templates"}
_BS_KEYS = {"count", "bandwidth_hz", "rbg_count", "max_tx_power_dbm", "cache_capacity_bits",
            "edge_servers", "positions"}
_SLA_KEYS = {f.name for f in fields(SlaProfile)}


def _check_keys(section: Any, allowed: set[str], where: str) -> dict:
    if section is None:
        return {}
    if not isinstance(section, Mapping):
        raise ConfigError("must be a mapping", key=where)
    unknown = sorted(set(section) - allowed)
    if unknown:
        name = f"{where}.{unknown[0]}" if where else unknown[0]
        raise ConfigError("unknown key", key=name)
    return dict(section)


def _num(section: Mapping, key: str, default, where: str, cast=float):
    if key not in section:
        return default
    v = section[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        try:
            v = cast(v)
        except (TypeError, ValueError):
            raise ConfigError(f"must be numeric, got {v!r}", key=f"{where}{key}") from None
    return cast(v)


def scenario_from_dict(doc: Mapping) -> Scenario:
    doc = _check_keys(doc, _TOP_KEYS, "")
    if "base_stations" not in doc:
        raise ConfigError("required key missing", key="base_stations")
    bs = doc["base_stations"]
    if isinstance(bs, int) and not isinstance(bs, bool):
        bs = {"count": bs}
    bs = _check_keys(bs, _BS_KEYS, "base_stations")
    if "count" not in bs:
        raise ConfigError("required key missing", key="base_stations.count")
    n_bs = _num(bs, "count", None, "base_stations.", int)
    if n_bs < 1:
        raise ConfigError("at least one base station is required", key="base_stations")

    with_defaults = dict(DEFAULT_SLA)
    sla_doc = _check_keys(doc.get("sla"), {s.label for s in SLICES}, "sla")
    for label, prof in sla_doc.items():
        s = Slice.from_label(label)
        prof = _check_keys(prof, _SLA_KEYS, f"sla.{label}")
        base = DEFAULT_SLA[s]
        try:
            with_defaults[s] = SlaProfile(**{
                k: _num(prof, k, getattr(base, k), f"sla.{label}.") for k in _SLA_KEYS})
        except ConfigError as e:
            if e.key in _SLA_KEYS:
                raise ConfigError(str(e).split(": ", 1)[-1], key=f"sla.{label}.{e.key}") from None
            raise

    upb_doc = _check_keys(doc.get("users_per_bs"), {s.label for s in SLICES}, "users_per_bs")
    per_bs = {s: 14 for s in SLICES}
    for label, n in upb_doc.items():
        per_bs[Slice.from_label(label)] = _num(upb_doc, label, 14, "users_per_bs.", int)

    def section(name, cls):
        sec = _check_keys(doc.get(name), {f.name for f in fields(cls)}, name)
        kwargs = {}
        for f in fields(cls):
            if f.name in sec:
                if f.type in ("str",) or isinstance(f.default, str):
                    kwargs[f.name] = str(sec[f.name])
                elif isinstance(f.default, int) and not isinstance(f.default, bool):
                    kwargs[f.name] = _num(sec, f.name, f.default, f"{name}.", int)
                else:
                    kwargs[f.name] = _num(sec, f.name, f.default, f"{name}.")
        try:
            return cls(**kwargs)
        except ConfigError as e:
            raise ConfigError(str(e).split(": ", 1)[-1], key=f"{name}.{e.key}") from None

    radio = section("radio", RadioParams)
    cache = section("cache", CacheParams)
    reward = section("reward", RewardParams)

    positions = bs.get("positions")
    if positions is not None:
        try:
            positions = [(float(p[0]), float(p[1])) for p in positions]
        except (TypeError, ValueError, IndexError):
            raise ConfigError("must be a list of [x, y] pairs",
                              key="base_stations.positions") from None

    try:
        return make_scenario(
            n_bs,
            per_bs,
            seed=_num(doc, "seed", 0, "", int),
            coverage_radius_m=_num(doc, "coverage_radius_m", 150.0, ""),
            control_interval_s=_num(doc, "control_interval_s", 0.1, ""),
            catalog_size=_num(doc, "catalog_size", 200, "", int),
            bandwidth_hz=_num(bs, "bandwidth_hz", 10e6, "base_stations."),
            rbg_count=_num(bs, "rbg_count", 50, "base_stations.", int),
            max_tx_power_dbm=_num(bs, "max_tx_power_dbm", 23.0, "base_stations."),
            cache_capacity_bits=_num(bs, "cache_capacity_bits", 0.0, "base_stations."),
            edge_servers=_num(bs, "edge_servers", n_bs, "base_stations.", int),
            sla_profiles=with_defaults,
            radio=radio,
            cache=cache,
            reward=reward,
            bs_positions=positions,
            action_templates=doc.get("action_templates"),
        )
    except ConfigError as e:
        if e.key in {f.name for f in fields(BaseStation)}:
            raise ConfigError(str(e).split(": ", 1)[-1], key=f"base_stations.{e.key}") from None
        raise


def load_scenario(config_text: str) -> Scenario:
    """Parse and validate a YAML scenario document."""
    try:
        doc = yaml.safe_load(config_text)
    except yaml.YAMLError as e:
        raise ConfigError(f"parse failure: {e}") from None
    if doc is None:
        doc = {}
    if not isinstance(doc, Mapping):
        raise ConfigError("top level must be a mapping")
    return scenario_from_dict(doc)


def load_scenario_file(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return load_scenario(fh.read())
