"""Content catalog, Zipf requests, per-BS LFU caches and cache-aware transmission delay."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .scenario import SLICES, Scenario, Slice


@dataclass(frozen=True)
class ContentItem:
    id: int
    size_bits: float
    popularity_rank: int
    slice: Slice = Slice.EMBB


class InfeasibleLink(ValueError):
    """Raised when a delay is requested over a link with zero rate."""


class Catalog:
    """Content items grouped into one Zipf-ranked sub-catalog per slice.

    Item ids are global; ranks are unique within a slice's sub-catalog.
    """

    def __init__(self, items: list[ContentItem], alpha: float = 0.8):
        if not items:
            raise ValueError("catalog is empty")
        self.items = list(items)
        self.alpha = float(alpha)
        ids = [it.id for it in self.items]
        if sorted(ids) != list(range(len(ids))):
            raise ValueError("item ids must be 0..n-1")
        self.items.sort(key=lambda it: it.id)
        self.sizes = np.array([it.size_bits for it in self.items], dtype=float)
        if np.any(self.sizes <= 0):
            raise ValueError("item sizes must be > 0")
        self._by_slice: dict[Slice, np.ndarray] = {}
        self._cdf: dict[Slice, np.ndarray] = {}
        for s in SLICES:
            members = sorted((it for it in self.items if it.slice == s),
                             key=lambda it: it.popularity_rank)
            if not members:
                continue
            ranks = [it.popularity_rank for it in members]
            if len(set(ranks)) != len(ranks) or min(ranks) < 1:
                raise ValueError(f"ranks must be unique and >= 1 within {s.label}")
            self._by_slice[s] = np.array([it.id for it in members])
            p = zipf_pmf(np.array(ranks, dtype=float), self.alpha)
            self._cdf[s] = np.cumsum(p)

    def __len__(self) -> int:
        return len(self.items)

    @classmethod
    def for_scenario(cls, scenario: Scenario) -> "Catalog":
        items = []
        for s in SLICES:
            size = scenario.sla_profiles[s].packet_size_bits
            for r in range(1, scenario.catalog_size + 1):
                items.append(ContentItem(len(items), size, r, s))
        return cls(items, scenario.cache.zipf_alpha)

    @classmethod
    def single_slice(cls, sizes, alpha: float = 0.8, slice_: Slice = Slice.EMBB) -> "Catalog":
        """Ranked by position: item ``i`` has rank ``i + 1``."""
        return cls([ContentItem(i, float(sz), i + 1, slice_) for i, sz in enumerate(sizes)],
                   alpha)

    def probabilities(self, slice_: Slice) -> tuple[np.ndarray, np.ndarray]:
        """(content ids, request probabilities) for one slice, rank order."""
        ids = self._by_slice[slice_]
        cdf = self._cdf[slice_]
        return ids, np.diff(np.concatenate([[0.0], cdf]))

    def size(self, f: int) -> float:
        return float(self.sizes[f])


def zipf_pmf(ranks: np.ndarray, alpha: float) -> np.ndarray:
    w = np.power(ranks, -alpha)
    return w / w.sum()


def sample_requests(slices, catalog: Catalog, rng: np.random.Generator) -> np.ndarray:
    """One Zipf draw per user from its slice's sub-catalog (inverse CDF)."""
    slices = np.asarray(slices, dtype=int)
    u = rng.random(slices.size)
    out = np.empty(slices.size, dtype=int)
    for s in SLICES:
        mask = slices == s
        if not mask.any():
            continue
        if s not in catalog._cdf:
            raise ValueError(f"catalog has no content for slice {s.label}")
        cdf = catalog._cdf[s]
        k = np.searchsorted(cdf, u[mask] * cdf[-1], side="right")
        out[mask] = catalog._by_slice[s][np.minimum(k, cdf.size - 1)]
    return out


def sample_request(user_slice: Slice, catalog: Catalog, rng: np.random.Generator) -> int:
    if len(catalog) == 0:
        raise ValueError("catalog is empty")
    return int(sample_requests([user_slice], catalog, rng)[0])


class AdmitOutcome(enum.Enum):
    ADMITTED = "admitted"
    ADMITTED_AFTER_EVICTION = "admitted-after-eviction"
    REJECTED = "rejected"


@dataclass
class AdmitResult:
    outcome: AdmitOutcome
    evicted: list[int] = field(default_factory=list)


@dataclass
class CacheState:
    """Cache contents of one base station.

    ``hit_counters`` drive LFU eviction; ``request_counts`` are the access
    popularity statistics used to pick the hottest uncached item.  Both decay
    once per control interval.
    """

    bs: int
    capacity_bits: float
    cached: dict[int, float] = field(default_factory=dict)  # content id -> size
    occupancy_bits: float = 0.0
    hit_counters: dict[int, float] = field(default_factory=dict)
    request_counts: dict[int, float] = field(default_factory=dict)
    hits: int = 0
    misses: int = 0

    def __contains__(self, f: int) -> bool:
        return f in self.cached

    def lookup(self, f: int) -> int:
        if f in self.cached:
            self.hit_counters[f] = self.hit_counters.get(f, 0.0) + 1.0
            self.hits += 1
            return 1
        self.misses += 1
        return 0

    def record_request(self, f: int) -> None:
        self.request_counts[f] = self.request_counts.get(f, 0.0) + 1.0

    def fits(self, size_bits: float) -> bool:
        return self.occupancy_bits + size_bits <= self.capacity_bits

    def evict(self, f: int) -> None:
        del self.cached[f]
        self.hit_counters.pop(f, None)
        self.occupancy_bits = self._recount()

    def _recount(self) -> float:
        return float(sum(self.cached.values()))

    def lfu_order(self) -> list[int]:
        """Eviction order: fewest hits, then larger size, then lower id."""
        return sorted(self.cached,
                      key=lambda f: (self.hit_counters.get(f, 0.0), -self.cached[f], f))

    def admit(self, f: int, size_bits: float) -> AdmitResult:
        if f in self.cached:
            return AdmitResult(AdmitOutcome.ADMITTED)
        if size_bits > self.capacity_bits:
            return AdmitResult(AdmitOutcome.REJECTED)
        evicted = []
        for victim in self.lfu_order():
            if self.fits(size_bits):
                break
            self.evict(victim)
            evicted.append(victim)
        self.cached[f] = float(size_bits)
        # New entries start from their observed request frequency, not zero.
        self.hit_counters[f] = self.request_counts.get(f, 0.0)
        self.occupancy_bits = self._recount()
        assert self.occupancy_bits <= self.capacity_bits
        outcome = AdmitOutcome.ADMITTED_AFTER_EVICTION if evicted else AdmitOutcome.ADMITTED
        return AdmitResult(outcome, evicted)

    def hottest_uncached(self) -> int | None:
        """Most-requested content not in the cache; lowest id on ties."""
        best, best_count = None, 0.0
        for f, c in self.request_counts.items():
            if f in self.cached or c <= 0:
                continue
            if c > best_count or (c == best_count and best is not None and f < best):
                best, best_count = f, c
        return best

    def decay(self, factor: float) -> None:
        for d in (self.hit_counters, self.request_counts):
            for k in list(d):
                d[k] *= factor
                if d[k] < 1e-6 and d is self.request_counts:
                    del d[k]

    def occupancy_fraction(self) -> float:
        return self.occupancy_bits / self.capacity_bits if self.capacity_bits > 0 else 0.0

    def copy(self) -> "CacheState":
        return CacheState(self.bs, self.capacity_bits, dict(self.cached), self.occupancy_bits,
                          dict(self.hit_counters), dict(self.request_counts), self.hits,
                          self.misses)


def lookup(cache: CacheState, f: int) -> int:
    return cache.lookup(f)


def admit(cache: CacheState, f: int, catalog: Catalog) -> AdmitResult:
    return cache.admit(f, catalog.size(f))


def transmission_delay(L_bits, rate_bps, H, delta):
    """``L / R`` on a miss, ``delta * L / R`` on a hit."""
    rate = np.asarray(rate_bps, dtype=float)
    if np.any(rate <= 0):
        raise InfeasibleLink("transmission over a zero-rate link")
    load = np.where(np.asarray(H) == 1, delta * np.asarray(L_bits, dtype=float), L_bits)
    out = load / rate
    return float(out) if np.ndim(out) == 0 else out
