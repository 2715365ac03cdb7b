"""Log-distance pathloss, full-reuse SINR and Shannon rates per resource block group."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import BaseStation, RadioParams


def pathloss_db(distance_m, ref_db: float = 38.0, exponent: float = 3.0):
    """``ref_db + 10 n log10(d)`` with distances clamped to at least 1 m."""
    d = np.maximum(np.asarray(distance_m, dtype=float), 1.0)
    out = ref_db + 10.0 * exponent * np.log10(d)
    return float(out) if out.ndim == 0 else out


def dbm_to_mw(dbm):
    return np.power(10.0, np.asarray(dbm, dtype=float) / 10.0)


def sinr(tx_power_dbm, pathloss_db, noise_dbm, interference_mw=0.0):
    """Linear SINR: received mW over noise plus interference mW."""
    rx = dbm_to_mw(np.asarray(tx_power_dbm, dtype=float) - np.asarray(pathloss_db, dtype=float))
    denom = dbm_to_mw(noise_dbm) + np.asarray(interference_mw, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(np.isinf(denom), 0.0, rx / denom)
    return float(out) if out.ndim == 0 else out


def achievable_rate(sinr_linear, rbgs_assigned, rbg_bandwidth_hz):
    """Shannon rate ``rbgs * B_rbg * log2(1 + sinr)`` in bit/s."""
    rbgs = np.asarray(rbgs_assigned, dtype=float)
    if np.any(rbgs < 0):
        raise ValueError("rbgs_assigned must be >= 0")
    out = rbgs * np.asarray(rbg_bandwidth_hz, dtype=float) * np.log2(
        1.0 + np.maximum(np.asarray(sinr_linear, dtype=float), 0.0))
    return float(out) if out.ndim == 0 else out


@dataclass
class LinkState:
    """All-pairs link budget; arrays indexed [user, bs]."""

    pathloss_db: np.ndarray
    sinr_linear: np.ndarray

    def spectral_efficiency(self) -> np.ndarray:
        return np.log2(1.0 + self.sinr_linear)


def link_states(positions: np.ndarray, base_stations, radio: RadioParams) -> LinkState:
    """Pathloss and SINR for every (user, BS) pair under full frequency reuse.

    Interference for link (u, m) is the sum of powers received by u from every
    other BS on the same RBG.
    """
    bs_pos = np.array([b.position for b in base_stations], dtype=float).reshape(-1, 2)
    tx = np.array([b.max_tx_power_dbm for b in base_stations], dtype=float)
    diff = positions[:, None, :] - bs_pos[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    pl = pathloss_db(dist, radio.pathloss_ref_db, radio.pathloss_exponent)
    pl = np.asarray(pl, dtype=float).reshape(dist.shape)
    rx = dbm_to_mw(tx[None, :] - pl)
    interference = rx.sum(axis=1, keepdims=True) - rx
    s = rx / (dbm_to_mw(radio.noise_dbm) + interference)
    return LinkState(pathloss_db=pl, sinr_linear=s)


def check_allocation(rbgs: np.ndarray, serving: np.ndarray, base_stations) -> None:
    """Assert the per-BS RBG budget holds for an integer per-user allocation."""
    if np.any(rbgs < 0):
        raise AssertionError("negative RBG count")
    used = np.bincount(serving, weights=rbgs, minlength=len(base_stations))
    budget = np.array([b.rbg_count for b in base_stations])
    if np.any(used > budget):
        raise AssertionError(f"RBG budget exceeded: used {used}, budget {budget}")


def rbg_bandwidths(base_stations: tuple[BaseStation, ...]) -> np.ndarray:
    return np.array([b.rbg_bandwidth_hz for b in base_stations], dtype=float)
