"""Cluster grid, spatial-reuse scheduling and the multi-band delivery cascade.

The cell is partitioned into square clusters; a device may only fetch from
holders in its own cluster.  At most one link transmits per cluster per slot,
and clusters activate under a K-color time-frequency reuse pattern (K a
perfect square).  Links within a cluster share slots round-robin, so a link's
long-term average rate embeds both the 1/K duty cycle and the intra-cluster
share.  Microwave links see the co-channel interference of all co-active
transmitters as noise; mm-wave links are interference-free (pencil beams) but
fragile (walls and bodies kill them).

Delivery cascade per user: own cache -> mm-wave D2D -> 2.45 GHz D2D -> base
station (admission-controlled) -> outage.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import channel as ch
from .channel import Band, BandConfig, dbm_to_mw, noise_power_dbm
from .geometry import (CellLayout, Environment, NodePlacement,
                       classify_d2d_arrays, classify_bs_arrays)
from .rng import keyed_u01, keyed_normal

SELF_CACHE = -1  # tx sentinel for requests served from the user's own cache

# purpose salts for counter-based channel draws
_P_LOS, _P_SHADOW, _P_BODY, _P_BS_LOS, _P_BS_SHADOW, _P_BS_BODY = (
    0x11, 0x20, 0x40, 0x61, 0x70, 0x90)
_BAND_INDEX = {Band.MMWAVE38: 0, Band.ISM2_45: 1, Band.CELLULAR2_1: 2}


class Tier:
    SELF_CACHE = 0
    MMWAVE = 1
    MICROWAVE = 2
    BASE_STATION = 3
    OUTAGE = 4
    NAMES = ("self", "mmwave", "uwave", "bs", "outage")


def reuse_parameter(delta: float) -> int:
    """Reuse factor K = (ceil(sqrt(2)(1+delta)) + 1)^2 of the protocol model."""
    if delta < 0:
        raise ValueError("interference parameter must be non-negative")
    return int(math.ceil(math.sqrt(2.0) * (1.0 + delta)) + 1) ** 2


@dataclass(frozen=True)
class ClusterGrid:
    cell_side: float
    cluster_side: float
    cells_per_side: int
    reuse_k: int
    delta: float | None = None     # analytic mode only
    tx_range: float | None = None  # analytic mode only

    @property
    def n_clusters(self) -> int:
        return self.cells_per_side ** 2

    def cluster_index(self, xy: np.ndarray) -> np.ndarray:
        xy = np.atleast_2d(xy)
        ij = np.clip((xy / self.cluster_side).astype(np.int64), 0, self.cells_per_side - 1)
        return ij[:, 1] * self.cells_per_side + ij[:, 0]

    def color(self, cluster: np.ndarray) -> np.ndarray:
        root = int(math.isqrt(self.reuse_k))
        ix = np.asarray(cluster) % self.cells_per_side
        iy = np.asarray(cluster) // self.cells_per_side
        return (ix % root) + root * (iy % root)


def build_clusters(cell_side: float, cluster_side: float, reuse_k: int,
                   *, delta: float | None = None, tx_range: float | None = None) -> ClusterGrid:
    if cluster_side <= 0 or cluster_side > cell_side:
        raise ValueError("cluster_side must lie in (0, cell_side]")
    root = math.isqrt(reuse_k)
    if root * root != reuse_k:
        raise ValueError(f"reuse factor must be a perfect square, got {reuse_k}")
    cells = int(math.ceil(cell_side / cluster_side))
    return ClusterGrid(cell_side=cell_side, cluster_side=cluster_side,
                       cells_per_side=cells, reuse_k=reuse_k, delta=delta, tx_range=tx_range)


@dataclass
class PotentialLink:
    rx: int
    tx: int                  # SELF_CACHE when served from the user's own cache
    file: int
    cluster: int
    capacity_bps: dict = field(default_factory=dict)  # band value -> candidate rate


def find_potential_links(grid: ClusterGrid, placement: NodePlacement,
                         caches, requests: np.ndarray) -> list[PotentialLink]:
    """One entry per user whose request is available in its cluster.

    Own-cache hits yield SELF_CACHE entries; otherwise the nearest same-cluster
    holder serves, ties broken by the lowest node index.  Users with no holder
    in the cluster get no entry (outage candidates).
    """
    n = placement.n
    cluster_of = grid.cluster_index(placement.positions)
    files = caches.files
    m_hi = int(files.max(initial=0)) + 1
    self_hit = (files == requests[:, None]).any(axis=1)

    ent_key = (np.repeat(cluster_of, files.shape[1]) * m_hi + files.ravel()).astype(np.int64)
    ent_node = np.repeat(np.arange(n), files.shape[1])
    order = np.argsort(ent_key, kind="stable")  # node index ascending within a key
    skey, snode = ent_key[order], ent_node[order]

    pos = placement.positions
    links: list[PotentialLink] = []
    want = cluster_of.astype(np.int64) * m_hi + requests.astype(np.int64)
    lo = np.searchsorted(skey, want, side="left")
    hi = np.searchsorted(skey, want, side="right")
    for u in range(n):
        if self_hit[u]:
            links.append(PotentialLink(rx=u, tx=SELF_CACHE, file=int(requests[u]),
                                       cluster=int(cluster_of[u])))
            continue
        cand = snode[lo[u]:hi[u]]
        if cand.size == 0:
            continue
        d2 = ((pos[cand] - pos[u]) ** 2).sum(axis=1)
        best = cand[int(np.argmin(d2))]  # first minimum -> lowest index on ties
        links.append(PotentialLink(rx=u, tx=int(best), file=int(requests[u]),
                                   cluster=int(cluster_of[u])))
    return links


class ChannelSampler:
    """Frozen per-realization channel realizations for all link types.

    Every primitive draw (environmental LOS, shadowing, body shadowing) is a
    pure function of (master seed, realization key, purpose, node pair), so
    values do not depend on evaluation order or worker count.  Draws are
    cached per unordered pair per band; the environmental LOS draw is shared
    across bands (LOS existence is frequency-independent).
    """

    def __init__(self, layout: CellLayout, placement: NodePlacement,
                 table: ch.PathlossTable, bands: dict[Band, BandConfig],
                 master_seed: int, realization_key: int,
                 floor_free_space: bool = True):
        self.layout = layout
        self.placement = placement
        self.table = table
        self.bands = bands
        self.keys = (int(master_seed) & 0xFFFFFFFFFFFF, int(realization_key) & 0xFFFFFFFF)
        self.floor = floor_free_space
        empty = (np.empty(0, dtype=np.int64), np.empty(0))
        self._pair_cache: dict[Band, tuple[np.ndarray, np.ndarray]] = {b: empty for b in bands}
        self._bs_cache: dict[Band, np.ndarray] = {}

    # -- device-to-device -------------------------------------------------

    def rx_power_mw(self, tx: np.ndarray, rx: np.ndarray, band: Band) -> np.ndarray:
        """Received power (mW) of tx->rx device links; 0 where no link exists."""
        tx = np.asarray(tx, dtype=np.int64)
        rx = np.asarray(rx, dtype=np.int64)
        n = self.placement.n
        pack = np.minimum(tx, rx) * n + np.maximum(tx, rx)
        keys, vals = self._pair_cache[band]
        pos = np.searchsorted(keys, pack)
        safe = np.minimum(pos, max(keys.size - 1, 0))
        hit = (keys[safe] == pack) if keys.size else np.zeros(pack.shape, dtype=bool)
        if not np.all(hit):
            new = np.unique(pack[~hit])
            new_vals = self._compute_d2d(new // n, new % n, band)
            keys = np.concatenate([keys, new])
            vals = np.concatenate([vals, new_vals])
            order = np.argsort(keys, kind="stable")
            keys, vals = keys[order], vals[order]
            self._pair_cache[band] = (keys, vals)
            pos = np.searchsorted(keys, pack)
        return vals[pos]

    def _compute_d2d(self, a: np.ndarray, b: np.ndarray, band: Band) -> np.ndarray:
        cfg = self.bands[band]
        mm = cfg.band is Band.MMWAVE38
        bi = _BAND_INDEX[cfg.band]
        d, scen, n_w = classify_d2d_arrays(self.layout, self.placement, a, b)
        mw = np.zeros(a.shape)
        sel = d <= cfg.max_range_m  # out-of-range pairs need no channel draws
        if not np.any(sel):
            return mw
        a, b, d, scen, n_w = a[sel], b[sel], d[sel], scen[sel], n_w[sel]
        p_los = ch.los_probability_arr(scen, self.layout.environment, d)
        u_env = keyed_u01(*self.keys, _P_LOS, a, b)
        states = ch.states_from_uniform(p_los, u_env, mm)
        mean = ch.pathloss_mean_db(self.table, cfg, self.layout.environment,
                                   scen, states, d, n_w=n_w,
                                   bs_height=self.layout.bs_height,
                                   ms_height=self.layout.ms_height)
        sigma = ch.shadow_sigma_db(self.table, cfg, self.layout.environment,
                                   scen, states, d,
                                   bs_height=self.layout.bs_height,
                                   ms_height=self.layout.ms_height)
        pl = mean + sigma * keyed_normal(*self.keys, _P_SHADOW + bi, a, b)
        body = ch.body_sigma_db(cfg, states)
        pl = pl + body * keyed_normal(*self.keys, _P_BODY + bi, a, b)
        if self.floor:
            pl = ch.apply_free_space_floor(pl, mean, d, cfg.carrier_hz)
        sub = dbm_to_mw(cfg.eirp_gain_dbm - pl)
        sub[np.isinf(pl)] = 0.0
        mw[sel] = sub
        return mw

    # -- base station ------------------------------------------------------

    def bs_rx_power_mw(self, band: Band) -> np.ndarray:
        """Received downlink power (mW) from the BS at every node."""
        if band in self._bs_cache:
            return self._bs_cache[band]
        cfg = self.bands[band]
        bi = _BAND_INDEX[cfg.band]
        d, scen, d_in = classify_bs_arrays(self.layout, self.placement)
        p_los = ch.los_probability_arr(scen, self.layout.environment, d)
        nodes = np.arange(self.placement.n)
        u_env = keyed_u01(*self.keys, _P_BS_LOS, nodes, 0)
        states = ch.states_from_uniform(p_los, u_env, False)
        mean = ch.pathloss_mean_db(self.table, cfg, self.layout.environment,
                                   scen, states, d, d_in=d_in,
                                   bs_height=self.layout.bs_height,
                                   ms_height=self.layout.ms_height)
        sigma = ch.shadow_sigma_db(self.table, cfg, self.layout.environment,
                                   scen, states, d,
                                   bs_height=self.layout.bs_height,
                                   ms_height=self.layout.ms_height)
        pl = mean + sigma * keyed_normal(*self.keys, _P_BS_SHADOW + bi, nodes, 0)
        body = ch.body_sigma_db(cfg, states)
        pl = pl + body * keyed_normal(*self.keys, _P_BS_BODY + bi, nodes, 0)
        if self.floor:
            pl = ch.apply_free_space_floor(pl, mean, d, cfg.carrier_hz)
        mw = dbm_to_mw(cfg.eirp_gain_dbm - pl)
        mw[np.isinf(pl)] = 0.0
        self._bs_cache[band] = mw
        return mw


def schedule_and_rate(grid: ClusterGrid, links: list[PotentialLink], rx_power,
                      band_cfg: BandConfig, *, rounds_factor: int = 10,
                      interference: bool | None = None) -> np.ndarray:
    """Long-term average rate (bit/s) of each link under reuse-K round-robin.

    ``rx_power(tx_array, rx_array) -> mW`` supplies the frozen channel.  Per
    scheduling round, every cluster of the active color transmits its next
    link; a link's average over all rounds therefore embeds the 1/K duty
    cycle and its intra-cluster share.  Interference sums the received power
    of all co-active transmitters (skipped for mm-wave).
    """
    if interference is None:
        interference = band_cfg.band is not Band.MMWAVE38
    n_links = len(links)
    rates = np.zeros(n_links)
    if n_links == 0:
        return rates
    tx = np.array([l.tx for l in links], dtype=np.int64)
    rx = np.array([l.rx for l in links], dtype=np.int64)
    cluster = np.array([l.cluster for l in links], dtype=np.int64)
    k_reuse = grid.reuse_k
    colors_of = grid.color(np.arange(grid.n_clusters))

    members: dict[int, np.ndarray] = {}
    for c in np.unique(cluster):
        members[int(c)] = np.nonzero(cluster == c)[0]
    max_len = max(len(v) for v in members.values())
    steps = rounds_factor * max_len
    total_rounds = steps * k_reuse

    noise_mw = float(dbm_to_mw(noise_power_dbm(band_cfg.bandwidth_hz)))
    sig_mw = rx_power(tx, rx)
    acc = np.zeros(n_links)

    for color in range(k_reuse):
        act_clusters = [c for c in sorted(members) if colors_of[c] == color]
        if not act_clusters:
            continue
        lens = np.array([len(members[c]) for c in act_clusters])
        padded = np.full((len(act_clusters), lens.max()), -1, dtype=np.int64)
        for i, c in enumerate(act_clusters):
            padded[i, :lens[i]] = members[c]
        idx = np.mod(np.arange(steps)[None, :], lens[:, None])
        act = np.take_along_axis(padded, idx, axis=1)  # (n_act, steps) link ids

        if interference and len(act_clusters) > 1:
            tx_nodes = tx[act]                                   # (n_act, steps)
            rx_nodes = rx[act]
            n_act = len(act_clusters)
            t_b = np.broadcast_to(tx_nodes[:, None, :], (n_act, n_act, steps))
            r_b = np.broadcast_to(rx_nodes[None, :, :], (n_act, n_act, steps))
            imw = rx_power(t_b.ravel(), r_b.ravel()).reshape(n_act, n_act, steps)
            imw[np.arange(n_act), np.arange(n_act), :] = 0.0
            interf = imw.sum(axis=0)                             # (n_act, steps) at rx
        else:
            interf = np.zeros(act.shape)

        sinr = sig_mw[act] / (noise_mw + interf)
        cap = band_cfg.bandwidth_hz * np.log2(1.0 + sinr)
        np.add.at(acc, act, cap)
    return acc / total_rounds


@dataclass
class ScheduleOutcome:
    throughput_bps: np.ndarray  # (n,)
    tier: np.ndarray            # (n,) Tier codes

    @property
    def n(self) -> int:
        return self.throughput_bps.shape[0]

    def tier_counts(self) -> dict[str, int]:
        return {name: int(np.sum(self.tier == code))
                for code, name in enumerate(Tier.NAMES)}


@dataclass(frozen=True)
class SchemePoint:
    t_min_bps: float
    p_o: float
    tier_counts: dict | None = None


def throughput_outage_point(outcome: ScheduleOutcome, threshold_bps: float) -> SchemePoint:
    """Outage fraction and mean throughput over the served (non-outage) users."""
    served = outcome.throughput_bps >= threshold_bps
    p_o = float(1.0 - served.mean()) if outcome.n else 1.0
    t_min = float(outcome.throughput_bps[served].mean()) if served.any() else 0.0
    return SchemePoint(t_min_bps=t_min, p_o=p_o, tier_counts=outcome.tier_counts())


def multiband_delivery(grid: ClusterGrid, placement: NodePlacement, caches,
                       requests: np.ndarray, sampler: ChannelSampler,
                       d2d_bands: list[Band], bs_band: Band | None, *,
                       threshold_bps: float = 100e3, self_cache_rate_bps: float = 2e6,
                       rounds_factor: int = 10, bs_budget: int | None = None
                       ) -> ScheduleOutcome:
    """Run the per-user delivery cascade and all band schedulers.

    A user goes to the first tier whose candidate (point-to-point) capacity
    meets the playback threshold; all viable D2D links are then served, with
    their realized average rates reflecting slot sharing and interference.
    Users with no cluster holder or no viable band fall to the base station,
    which admits the best-capacity users while the equal-rate allocation
    stays above the threshold.  Own-cache hits cost no spectrum and are
    credited the playback-rate cap.
    """
    n = placement.n
    throughput = np.zeros(n)
    tier = np.full(n, Tier.OUTAGE, dtype=np.int8)

    links = find_potential_links(grid, placement, caches, requests)
    d2d_links = [l for l in links if l.tx != SELF_CACHE]
    for l in links:
        if l.tx == SELF_CACHE:
            tier[l.rx] = Tier.SELF_CACHE
            throughput[l.rx] = self_cache_rate_bps

    # candidate capacities decide the band cascade per user
    remaining = d2d_links
    assigned: dict[Band, list[PotentialLink]] = {}
    for band in d2d_bands:
        cfg = sampler.bands[band]
        if not remaining:
            assigned[band] = []
            continue
        tx = np.array([l.tx for l in remaining])
        rx = np.array([l.rx for l in remaining])
        mw = sampler.rx_power_mw(tx, rx, band)
        noise_mw = float(dbm_to_mw(noise_power_dbm(cfg.bandwidth_hz)))
        cand = cfg.bandwidth_hz * np.log2(1.0 + mw / noise_mw)
        take, keep = [], []
        for l, c in zip(remaining, cand):
            l.capacity_bps[band.value] = float(c)
            (take if c >= threshold_bps else keep).append(l)
        assigned[band] = take
        remaining = keep

    tier_of_band = {Band.MMWAVE38: Tier.MMWAVE, Band.ISM2_45: Tier.MICROWAVE,
                    Band.CELLULAR2_1: Tier.MICROWAVE}
    for band in d2d_bands:
        batch = assigned.get(band, [])
        if not batch:
            continue
        cfg = sampler.bands[band]
        rates = schedule_and_rate(grid, batch, lambda t, r, b=band: sampler.rx_power_mw(t, r, b),
                                  cfg, rounds_factor=rounds_factor)
        for l, rate in zip(batch, rates):
            tier[l.rx] = tier_of_band[band]
            throughput[l.rx] = rate

    # leftovers (no holder, or no viable band) try the base station
    bs_users = np.array(sorted({l.rx for l in remaining}
                               | set(np.nonzero(tier == Tier.OUTAGE)[0].tolist())),
                        dtype=np.int64)
    if bs_band is not None and bs_users.size:
        cfg = sampler.bands[bs_band]
        mw = sampler.bs_rx_power_mw(bs_band)[bs_users]
        noise_mw = float(dbm_to_mw(noise_power_dbm(cfg.bandwidth_hz)))
        cap = (cfg.bandwidth_hz / cfg.reuse_k) * np.log2(1.0 + mw / noise_mw)
        admitted, common_rate = equal_rate_admission(cap, threshold_bps, bs_budget)
        for i in admitted:
            u = bs_users[int(i)]
            tier[u] = Tier.BASE_STATION
            throughput[u] = common_rate
    return ScheduleOutcome(throughput_bps=throughput, tier=tier)


def equal_rate_admission(capacities_bps: np.ndarray, threshold_bps: float,
                         budget: int | None = None) -> tuple[np.ndarray, float]:
    """Admit users by best link rate while the shared equal rate holds the threshold.

    Under the max-min resource split every admitted user gets the common rate
    1 / sum(1/C_u), which is decreasing in the admitted set, so the greedy
    prefix of the capacity-sorted users is optimal.
    """
    cap = np.asarray(capacities_bps, dtype=float)
    order = np.argsort(-cap, kind="stable")
    order = order[cap[order] > 0]
    if order.size == 0:
        return np.array([], dtype=np.int64), 0.0
    rates = 1.0 / np.cumsum(1.0 / cap[order])
    k = int(np.sum(rates >= threshold_bps))
    if budget is not None:
        k = min(k, int(budget))
    if k == 0:
        return np.array([], dtype=np.int64), 0.0
    return order[:k], float(rates[k - 1])
