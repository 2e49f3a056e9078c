import math

import numpy as np
import pytest

from d2dcache.channel import Band, DEFAULT_BANDS, PathlossTable, dbm_to_mw, noise_power_dbm
from d2dcache.content import CacheAssignment
from d2dcache.d2d import (ChannelSampler, PotentialLink, ScheduleOutcome, SELF_CACHE,
                          Tier, build_clusters, equal_rate_admission,
                          find_potential_links, multiband_delivery, reuse_parameter,
                          schedule_and_rate, throughput_outage_point)
from d2dcache.geometry import NodePlacement, PlacementMode, build_layout, place_nodes


def make_placement(positions):
    pos = np.asarray(positions, dtype=float)
    n = pos.shape[0]
    sentinel = np.full(n, -1, dtype=np.int64)
    return NodePlacement(positions=pos, indoor=np.zeros(n, dtype=bool),
                         building_index=sentinel, office_col=sentinel,
                         office_row=sentinel, mode=PlacementMode.UNIFORM, seed=0)


# ---------------------------------------------------------------------------
# cluster grid
# ---------------------------------------------------------------------------

def test_reuse_parameter_examples():
    assert reuse_parameter(0.0) == 9
    assert reuse_parameter(1.0) == 16


def test_build_clusters_600_over_100():
    grid = build_clusters(600.0, 100.0, 4)
    assert grid.n_clusters == 36
    colors = grid.color(np.arange(36))
    assert set(colors.tolist()) == {0, 1, 2, 3}
    # periodic 2x2 coloring
    assert colors[0] != colors[1]
    assert colors[0] == colors[2]


def test_build_clusters_rejects_non_square_k():
    with pytest.raises(ValueError):
        build_clusters(600.0, 100.0, 3)


def test_every_node_in_exactly_one_cluster():
    grid = build_clusters(600.0, 100.0, 4)
    pts = np.random.default_rng(1).uniform(0, 600, size=(500, 2))
    idx = grid.cluster_index(pts)
    assert ((idx >= 0) & (idx < 36)).all()


# ---------------------------------------------------------------------------
# potential links
# ---------------------------------------------------------------------------

def test_potential_links_fixture():
    # one 40 m cluster; u0 self-hit, u1 served by nearest holder, u3 outage
    grid = build_clusters(40.0, 40.0, 1)
    placement = make_placement([[5, 5], [10, 5], [12, 5], [30, 30]])
    caches = CacheAssignment(files=np.array([[1], [9], [2], [9]]), seed=0)
    requests = np.array([1, 2, 9, 7])
    links = find_potential_links(grid, placement, caches, requests)
    by_rx = {l.rx: l for l in links}
    assert by_rx[0].tx == SELF_CACHE
    assert by_rx[1].tx == 2          # holder of file 2
    assert by_rx[2].tx in (1, 3)     # holders of file 9
    assert 3 not in by_rx or by_rx[3].tx != SELF_CACHE
    assert len([l for l in links if l.rx == 3]) == 0  # nobody holds file 7


def test_potential_links_tie_breaks_to_lowest_index():
    grid = build_clusters(40.0, 40.0, 1)
    # holders 1 and 2 exactly equidistant from requester 0
    placement = make_placement([[10, 10], [10, 14], [10, 6], [20, 20]])
    caches = CacheAssignment(files=np.array([[5], [3], [3], [5]]), seed=0)
    requests = np.array([3, 5, 5, 3])
    links = find_potential_links(grid, placement, caches, requests)
    by_rx = {l.rx: l for l in links}
    assert by_rx[0].tx == 1


def test_potential_links_respect_cluster_boundary():
    grid = build_clusters(80.0, 40.0, 4)
    placement = make_placement([[5, 5], [45, 5]])  # different clusters
    caches = CacheAssignment(files=np.array([[9], [1]]), seed=0)
    requests = np.array([1, 9])
    links = find_potential_links(grid, placement, caches, requests)
    assert links == []


# ---------------------------------------------------------------------------
# scheduling
# ---------------------------------------------------------------------------

ISM = DEFAULT_BANDS[Band.ISM2_45]
NOISE_MW = float(dbm_to_mw(noise_power_dbm(ISM.bandwidth_hz)))


def fixed_power(table):
    def rx_power(tx, rx):
        return np.array([table[(int(t), int(r))] for t, r in zip(np.ravel(tx), np.ravel(rx))])
    return rx_power


def test_single_link_k1_gets_full_capacity():
    grid = build_clusters(40.0, 40.0, 1)
    links = [PotentialLink(rx=0, tx=1, file=1, cluster=0)]
    sig = 1e-7
    rates = schedule_and_rate(grid, links, fixed_power({(1, 0): sig}), ISM)
    expected = ISM.bandwidth_hz * math.log2(1 + sig / NOISE_MW)
    assert rates[0] == pytest.approx(expected, rel=1e-12)


def test_two_links_round_robin_half_capacity():
    grid = build_clusters(40.0, 40.0, 1)
    links = [PotentialLink(rx=0, tx=1, file=1, cluster=0),
             PotentialLink(rx=2, tx=3, file=2, cluster=0)]
    sig = 1e-7
    rates = schedule_and_rate(grid, links, fixed_power({(1, 0): sig, (3, 2): sig}), ISM,
                              interference=False)
    expected = ISM.bandwidth_hz * math.log2(1 + sig / NOISE_MW) / 2
    assert np.allclose(rates, expected, rtol=1e-12)


def test_one_link_per_cluster_no_interference_is_capacity_over_k():
    # 4 links in 4 differently-colored clusters: rate = capacity / K exactly,
    # which also proves only one color is active per round
    grid = build_clusters(80.0, 40.0, 4)
    colors = grid.color(np.arange(4))
    assert set(colors.tolist()) == {0, 1, 2, 3}
    links = [PotentialLink(rx=i, tx=10 + i, file=1, cluster=i) for i in range(4)]
    sig = 2e-8
    table = {(10 + i, i): sig for i in range(4)}
    # different colors never coincide, so interference lookups return 0 power
    for i in range(4):
        for j in range(4):
            if i != j:
                table[(10 + i, j)] = 0.0
    rates = schedule_and_rate(grid, links, fixed_power(table), ISM)
    expected = ISM.bandwidth_hz * math.log2(1 + sig / NOISE_MW) / 4
    assert np.allclose(rates, expected, rtol=1e-12)


def test_interference_matches_hand_computed_sinr():
    # two co-colored clusters (K=1), one link each, all cross powers pinned
    grid = build_clusters(200.0, 100.0, 1)
    links = [PotentialLink(rx=0, tx=1, file=1, cluster=0),
             PotentialLink(rx=2, tx=3, file=2, cluster=1)]
    s0, s1 = 4e-8, 9e-8
    i10, i30 = 0.0, 5e-10   # tx 3 interferes rx 0
    i12 = 7e-10             # tx 1 interferes rx 2
    table = {(1, 0): s0, (3, 2): s1, (3, 0): i30, (1, 2): i12}
    rates = schedule_and_rate(grid, links, fixed_power(table), ISM)
    exp0 = ISM.bandwidth_hz * math.log2(1 + s0 / (NOISE_MW + i30))
    exp1 = ISM.bandwidth_hz * math.log2(1 + s1 / (NOISE_MW + i12))
    assert rates[0] == pytest.approx(exp0, rel=1e-9)
    assert rates[1] == pytest.approx(exp1, rel=1e-9)


def test_mmwave_scheduling_ignores_interference():
    mm = DEFAULT_BANDS[Band.MMWAVE38]
    grid = build_clusters(200.0, 100.0, 1)
    links = [PotentialLink(rx=0, tx=1, file=1, cluster=0),
             PotentialLink(rx=2, tx=3, file=2, cluster=1)]
    table = {(1, 0): 1e-6, (3, 2): 1e-6, (3, 0): 1e-3, (1, 2): 1e-3}
    rates = schedule_and_rate(grid, links, fixed_power(table), mm)
    noise = float(dbm_to_mw(noise_power_dbm(mm.bandwidth_hz)))
    expected = mm.bandwidth_hz * math.log2(1 + 1e-6 / noise)
    assert np.allclose(rates, expected, rtol=1e-12)


# ---------------------------------------------------------------------------
# admission and outcome accounting
# ---------------------------------------------------------------------------

def test_equal_rate_admission_waterline():
    caps = np.array([4e5, 4e5, 4e5])
    admitted, rate = equal_rate_admission(caps, 1e5)
    assert admitted.tolist() == [0, 1, 2]
    assert rate == pytest.approx(4e5 / 3)
    admitted, rate = equal_rate_admission(caps, 1.9e5)
    assert admitted.tolist() == [0, 1]
    assert rate == pytest.approx(2e5)
    admitted, rate = equal_rate_admission(caps, 1e5, budget=1)
    assert admitted.tolist() == [0]
    admitted, rate = equal_rate_admission(np.array([5e4]), 1e5)
    assert admitted.size == 0 and rate == 0.0


def test_throughput_outage_point_examples():
    out = ScheduleOutcome(throughput_bps=np.full(10, 5e5),
                          tier=np.full(10, Tier.MICROWAVE, dtype=np.int8))
    pt = throughput_outage_point(out, 1e5)
    assert (pt.t_min_bps, pt.p_o) == (5e5, 0.0)

    thr = np.array([5e5] * 5 + [0.0] * 5)
    tier = np.array([Tier.MICROWAVE] * 5 + [Tier.OUTAGE] * 5, dtype=np.int8)
    pt = throughput_outage_point(ScheduleOutcome(thr, tier), 1e5)
    assert (pt.t_min_bps, pt.p_o) == (5e5, 0.5)

    thr = np.array([5e5, 5e4, 2e5, 0.0])
    tier = np.array([Tier.MICROWAVE, Tier.MICROWAVE, Tier.BASE_STATION, Tier.OUTAGE],
                    dtype=np.int8)
    pt = throughput_outage_point(ScheduleOutcome(thr, tier), 1e5)
    assert pt.t_min_bps == pytest.approx(3.5e5)  # mean of the two served users
    assert pt.p_o == pytest.approx(0.5)          # one below threshold + one unserved


class FakeSampler:
    """Duck-typed ChannelSampler with pinned received powers."""

    def __init__(self, bands, d2d_table, bs_powers):
        self.bands = bands
        self.d2d_table = d2d_table
        self.bs_powers = bs_powers

    def rx_power_mw(self, tx, rx, band):
        return np.array([self.d2d_table.get((int(t), int(r), band), 0.0)
                         for t, r in zip(np.ravel(tx), np.ravel(rx))])

    def bs_rx_power_mw(self, band):
        return self.bs_powers


def test_multiband_delivery_cascade_and_conservation():
    grid = build_clusters(40.0, 40.0, 1)
    placement = make_placement([[5, 5], [10, 5], [12, 5], [30, 30]])
    caches = CacheAssignment(files=np.array([[1], [9], [2], [9]]), seed=0)
    requests = np.array([1, 2, 9, 7])
    bands = {b: DEFAULT_BANDS[b] for b in Band}
    strong = 1e-6
    sampler = FakeSampler(bands,
                          {(2, 1, Band.MMWAVE38): strong,   # u1 gets mm-wave
                           (1, 2, Band.ISM2_45): strong,    # u2 falls to microwave
                           (3, 2, Band.ISM2_45): strong},
                          bs_powers=np.array([0.0, 0.0, 0.0, 1e-6]))
    out = multiband_delivery(grid, placement, caches, requests, sampler,
                             [Band.MMWAVE38, Band.ISM2_45], Band.CELLULAR2_1)
    assert out.tier[0] == Tier.SELF_CACHE
    assert out.throughput_bps[0] == 2e6
    assert out.tier[1] == Tier.MMWAVE
    assert out.tier[2] == Tier.MICROWAVE
    assert out.tier[3] == Tier.BASE_STATION
    # conservation: every user has exactly one tier, and counts add to n
    assert sum(out.tier_counts().values()) == 4


def test_multiband_delivery_outage_without_bs():
    grid = build_clusters(40.0, 40.0, 1)
    placement = make_placement([[5, 5], [30, 30]])
    caches = CacheAssignment(files=np.array([[1], [1]]), seed=0)
    requests = np.array([7, 7])
    bands = {Band.ISM2_45: DEFAULT_BANDS[Band.ISM2_45]}
    sampler = FakeSampler(bands, {}, bs_powers=np.zeros(2))
    out = multiband_delivery(grid, placement, caches, requests, sampler,
                             [Band.ISM2_45], None)
    assert (out.tier == Tier.OUTAGE).all()
    assert (out.throughput_bps == 0).all()
    pt = throughput_outage_point(out, 1e5)
    assert pt.p_o == 1.0 and pt.t_min_bps == 0.0


# ---------------------------------------------------------------------------
# channel sampler determinism
# ---------------------------------------------------------------------------

def test_sampler_deterministic_and_symmetric():
    layout = build_layout("office", 600.0)
    rng = np.random.default_rng(5)
    placement = make_placement(rng.uniform(260, 340, size=(10, 2)))  # street area
    table = PathlossTable.load_default()
    bands = {Band.ISM2_45: DEFAULT_BANDS[Band.ISM2_45]}
    tx = np.array([0, 1, 2, 3, 4])
    rx = np.array([5, 6, 7, 8, 9])
    s1 = ChannelSampler(layout, placement, table, bands, 99, 1)
    s2 = ChannelSampler(layout, placement, table, bands, 99, 1)
    a = s1.rx_power_mw(tx, rx, Band.ISM2_45)
    assert (a > 0).all()
    # query order and tx/rx direction must not matter
    b = s2.rx_power_mw(rx[::-1], tx[::-1], Band.ISM2_45)[::-1]
    assert np.array_equal(a, b)
    s3 = ChannelSampler(layout, placement, table, bands, 99, 2)
    c = s3.rx_power_mw(tx, rx, Band.ISM2_45)
    assert not np.array_equal(a, c)


def test_file_miss_rate_decreases_with_cluster_side():
    from d2dcache.content import optimal_cache_distribution, place_caches, sample_requests, zipf_pmf
    from d2dcache.rng import substream
    layout = build_layout("office", 600.0)
    demand = zipf_pmf(50, 0.4)
    miss_rates = []
    for side in (60.0, 100.0, 200.0):
        grid = build_clusters(600.0, side, 4)
        misses = []
        for r in range(8):
            placement = place_nodes(layout, 400, "uniform", seed=1000 + r)
            g_c = max(2, round(400 * (side / 600.0) ** 2))
            dist = optimal_cache_distribution(demand, 4, g_c)
            caches = place_caches(dist, 400, 4, substream(2000, r))
            requests = sample_requests(demand, 400, substream(3000, r))
            links = find_potential_links(grid, placement, caches, requests)
            misses.append(1.0 - len(links) / 400)
        miss_rates.append(np.mean(misses))
    assert miss_rates[0] >= miss_rates[1] - 0.02
    assert miss_rates[1] >= miss_rates[2] - 0.02
