import math

import numpy as np
import pytest
from scipy.special import erfcinv

from d2dcache.bs_schemes import (BsRealization, bs_link_law, bs_realization,
                                 coded_multicast_ntx, coded_multicast_tradeoff,
                                 coded_realization, harmonic_broadcast_set,
                                 harmonic_plan, harmonic_plan_from_blocks,
                                 harmonic_tradeoff, outage_cdf,
                                 required_rate_quantile, unicast_realization,
                                 unicast_tradeoff)
from d2dcache.channel import Band, DEFAULT_BANDS, PathlossTable
from d2dcache.content import zipf_pmf
from d2dcache.d2d import ChannelSampler
from d2dcache.geometry import NodePlacement, PlacementMode, build_layout
from d2dcache.rng import substream

TABLE = PathlossTable.load_default()
CELL = DEFAULT_BANDS[Band.CELLULAR2_1]


def make_real(mean, sigma, weight, capacity, distance):
    return BsRealization(mean_snr_db=np.asarray(mean, dtype=float),
                         sigma_db=np.asarray(sigma, dtype=float),
                         weight=np.asarray(weight, dtype=float),
                         capacity=np.asarray(capacity, dtype=float),
                         distance=np.asarray(distance, dtype=float),
                         worst=int(np.argmax(distance)))


def uniform_law(n, mean_db=10.0, sigma_db=6.0):
    mean = np.column_stack([np.full(n, -np.inf), np.full(n, mean_db)])
    sigma = np.full((n, 2), sigma_db)
    weight = np.column_stack([np.zeros(n), np.ones(n)])
    return mean, sigma, weight


# ---------------------------------------------------------------------------
# coded multicast transmissions
# ---------------------------------------------------------------------------

def test_ntx_worked_examples():
    assert coded_multicast_ntx(2, 3, 1.5) == 0.5
    assert coded_multicast_ntx(4, 2, 1) == pytest.approx(2 / 3, rel=1e-15)
    # fractional t interpolates the neighboring integer points
    assert coded_multicast_ntx(3, 3, 1.5) == pytest.approx(2 / 3, rel=1e-12)
    assert coded_multicast_ntx(10, 5, 0) == 10.0


def test_ntx_rejects_cache_at_library_size():
    with pytest.raises(ValueError):
        coded_multicast_ntx(4, 3, 3)
    with pytest.raises(ValueError):
        coded_multicast_ntx(0, 3, 1)


def test_ntx_monotone_and_envelope_below_integer_points():
    # non-increasing in M at fixed n, m
    vals = [coded_multicast_ntx(60, 30, M) for M in np.linspace(0, 29, 40)]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
    # non-decreasing in n at fixed M/m
    vals = [coded_multicast_ntx(n, n // 2, n // 10) for n in (20, 40, 80, 160)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    # envelope never exceeds the chord endpoints' own values
    n, m = 7, 5
    for M in np.linspace(0.1, 4.9, 23):
        t = M * n / m
        lo, hi = math.floor(t) * m / n, math.ceil(t) * m / n
        ends = [coded_multicast_ntx(n, m, lo), coded_multicast_ntx(n, m, min(hi, m - 1e-9))]
        assert coded_multicast_ntx(n, m, M) <= max(ends) + 1e-9


# ---------------------------------------------------------------------------
# quantile inversion
# ---------------------------------------------------------------------------

def test_quantile_matches_closed_form_lognormal():
    # single NLOS state: closed-form C = log2(1 + 10^((S - sigma*Q^-1(p))/10))
    mean, sigma, weight = uniform_law(5, mean_db=12.0, sigma_db=7.0)
    for p_o in (0.02, 0.1, 0.3):
        c = required_rate_quantile(mean, sigma, weight, p_o)
        q_inv = math.sqrt(2.0) * erfcinv(2.0 * p_o)
        snr_db = 12.0 - 7.0 * q_inv
        expected = math.log2(1.0 + 10.0 ** (snr_db / 10.0))
        assert np.allclose(c, expected, rtol=1e-6)


def test_quantile_round_trips_through_cdf():
    rng = np.random.default_rng(3)
    n = 50
    mean = np.column_stack([rng.uniform(0, 25, n), rng.uniform(-10, 15, n)])
    sigma = np.column_stack([np.full(n, 5.0), np.full(n, 9.0)])
    p_los = rng.uniform(0, 1, n)
    weight = np.column_stack([p_los, 1 - p_los])
    for p_o in (0.05, 0.25):
        c = required_rate_quantile(mean, sigma, weight, p_o)
        back = np.array([outage_cdf(mean[i:i + 1], sigma[i:i + 1], weight[i:i + 1],
                                    float(c[i]))[0] for i in range(n)])
        assert np.allclose(back, p_o, atol=1e-7)


def test_quantile_rejects_degenerate_targets():
    mean, sigma, weight = uniform_law(2)
    with pytest.raises(ValueError):
        required_rate_quantile(mean, sigma, weight, 0.0)


# ---------------------------------------------------------------------------
# unicast
# ---------------------------------------------------------------------------

def test_unicast_identical_users_get_c_over_served_count():
    n = 5
    mean, sigma, weight = uniform_law(n)
    c = float(required_rate_quantile(mean, sigma, weight, 0.3)[0])
    # three users decode, two do not
    capacity = np.array([c + 1, c + 1, c + 1, c - 1, c - 1])
    real = make_real(mean, sigma, weight, capacity, np.arange(n))
    [(t, po)] = unicast_realization(real, [0.3], b_eff_hz=1.0)
    assert t == pytest.approx(c / 3, rel=1e-9)
    assert po == pytest.approx(2 / 5)


def test_unicast_resource_split_structure():
    # two served users with C2 = 2*C1: the common rate is the harmonic share,
    # so rho_1 = 2 * rho_2
    c = np.array([1.0, 2.0])
    common = 1.0 / np.sum(1.0 / c)
    rho = common / c
    assert rho[0] == pytest.approx(2 * rho[1])
    assert common == pytest.approx(2.0 / 3.0)


def test_unicast_scale_invariance():
    # scaling all capacities by lambda scales the served rate by lambda
    n = 8
    mean, sigma, weight = uniform_law(n, mean_db=8.0, sigma_db=4.0)
    c = required_rate_quantile(mean, sigma, weight, 0.1)
    served = np.ones(n, dtype=bool)
    t1 = 1.0 / np.sum(1.0 / c[served])
    t2 = 1.0 / np.sum(1.0 / (3.0 * c[served]))
    assert t2 == pytest.approx(3.0 * t1, rel=1e-12)


def test_unicast_empty_admitted_set_is_total_outage():
    mean, sigma, weight = uniform_law(3)
    c = required_rate_quantile(mean, sigma, weight, 0.2)
    real = make_real(mean, sigma, weight, c * 0.5, np.arange(3))
    [(t, po)] = unicast_realization(real, [0.2], b_eff_hz=1.0)
    assert (t, po) == (0.0, 1.0)


def test_unicast_throughput_halves_when_n_doubles():
    layout = build_layout("office", 600.0)
    pts = {}
    for n in (400, 800):
        pts[n] = unicast_tradeoff(layout, n, TABLE, CELL, M=20, m=300,
                                  p_o_grid=[0.05], realizations=12, master_seed=5)[0]
    ratio = pts[800].t_min_bps / pts[400].t_min_bps
    assert 0.4 < ratio < 0.6


# ---------------------------------------------------------------------------
# coded multicast tradeoff
# ---------------------------------------------------------------------------

def test_coded_zero_shadowing_all_decode():
    n = 6
    mean = np.column_stack([np.full(n, -np.inf), np.full(n, 20.0)])
    sigma = np.zeros((n, 2))
    weight = np.column_stack([np.zeros(n), np.ones(n)])
    cap = np.full(n, math.log2(1 + 100.0))  # 20 dB SNR for everyone
    real = make_real(mean, sigma, weight, cap, np.arange(n))
    fail, wc = coded_realization(real, np.array([1.0, 2.0]))
    assert (fail == 0).all() and (wc == 0).all()


def test_coded_outage_monotone_in_common_rate():
    rng = np.random.default_rng(8)
    n = 200
    mean, sigma, weight = uniform_law(n, 10.0, 8.0)
    cap = np.log2(1 + 10 ** ((10.0 + 8.0 * rng.standard_normal(n)) / 10.0))
    real = make_real(mean, sigma, weight, cap, np.arange(n))
    fail, _ = coded_realization(real, np.array([0.5, 1.0, 2.0, 4.0]))
    assert (np.diff(fail) >= 0).all()


def test_sampler_draws_match_analytic_tail_one_user():
    # Monte Carlo over realizations of a single fixed outdoor user vs the
    # closed-form mixture CDF
    layout = build_layout("office", 600.0)
    pos = np.array([[300.0, 360.0]])  # on the street, 60 m north of the BS
    sentinel = np.full(1, -1, dtype=np.int64)
    placement = NodePlacement(positions=pos, indoor=np.zeros(1, dtype=bool),
                              building_index=sentinel, office_col=sentinel,
                              office_row=sentinel, mode=PlacementMode.UNIFORM, seed=0)
    mean, sigma, weight = bs_link_law(layout, placement, TABLE, CELL)
    c0 = 2.0
    analytic = float(outage_cdf(mean, sigma, weight, c0)[0])
    trials = 4000
    fails = 0
    for r in range(trials):
        sampler = ChannelSampler(layout, placement, TABLE, {Band.CELLULAR2_1: CELL},
                                 77, r, floor_free_space=False)
        real = bs_realization(layout, placement, TABLE, CELL, sampler)
        fails += real.capacity[0] < c0
    mc = fails / trials
    sd = math.sqrt(analytic * (1 - analytic) / trials)
    assert abs(mc - analytic) <= 3.5 * sd


def test_coded_tradeoff_end_to_end_shapes():
    layout = build_layout("hotspot", 600.0)
    pts = coded_multicast_tradeoff(layout, 100, TABLE, CELL, m=300, M=20,
                                   c_r0_grid=[0.5, 1.0, 2.0], realizations=4,
                                   master_seed=9)
    assert len(pts) == 3
    assert all(0 <= p.p_o <= 1 for p in pts)
    assert all(p.t_min_bps >= 0 for p in pts)
    assert pts[0].p_o <= pts[1].p_o <= pts[2].p_o


def test_worst_case_dominance_in_fixed_state():
    # pure NLOS C2 beyond the breakpoint: outage is non-decreasing in distance
    layout = build_layout("office", 600.0)
    n = 4
    pos = np.column_stack([np.full(n, 300.0), 300.0 + np.array([340., 360., 380., 400.]) * 0.7])
    d = np.linalg.norm(pos - 300.0, axis=1)
    assert (np.diff(d) > 0).all()
    sentinel = np.full(n, -1, dtype=np.int64)
    placement = NodePlacement(positions=pos, indoor=np.zeros(n, dtype=bool),
                              building_index=sentinel, office_col=sentinel,
                              office_row=sentinel, mode=PlacementMode.UNIFORM, seed=0)
    mean, sigma, weight = bs_link_law(layout, placement, TABLE, CELL)
    weight = np.column_stack([np.zeros(n), np.ones(n)])  # force NLOS state
    for rate in (0.5, 1.0, 2.0, 4.0):
        out = outage_cdf(mean, sigma, weight, rate)
        assert (np.diff(out) >= -1e-12).all()


# ---------------------------------------------------------------------------
# harmonic broadcasting
# ---------------------------------------------------------------------------

def test_harmonic_plan_block_structure():
    assert harmonic_plan(100.0, 100.0).h_factor == 1.0
    plan = harmonic_plan(100.0, 25.0)
    assert plan.blocks == 4
    assert plan.h_factor == pytest.approx(25 / 12, rel=1e-12)
    plan = harmonic_plan_from_blocks(2.7e9, 540)
    assert plan.blocks == 540
    assert plan.delay_chunks == pytest.approx(5e6)
    assert plan.h_factor == pytest.approx(6.8697, abs=1e-4)
    with pytest.raises(ValueError):
        harmonic_plan(100.0, 101.0)


def test_harmonic_broadcast_set_monotonicity():
    plan = harmonic_plan_from_blocks(2.7e9, 540)
    budgets = [1e7, 2e7, 4e7, 8e7]
    sets = [harmonic_broadcast_set(plan, b, 2e6, 300) for b in budgets]
    assert all(b >= a for a, b in zip(sets, sets[1:]))
    rates = [1e5, 5e5, 2e6]
    sets = [harmonic_broadcast_set(plan, 4e7, r, 300) for r in rates]
    assert all(b <= a for a, b in zip(sets, sets[1:]))
    assert harmonic_broadcast_set(plan, 1e12, 1e5, 300) == 300  # capped at m


def test_harmonic_full_set_has_no_file_outage():
    layout = build_layout("hotspot", 600.0)
    demand = zipf_pmf(3, 0.4)
    plan = harmonic_plan(100.0, 100.0)  # factor 1
    pts = harmonic_tradeoff(layout, 50, TABLE, CELL, demand, plan, rate_bps=1e5,
                            c_r0_grid=[1.0], realizations=4, master_seed=3)
    # budget 1.0 * 6.67 MHz / (1e5 * 1) covers far more than 3 files
    coded_pts = coded_multicast_tradeoff(layout, 50, TABLE, CELL, m=3, M=1,
                                         c_r0_grid=[1.0], realizations=4,
                                         master_seed=3)
    assert pts[0].p_o == pytest.approx(coded_pts[0].p_o)  # channel term only


def test_harmonic_longer_video_weakly_lowers_throughput():
    layout = build_layout("hotspot", 600.0)
    demand = zipf_pmf(300, 0.4)
    t = []
    for length in (2.7e9, 8.1e9, 27e9):
        plan = harmonic_plan(length, 5e6)
        pts = harmonic_tradeoff(layout, 50, TABLE, CELL, demand, plan, rate_bps=1e5,
                                c_r0_grid=[4.0], realizations=3, master_seed=4)
        t.append(pts[0].t_min_bps)
    assert t[0] >= t[1] >= t[2]


def test_harmonic_outage_formula_against_monte_carlo():
    # outage = 1 - file_survival * channel_survival with independent events
    demand = zipf_pmf(20, 0.4)
    m_prime = 6
    surv_file = float(np.cumsum(demand.pmf)[m_prime - 1])
    p_fail_ch = 0.23
    analytic = 1.0 - surv_file * (1.0 - p_fail_ch)
    rng = substream(55, 1)
    trials = 400_000
    req = rng.choice(20, size=trials, p=demand.pmf) + 1
    ch_fail = rng.random(trials) < p_fail_ch
    mc = np.mean((req > m_prime) | ch_fail)
    sd = math.sqrt(analytic * (1 - analytic) / trials)
    assert abs(mc - analytic) <= 3.5 * sd
