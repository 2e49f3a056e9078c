"""Base-station-only delivery baselines: unicast, coded multicast, harmonic.

All three serve every request from the cellular downlink and are evaluated
semi-analytically over placement/shadowing realizations:

* conventional unicast -- each user gets the downlink rate C_u that its
  channel supports at the target outage probability, and the max-min resource
  split gives every served user the common rate 1/sum(1/C_u);
* coded multicast -- caches hold file fractions arranged so one common coded
  stream of rate C_r0 serves any request pattern at a cost of N_TX equivalent
  file transmissions; the common rate is bottlenecked by the worst-case user;
* harmonic broadcast -- the top m' files cycle on air in blocks of length
  tau/i, costing the harmonic factor H_P per file; requests outside the
  broadcast set are outages.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from . import channel as ch
from .channel import Band, BandConfig, dbm_to_mw, noise_power_dbm
from .d2d import ChannelSampler, SchemePoint
from .geometry import CellLayout, NodePlacement, classify_bs_arrays, place_nodes
from .rng import substream

_LOS, _NLOS = 0, 2  # state codes shared with the channel kernels


# ---------------------------------------------------------------------------
# Downlink channel law and realizations
# ---------------------------------------------------------------------------

@dataclass
class BsRealization:
    """Per-user downlink law and one frozen channel draw for a realization."""

    mean_snr_db: np.ndarray   # (n, 2) per-state mean SNR, LOS then NLOS
    sigma_db: np.ndarray      # (n, 2) total shadowing std per state
    weight: np.ndarray        # (n, 2) state probabilities (LOS weight 0 indoors)
    capacity: np.ndarray      # (n,) realized spectral efficiency, bit/s/Hz
    distance: np.ndarray      # (n,) BS-user distance
    worst: int                # index of the max-distance user


def bs_link_law(layout: CellLayout, placement: NodePlacement, table: ch.PathlossTable,
                band_cfg: BandConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mixture law of each user's downlink SNR: (mean_snr_db, sigma_db, weight).

    Outdoor users mix LOS/NLOS macro states; indoor users are outdoor-to-indoor
    (zero LOS probability).  Environment and body shadowing are independent
    normals in dB, so each state's total std is the root-sum-square.
    """
    n = placement.n
    d, scen, d_in = classify_bs_arrays(layout, placement)
    p_los = ch.los_probability_arr(scen, layout.environment, d)
    mean = np.zeros((n, 2))
    sigma = np.zeros((n, 2))
    noise = noise_power_dbm(band_cfg.bandwidth_hz)
    for col, state in ((0, _LOS), (1, _NLOS)):
        states = np.full(n, state, dtype=np.int8)
        pl = ch.pathloss_mean_db(table, band_cfg, layout.environment, scen, states, d,
                                 d_in=d_in, bs_height=layout.bs_height,
                                 ms_height=layout.ms_height)
        env_sig = ch.shadow_sigma_db(table, band_cfg, layout.environment, scen, states, d,
                                     bs_height=layout.bs_height, ms_height=layout.ms_height)
        body_sig = ch.body_sigma_db(band_cfg, states)
        mean[:, col] = band_cfg.eirp_gain_dbm - pl - noise
        sigma[:, col] = np.hypot(env_sig, body_sig)
    weight = np.column_stack([p_los, 1.0 - p_los])
    mean[weight[:, 0] == 0.0, 0] = -np.inf
    return mean, sigma, weight


def bs_realization(layout: CellLayout, placement: NodePlacement, table: ch.PathlossTable,
                   band_cfg: BandConfig, sampler: ChannelSampler) -> BsRealization:
    """Bundle the law with the sampler's frozen downlink draw."""
    mean, sigma, weight = bs_link_law(layout, placement, table, band_cfg)
    mw = sampler.bs_rx_power_mw(band_cfg.band)
    noise_mw = float(dbm_to_mw(noise_power_dbm(band_cfg.bandwidth_hz)))
    capacity = np.log2(1.0 + mw / noise_mw)
    d = np.linalg.norm(placement.positions - np.asarray(layout.bs_position), axis=1)
    return BsRealization(mean_snr_db=mean, sigma_db=sigma, weight=weight,
                         capacity=capacity, distance=d, worst=int(np.argmax(d)))


def _gauss_q(x: np.ndarray) -> np.ndarray:
    """Gaussian tail probability Q(x)."""
    return 0.5 * erfc(x / math.sqrt(2.0))


def outage_cdf(mean_snr_db: np.ndarray, sigma_db: np.ndarray, weight: np.ndarray,
               rate: float) -> np.ndarray:
    """P(capacity <= rate) per user, marginalized over the LOS-state mixture."""
    if rate <= 0:
        return np.zeros(mean_snr_db.shape[0])
    g = 10.0 * math.log10(2.0 ** rate - 1.0)
    arg = mean_snr_db - g
    p = np.zeros(mean_snr_db.shape)
    pos = sigma_db > 0
    p[pos] = _gauss_q(arg[pos] / sigma_db[pos])
    p[~pos] = (arg[~pos] <= 0).astype(float)
    return np.sum(weight * p, axis=1)


def required_rate_quantile(mean_snr_db: np.ndarray, sigma_db: np.ndarray,
                           weight: np.ndarray, p_o: float, *, tol: float = 1e-9,
                           hi: float = 40.0) -> np.ndarray:
    """Per-user rate whose outage probability equals the target (bisection).

    The LOS-state mixture has no closed-form quantile, so the monotone CDF is
    inverted numerically to ``tol`` in probability.
    """
    if not 0.0 < p_o < 1.0:
        raise ValueError("target outage must lie in (0, 1)")
    n = mean_snr_db.shape[0]
    lo = np.full(n, 1e-12)
    hi_arr = np.full(n, hi)
    for _ in range(80):
        mid = 0.5 * (lo + hi_arr)
        # vectorized CDF at per-user rates
        g = 10.0 * np.log10(np.maximum(2.0 ** mid - 1.0, 1e-300))
        arg = mean_snr_db - g[:, None]
        p = np.zeros(mean_snr_db.shape)
        pos = sigma_db > 0
        p[pos] = _gauss_q(arg[pos] / sigma_db[pos])
        p[~pos] = (arg[~pos] <= 0).astype(float)
        f = np.sum(weight * p, axis=1)
        too_high = f > p_o
        hi_arr = np.where(too_high, mid, hi_arr)
        lo = np.where(too_high, lo, mid)
        if np.all(np.abs(f - p_o) <= tol):
            break
    return 0.5 * (lo + hi_arr)


# ---------------------------------------------------------------------------
# Conventional unicast (per-user rate + max-min resource split)
# ---------------------------------------------------------------------------

def unicast_realization(real: BsRealization, p_o_grid: list[float], b_eff_hz: float,
                        caching_gain_factor: float = 1.0) -> list[tuple[float, float]]:
    """(throughput bit/s, realized outage) per target outage, one realization.

    The resource split rho_u oc 1/C_u equalizes every served user at
    1/sum(1/C_u); the local caching gain scales the delivered video rate by
    ``caching_gain_factor`` = 1/(1 - M/m).
    """
    out = []
    for p_o in p_o_grid:
        c_u = required_rate_quantile(real.mean_snr_db, real.sigma_db, real.weight, p_o)
        served = real.capacity >= c_u
        if not served.any():
            out.append((0.0, 1.0))
            continue
        common = 1.0 / np.sum(1.0 / c_u[served])
        out.append((float(common * b_eff_hz * caching_gain_factor),
                    float(1.0 - served.mean())))
    return out


def unicast_tradeoff(layout: CellLayout, n: int, table: ch.PathlossTable,
                     band_cfg: BandConfig, M: float, m: int, p_o_grid: list[float],
                     realizations: int, master_seed: int, *, point_key: int = 0,
                     b_eff_hz: float | None = None) -> list[SchemePoint]:
    """Average the unicast throughput-outage points over placement realizations."""
    if b_eff_hz is None:
        b_eff_hz = band_cfg.bandwidth_hz / band_cfg.reuse_k
    factor = 1.0 / (1.0 - M / m) if m > 0 else 1.0
    acc = np.zeros((len(p_o_grid), 2))
    for r in range(realizations):
        placement = place_nodes(layout, n, "uniform",
                                seed=_placement_seed(master_seed, point_key, r))
        sampler = ChannelSampler(layout, placement, table, {band_cfg.band: band_cfg},
                                 master_seed, (point_key << 16) | r)
        real = bs_realization(layout, placement, table, band_cfg, sampler)
        for i, (t, p) in enumerate(unicast_realization(real, p_o_grid, b_eff_hz, factor)):
            acc[i] += (t, p)
    acc /= realizations
    return [SchemePoint(t_min_bps=float(t), p_o=float(p)) for t, p in acc]


def _placement_seed(master_seed: int, point_key: int, realization: int) -> int:
    return int(substream(master_seed, 0xA11, point_key, realization).integers(0, 2**31))


# ---------------------------------------------------------------------------
# Coded multicast
# ---------------------------------------------------------------------------

def coded_multicast_ntx(n: int, m: int, M: float) -> float:
    """Equivalent file transmissions of the coded multicast scheme.

    Exact at integer cache-to-library ratios t = M*n/m; elsewhere the convex
    lower envelope, i.e. linear interpolation in M between the two
    neighboring integer-t points at fixed (n, m).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= M < m:
        raise ValueError("cache size must satisfy 0 <= M < m")

    def exact(mm: float) -> float:
        return n * (1.0 - mm / m) / (1.0 + mm * n / m)

    t = M * n / m
    if abs(t - round(t)) < 1e-12:
        return exact(M)
    m_lo = math.floor(t) * m / n
    m_hi = math.ceil(t) * m / n
    w = (M - m_lo) / (m_hi - m_lo)
    return (1.0 - w) * exact(m_lo) + w * exact(m_hi)


def decode_matrix(real: BsRealization, c_r0_grid: np.ndarray) -> np.ndarray:
    """(n, n_grid) bools: user decodes the common stream at each rate."""
    return real.capacity[:, None] >= np.asarray(c_r0_grid)[None, :]


def coded_realization(real: BsRealization, c_r0_grid: np.ndarray
                      ) -> tuple[np.ndarray, np.ndarray]:
    """Per-rate (mean decode-failure fraction, worst-case-user failure flag)."""
    dec = decode_matrix(real, c_r0_grid)
    return 1.0 - dec.mean(axis=0), (~dec[real.worst]).astype(float)


def coded_multicast_tradeoff(layout: CellLayout, n: int, table: ch.PathlossTable,
                             band_cfg: BandConfig, m: int, M: float,
                             c_r0_grid: list[float], realizations: int,
                             master_seed: int, *, point_key: int = 0,
                             b_eff_hz: float | None = None) -> list[SchemePoint]:
    """Throughput-outage curve of coded multicast over the common-rate grid.

    The delivered rate is C_r0/N_TX discounted by the worst-case (max
    distance) user's failure probability; outage averages every user's
    decode-failure probability.
    """
    if b_eff_hz is None:
        b_eff_hz = band_cfg.bandwidth_hz / band_cfg.reuse_k
    grid = np.asarray(c_r0_grid, dtype=float)
    n_tx = coded_multicast_ntx(n, m, M)
    fail = np.zeros(grid.size)
    wc = np.zeros(grid.size)
    for r in range(realizations):
        placement = place_nodes(layout, n, "uniform",
                                seed=_placement_seed(master_seed, point_key, r))
        sampler = ChannelSampler(layout, placement, table, {band_cfg.band: band_cfg},
                                 master_seed, (point_key << 16) | r)
        real = bs_realization(layout, placement, table, band_cfg, sampler)
        f, w = coded_realization(real, grid)
        fail += f
        wc += w
    fail /= realizations
    wc /= realizations
    points = []
    for i, c in enumerate(grid):
        rate = c * b_eff_hz / n_tx
        points.append(SchemePoint(t_min_bps=float(rate * (1.0 - wc[i])), p_o=float(fail[i])))
    return points


# ---------------------------------------------------------------------------
# Harmonic broadcasting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HarmonicPlan:
    length_chunks: float   # video length L
    delay_chunks: float    # startup delay tau
    blocks: int            # P = ceil(L / tau)
    h_factor: float        # sum_{i<=P} 1/i, exact per-file bandwidth factor


def harmonic_plan(length_chunks: float, delay_chunks: float) -> HarmonicPlan:
    """Block structure for a video of length L with startup delay tau.

    The i-th block set (length tau/i) repeats on a subchannel of rate R/i, so
    a file costs R * H_P of downlink rate.  The exact harmonic sum is used
    rather than its log(L/tau) asymptotic.
    """
    if not 0 < delay_chunks <= length_chunks:
        raise ValueError("need 0 < tau <= L")
    blocks = int(math.ceil(length_chunks / delay_chunks))
    h = float(np.sum(1.0 / np.arange(1, blocks + 1)))
    return HarmonicPlan(length_chunks=float(length_chunks), delay_chunks=float(delay_chunks),
                        blocks=blocks, h_factor=h)


def harmonic_plan_from_blocks(length_chunks: float, blocks: int) -> HarmonicPlan:
    return harmonic_plan(length_chunks, length_chunks / blocks)


def harmonic_broadcast_set(plan: HarmonicPlan, budget_bps: float, rate_bps: float,
                           m: int) -> int:
    """Number of top files that fit in the downlink budget."""
    return int(min(math.floor(budget_bps / (rate_bps * plan.h_factor)), m))


def harmonic_tradeoff(layout: CellLayout, n: int, table: ch.PathlossTable,
                      band_cfg: BandConfig, demand, plan: HarmonicPlan,
                      rate_bps: float, c_r0_grid: list[float], realizations: int,
                      master_seed: int, *, point_key: int = 0,
                      b_eff_hz: float | None = None) -> list[SchemePoint]:
    """Throughput-outage curve of harmonic broadcasting over the rate grid.

    Outage combines two independent events: the request falls outside the m'
    broadcast files, or the user's channel cannot decode the common stream.
    """
    if rate_bps <= 0:
        raise ValueError("video rate must be positive")
    if b_eff_hz is None:
        b_eff_hz = band_cfg.bandwidth_hz / band_cfg.reuse_k
    grid = np.asarray(c_r0_grid, dtype=float)
    fail = np.zeros(grid.size)
    wc = np.zeros(grid.size)
    for r in range(realizations):
        placement = place_nodes(layout, n, "uniform",
                                seed=_placement_seed(master_seed, point_key, r))
        sampler = ChannelSampler(layout, placement, table, {band_cfg.band: band_cfg},
                                 master_seed, (point_key << 16) | r)
        real = bs_realization(layout, placement, table, band_cfg, sampler)
        f, w = coded_realization(real, grid)
        fail += f
        wc += w
    fail /= realizations
    wc /= realizations
    pmf_cum = np.cumsum(demand.pmf)
    points = []
    for i, c in enumerate(grid):
        m_prime = harmonic_broadcast_set(plan, c * b_eff_hz, rate_bps, demand.m)
        file_surv = float(pmf_cum[m_prime - 1]) if m_prime >= 1 else 0.0
        t = rate_bps * file_surv * (1.0 - wc[i])
        p_o = 1.0 - file_surv * (1.0 - fail[i])
        points.append(SchemePoint(t_min_bps=float(t), p_o=float(p_o)))
    return points
