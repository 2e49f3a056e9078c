"""Zipf demand, optimal random caching distribution and cache placement.

Users request files from a library of m titles with Zipf(gamma_r) popularity
and independently cache M distinct titles drawn from a caching distribution
P_c.  The P_c that maximizes the probability of finding a request within the
g_c-node cluster has water-filling form

    P_c(f) = max(0, 1 - nu / z_f),    z_f = P_r(f)^(1/(M*(g_c-1) - 1)),

with the water level nu = (m* - 1) / sum_{f <= m*} 1/z_f pinned by
normalization on the support {1..m*}.  The exponent M*(g_c-1) - 1 is the
stationarity exponent of the hit objective, whose own exponent is the
neighbor draw count M*(g_c-1); both are exposed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ZipfDemand:
    m: int
    gamma_r: float
    pmf: np.ndarray  # (m,), non-increasing, sums to 1


def zipf_pmf(m: int, gamma_r: float) -> ZipfDemand:
    """Zipf request distribution over files 1..m (gamma_r = 0 gives uniform)."""
    if m < 1:
        raise ValueError("library size m must be >= 1")
    if not 0.0 <= gamma_r < 1.0:
        raise ValueError("gamma_r must lie in [0, 1)")
    w = np.arange(1, m + 1, dtype=float) ** (-gamma_r)
    return ZipfDemand(m=m, gamma_r=gamma_r, pmf=w / w.sum())


@dataclass(frozen=True)
class CachingDistribution:
    pc: np.ndarray       # (m,) per-file caching probability
    nu: float            # water level
    z: np.ndarray        # (m,) popularity transforms
    support: int         # m*: files with positive probability
    M: int
    g_c: int
    exponent_mode: str


def _z_exponent(M: int, g_c: int, exponent_mode: str) -> int:
    draws = M * (g_c - 1)
    if exponent_mode == "paper":
        return draws - 1
    if exponent_mode == "neighbor-count":
        return draws
    raise ValueError(f"unknown exponent_mode {exponent_mode!r}")


def optimal_cache_distribution(demand: ZipfDemand, M: int, g_c: int,
                               exponent_mode: str = "paper") -> CachingDistribution:
    """Water-filling caching distribution for cluster size g_c and cache size M.

    The support search scans m* downward from min(m, ceil(M*g_c/gamma_r))
    and accepts the first support where every coordinate is non-negative;
    the coordinates are monotone in m*, so this is the optimum.  The
    degenerate exponent M*(g_c-1) - 1 = 0 (single neighbor draw) makes the
    hit objective linear, whose maximizer is all mass on the top file; this
    is returned as the continuous limit rather than an error.
    """
    if M < 1:
        raise ValueError("cache size M must be >= 1")
    if g_c < 2:
        raise ValueError("cluster size g_c must be >= 2")
    m = demand.m
    denom = _z_exponent(M, g_c, exponent_mode)
    if denom < 0 or M * (g_c - 1) < 1:
        raise ValueError("M*(g_c-1) must be at least 1")
    if denom == 0:
        pc = np.zeros(m)
        pc[0] = 1.0
        return CachingDistribution(pc=pc, nu=0.0, z=demand.pmf.copy(), support=1,
                                   M=M, g_c=g_c, exponent_mode=exponent_mode)
    z = demand.pmf ** (1.0 / denom)
    if demand.gamma_r > 0:
        cap = min(m, int(np.ceil(M * g_c / demand.gamma_r)))
    else:
        cap = m
    inv_z_cum = np.cumsum(1.0 / z)
    for m_star in range(cap, 0, -1):
        nu = (m_star - 1) / inv_z_cum[m_star - 1] if m_star > 1 else 0.0
        # z is non-increasing, so non-negativity on the support reduces to
        # the last supported file
        if 1.0 - nu / z[m_star - 1] >= -1e-15:
            pc = np.zeros(m)
            pc[:m_star] = np.maximum(1.0 - nu / z[:m_star], 0.0)
            return CachingDistribution(pc=pc, nu=float(nu), z=z, support=m_star,
                                       M=M, g_c=g_c, exponent_mode=exponent_mode)
    raise RuntimeError("no feasible support found")  # unreachable: m*=1 always feasible


@dataclass(frozen=True)
class CacheAssignment:
    files: np.ndarray  # (n, M) int, file ids in 1..m, distinct per row
    seed: int

    @property
    def n(self) -> int:
        return self.files.shape[0]

    def holds(self, node: int, file_id: int) -> bool:
        return bool((self.files[node] == file_id).any())


def place_caches(dist: CachingDistribution, n: int, M: int,
                 rng: np.random.Generator, seed: int = 0) -> CacheAssignment:
    """Draw M distinct files per node from the caching distribution.

    Sequential without-replacement sampling with residual renormalization is
    realized by the Gumbel top-M trick (identical in distribution, one
    vectorized pass).  Requires M within the distribution's support size.
    """
    m = dist.pc.shape[0]
    if M > m:
        raise ValueError("cache size M cannot exceed the library size")
    if M > dist.support:
        raise ValueError(
            f"cache size M={M} exceeds the caching support m*={dist.support}; "
            "increase the cluster size g_c (or the cache size used to build the "
            "distribution) so more files get positive caching probability")
    with np.errstate(divide="ignore"):
        logp = np.log(dist.pc)
    gumbel = rng.gumbel(size=(n, m))
    keys = logp[None, :] + gumbel
    picks = np.argpartition(-keys, M - 1, axis=1)[:, :M]
    return CacheAssignment(files=np.sort(picks, axis=1) + 1, seed=seed)


def sample_requests(demand: ZipfDemand, n: int, rng: np.random.Generator) -> np.ndarray:
    """One i.i.d. Zipf request per node; file ids in 1..m."""
    return rng.choice(demand.m, size=n, p=demand.pmf) + 1


def cluster_hit_probability(dist: CachingDistribution, demand: ZipfDemand,
                            M: int, g_c: int) -> float:
    """Probability a request is found in at least one of the g_c - 1 neighbors.

    Each neighbor contributes M independent draws from P_c, so a file f is
    missed by the whole cluster with probability (1 - P_c(f))^(M*(g_c-1)).
    """
    if g_c < 1:
        raise ValueError("g_c must be >= 1")
    draws = M * (g_c - 1)
    return float(np.sum(demand.pmf * (1.0 - (1.0 - dist.pc) ** draws)))
