"""Closed-form throughput-outage lower bound and scheme scaling summary.

The one-hop D2D bound has four outage regimes.  The first two carry explicit
constants; the high-outage regimes only fix the dominant order up to
constants published elsewhere, which are therefore user-supplied (callers may
pass 1.0 as an illustrative placeholder, flagged in the output).  Vanishing
delta(m) correction terms are dropped throughout: every emitted value is the
dominant term only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class BoundParams:
    gamma_r: float
    M: int
    m: int
    g_c: int
    c_r_bps: float = 20e6          # point-to-point link rate at the design range
    reuse_k: int = 9
    const_a: float | None = None   # regime-2 prefactor
    const_b: float | None = None   # regime-3 prefactor
    const_d: float | None = None   # regime-4 prefactor
    const_a_gamma: float | None = None  # regime-3/4 boundary coefficient a(gamma_r)

    def __post_init__(self):
        if not 0.0 < self.gamma_r < 1.0:
            raise ValueError("gamma_r must lie in (0, 1)")

    @property
    def alpha(self) -> float:
        """Library-growth exponent (1-gamma)/(2-gamma) in (0, 1/2)."""
        return (1.0 - self.gamma_r) / (2.0 - self.gamma_r)

    @property
    def rho2_min(self) -> float:
        g = self.gamma_r
        return ((1.0 - g) / (g ** g * self.M ** (1.0 - g))) ** (1.0 / (2.0 - g))


@dataclass(frozen=True)
class TradeoffBound:
    regime: str           # "R1".."R4"
    p_o: float
    t_bps: float
    illustrative: bool = False  # True when a placeholder constant was used
    detail: dict = field(default_factory=dict)


def d2d_tradeoff_bound(params: BoundParams, rho1_grid: list[float] | None = None,
                       *, include_high_outage: bool = False) -> list[TradeoffBound]:
    """Dominant-term lower-bound points of the D2D throughput-outage tradeoff.

    Regime 1 (large clusters, every file cached somewhere) traces a curve over
    the rho1 >= gamma_r grid; regime 2 contributes the point pinned by the
    cluster size, and needs the regime-2 constant.  Regimes 3/4 (outage -> 1)
    are emitted only on request and only when their constants are supplied.
    """
    g, M, m = params.gamma_r, params.M, params.m
    base = params.c_r_bps / params.reuse_k
    points: list[TradeoffBound] = []

    if rho1_grid is None:
        rho1_grid = [float(r) for r in np.linspace(g, 4.0 + g, 12)]
    for rho1 in rho1_grid:
        if rho1 < g:
            raise ValueError("rho1 must be >= gamma_r")
        p = (1.0 - g) * math.exp(g - rho1)
        t = base * M / (rho1 * m)
        points.append(TradeoffBound("R1", p, t, detail={"rho1": rho1}))

    if params.g_c > g * m / M:
        return points  # regime 2 needs g_c <= gamma_r * m / M

    if params.const_a is None:
        raise ValueError("no exact regime-2 prefactor is built in; supply const_a "
                         "(1.0 gives an illustrative placeholder)")
    p2 = 1.0 - g ** g * (M * params.g_c / m) ** (1.0 - g)
    if p2 > 0:
        t2 = base * params.const_a * M / (m * (1.0 - p2) ** (1.0 / (1.0 - g)))
        points.append(TradeoffBound("R2", p2, t2, illustrative=params.const_a == 1.0,
                                    detail={"g_c": params.g_c}))

    if include_high_outage:
        missing = [name for name, v in (("const_b", params.const_b),
                                        ("const_d", params.const_d),
                                        ("const_a_gamma", params.const_a_gamma)) if v is None]
        if missing:
            raise ValueError("no exact regime-3/4 constants are built in; "
                             f"supply {', '.join(missing)}")
        alpha = params.alpha
        ma = m ** (-alpha)
        p3_lo = 1.0 - g ** g * M ** (1.0 - g) * params.rho2_min ** (1.0 - g) * ma
        p3_hi = 1.0 - params.const_a_gamma * ma
        illus = 1.0 in (params.const_b, params.const_d, params.const_a_gamma)
        points.append(TradeoffBound("R3", max(p3_lo, 0.0), base * params.const_b * ma,
                                    illustrative=illus, detail={"p_max": p3_hi}))
        points.append(TradeoffBound("R4", min(max(p3_hi, 0.0), 1.0),
                                    base * params.const_d * ma, illustrative=illus))
    return points


@dataclass(frozen=True)
class ScalingEntry:
    scheme: str
    order: str        # symbolic dominant order
    proxy: float      # the order expression evaluated at the given sizes
    note: str = ""


def scaling_summary(n: int, m: int, M: int, gamma_r: float, length_chunks: float,
                    delay_chunks: float, m_prime: int | None = None) -> list[ScalingEntry]:
    """Dominant throughput order per scheme, with evaluated proxies.

    The caching gains hold in the dense regime M*n >> m; when violated the
    entries carry a warning note.  The harmonic proxy uses the full broadcast
    set m' = m unless one is supplied.
    """
    warn = "" if M * n > 10 * m else "regime M*n >> m violated at these sizes"
    mp = m if m_prime is None else m_prime
    log_ratio = math.log(length_chunks / delay_chunks) if length_chunks > delay_chunks else 1.0
    return [
        ScalingEntry("d2d", "Theta(M/m)", M / m, warn),
        ScalingEntry("coded", "Theta(M/m)", M / m, warn),
        ScalingEntry("unicast", "Theta(1/n)", 1.0 / n,
                     "same order with or without local caching"),
        ScalingEntry("harmonic", "Theta(1/(m' log(L/tau)))", 1.0 / (mp * log_ratio),
                     f"m'={mp}"),
    ]
