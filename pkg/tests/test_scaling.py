import math

import numpy as np
import pytest

from d2dcache.scaling import (BoundParams, ScalingEntry, d2d_tradeoff_bound,
                              scaling_summary)


def params(**kw):
    base = dict(gamma_r=0.4, M=20, m=300, g_c=5, c_r_bps=20e6, reuse_k=9, const_a=1.0)
    base.update(kw)
    return BoundParams(**base)


def test_regime1_point_at_rho_equals_gamma():
    pts = d2d_tradeoff_bound(params(), rho1_grid=[0.4])
    r1 = [p for p in pts if p.regime == "R1"][0]
    # (1 - gamma) * e^0: exact equality, no tolerance
    assert r1.p_o == 1.0 - 0.4
    assert r1.t_bps == pytest.approx((20e6 / 9) * 20 / (0.4 * 300), rel=1e-15)


def test_regime1_curve_monotone_t_in_p():
    pts = [p for p in d2d_tradeoff_bound(params()) if p.regime == "R1"]
    order = np.argsort([p.p_o for p in pts])
    t_sorted = np.array([pts[i].t_bps for i in order])
    assert (np.diff(t_sorted) >= -1e-12).all()


def test_doubling_cache_doubles_regime1_throughput():
    a = d2d_tradeoff_bound(params(M=10), rho1_grid=[0.8])[0]
    b = d2d_tradeoff_bound(params(M=20), rho1_grid=[0.8])[0]
    assert a.p_o == b.p_o
    assert b.t_bps == pytest.approx(2.0 * a.t_bps, rel=1e-15)


def test_rho1_below_gamma_rejected():
    with pytest.raises(ValueError):
        d2d_tradeoff_bound(params(), rho1_grid=[0.1])


def test_regime2_requires_constant():
    with pytest.raises(ValueError, match="const_a"):
        d2d_tradeoff_bound(BoundParams(gamma_r=0.4, M=1, m=300, g_c=5))


def test_regime2_point_and_cluster_size_gate():
    # g_c <= gamma*m/M = 6 admits regime 2; larger g_c drops it
    pts = d2d_tradeoff_bound(params(M=20, g_c=5))
    assert any(p.regime == "R2" and p.illustrative for p in pts)
    pts = d2d_tradeoff_bound(params(M=20, g_c=12))
    assert not any(p.regime == "R2" for p in pts)


def test_high_outage_regimes_gated_on_constants():
    with pytest.raises(ValueError, match="const_b"):
        d2d_tradeoff_bound(params(), include_high_outage=True)
    pts = d2d_tradeoff_bound(params(const_b=1.0, const_d=1.0, const_a_gamma=1.0),
                             include_high_outage=True)
    regimes = {p.regime for p in pts}
    assert {"R3", "R4"} <= regimes
    assert all(p.illustrative for p in pts if p.regime in ("R3", "R4"))


def test_alpha_properties():
    alphas = [BoundParams(gamma_r=g, M=1, m=10, g_c=2, const_a=1.0).alpha
              for g in np.linspace(0.05, 0.95, 19)]
    assert all(0 < a < 0.5 for a in alphas)
    assert all(b < a for a, b in zip(alphas, alphas[1:]))  # decreasing in gamma


def test_gamma_outside_open_interval_rejected():
    with pytest.raises(ValueError):
        BoundParams(gamma_r=1.0, M=1, m=10, g_c=2)


def test_scaling_summary_orders():
    entries = {e.scheme: e for e in scaling_summary(10000, 300, 20, 0.4, 2.7e9, 5e6)}
    assert entries["unicast"].order == "Theta(1/n)"
    assert entries["unicast"].proxy == pytest.approx(1e-4)
    assert entries["coded"].order == "Theta(M/m)"
    assert entries["d2d"].proxy == pytest.approx(20 / 300)
    assert entries["harmonic"].proxy == pytest.approx(1 / (300 * math.log(540)))
    assert entries["d2d"].note == ""


def test_scaling_summary_flags_sparse_cache_regime():
    entries = {e.scheme: e for e in scaling_summary(10, 300, 2, 0.4, 2.7e9, 5e6)}
    assert "violated" in entries["d2d"].note
