"""Experiment execution: sweeps, Monte Carlo aggregation, CSV/JSON emission.

A sweep point is one combination of (n, m, cache size, band split); the D2D
scheme additionally sweeps cluster sides, the BS-only schemes sweep their own
curve control (target outage for unicast, common rate for coded/harmonic).
All schemes at a sweep point share placement and downlink channel
realizations, so `compare` runs are paired.

Every random stream derives from (master seed, sweep-point index, realization
index), and per-realization results merge in index order, so the row set is
byte-identical no matter how many workers run the task pool.

CSV schema (the version line precedes the header)::

    schema_version,scheme,environment,n,m,M,gamma_r,cluster_side,band_split,
    c_r0,p_o,t_min_bps,tier_self,tier_mmwave,tier_uwave,tier_bs,tier_outage,
    realizations,seed

The ``c_r0`` column carries the scheme's curve control: the common downlink
rate (bit/s/Hz) for coded/harmonic, the target outage for unicast, empty for
d2d (whose control is ``cluster_side``) and the rho1 parameter for analytic
rows.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bs_schemes as bss
from . import scaling
from .channel import Band, BandConfig, DEFAULT_BANDS, PathlossTable, band_with
from .config import ExperimentConfig, validate
from .content import optimal_cache_distribution, place_caches, sample_requests, zipf_pmf
from .d2d import (ChannelSampler, Tier, build_clusters, multiband_delivery,
                  throughput_outage_point)
from .geometry import build_layout, place_nodes
from .rng import substream

SCHEMA_VERSION = 1
VERSION_LINE = f"# d2dcache-results schema_version={SCHEMA_VERSION}"
CSV_FIELDS = ["schema_version", "scheme", "environment", "n", "m", "M", "gamma_r",
              "cluster_side", "band_split", "c_r0", "p_o", "t_min_bps", "tier_self",
              "tier_mmwave", "tier_uwave", "tier_bs", "tier_outage", "realizations",
              "seed"]
USER_CSV_FIELDS = ["schema_version", "scheme", "environment", "n", "m", "M", "gamma_r",
                   "cluster_side", "band_split", "realization", "user", "tier",
                   "throughput_bps", "seed"]

_INT_FIELDS = {"schema_version", "n", "m", "M", "realizations", "seed", "realization",
               "user"}
_STR_FIELDS = {"scheme", "environment", "tier"}


@dataclass(frozen=True)
class ResultRow:
    schema_version: int
    scheme: str
    environment: str
    n: int
    m: int
    M: int
    gamma_r: float
    cluster_side: float | None
    band_split: float | None
    c_r0: float | None
    p_o: float
    t_min_bps: float
    tier_self: float
    tier_mmwave: float
    tier_uwave: float
    tier_bs: float
    tier_outage: float
    realizations: int
    seed: int


# ---------------------------------------------------------------------------
# Band setup
# ---------------------------------------------------------------------------

def resolve_bands(cfg: ExperimentConfig, band_split: float | None
                  ) -> tuple[dict[Band, BandConfig], list[Band], Band | None]:
    """Band configs for one sweep point: (all bands, D2D cascade order, BS band).

    Out of band: D2D microwave at 2.45 GHz and the BS at 2.1 GHz each keep
    the full 20 MHz.  In band (split = B_d2d/B_BS): both run at 2.1 GHz and
    share the 20 MHz proportionally.
    """
    enabled = [Band(b) for b in cfg.bands]
    bands: dict[Band, BandConfig] = {}
    d2d_order: list[Band] = []
    bs_band: Band | None = None
    if Band.MMWAVE38 in enabled:
        bands[Band.MMWAVE38] = DEFAULT_BANDS[Band.MMWAVE38]
        d2d_order.append(Band.MMWAVE38)
    uw = DEFAULT_BANDS[Band.ISM2_45]
    cell = DEFAULT_BANDS[Band.CELLULAR2_1]
    if band_split is not None:
        total = cell.bandwidth_hz
        uw = band_with(uw, carrier_hz=cell.carrier_hz,
                       bandwidth_hz=total * band_split / (1.0 + band_split))
        cell = band_with(cell, bandwidth_hz=total / (1.0 + band_split))
    if Band.ISM2_45 in enabled:
        bands[Band.ISM2_45] = uw
        d2d_order.append(Band.ISM2_45)
    if Band.CELLULAR2_1 in enabled:
        bands[Band.CELLULAR2_1] = cell
        bs_band = Band.CELLULAR2_1
    return bands, d2d_order, bs_band


# ---------------------------------------------------------------------------
# Per-(point, realization) tasks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepPoint:
    index: int
    n: int
    m: int
    cache_size: int
    band_split: float | None


def sweep_points(cfg: ExperimentConfig) -> list[SweepPoint]:
    ns = cfg.n_grid or [cfg.n]
    ms = cfg.m_grid or [cfg.m]
    caches = cfg.cache_size_grid or [cfg.cache_size]
    splits = cfg.band_split_grid if cfg.band_split_grid is not None else [None]
    pts = []
    for i, (n, m, mc, sp) in enumerate(itertools.product(ns, ms, caches, splits)):
        pts.append(SweepPoint(index=i, n=int(n), m=int(m), cache_size=int(mc),
                              band_split=sp))
    return pts


def _placement_seed(master: int, point: int, realization: int) -> int:
    return int(substream(master, 0xA11, point, realization).integers(0, 2 ** 31))


def _realization_inputs(cfg: ExperimentConfig, pt: SweepPoint, realization: int):
    layout = build_layout(cfg.environment, cfg.cell_side_m)
    placement = place_nodes(layout, pt.n, cfg.placement,
                            seed=_placement_seed(cfg.master_seed, pt.index, realization))
    table = PathlossTable.load_default(cfg.channel_overrides)
    bands, d2d_order, bs_band = resolve_bands(cfg, pt.band_split)
    sampler = ChannelSampler(layout, placement, table, bands, cfg.master_seed,
                             (pt.index << 16) | realization,
                             floor_free_space=cfg.floor_free_space)
    return layout, placement, table, sampler, bands, d2d_order, bs_band


def run_d2d_task(cfg: ExperimentConfig, pt: SweepPoint, cluster_side: float,
                 realization: int) -> dict:
    """One D2D realization at one cluster size; returns aggregable partials."""
    layout, placement, table, sampler, bands, d2d_order, bs_band = \
        _realization_inputs(cfg, pt, realization)
    demand = zipf_pmf(pt.m, cfg.gamma_r)
    g_c = max(2, int(round(pt.n * (cluster_side / cfg.cell_side_m) ** 2)))
    dist = optimal_cache_distribution(demand, pt.cache_size, g_c,
                                      exponent_mode=cfg.exponent_mode)
    caches = place_caches(dist, pt.n, pt.cache_size,
                          substream(cfg.master_seed, 0xCA, pt.index, realization))
    requests = sample_requests(demand, pt.n,
                               substream(cfg.master_seed, 0x2E, pt.index, realization))
    grid = build_clusters(cfg.cell_side_m, cluster_side, cfg.reuse_k_d2d)
    outcome = multiband_delivery(grid, placement, caches, requests, sampler,
                                 d2d_order, bs_band,
                                 threshold_bps=cfg.playback_threshold_bps,
                                 self_cache_rate_bps=cfg.self_cache_rate_bps,
                                 rounds_factor=cfg.rounds_factor,
                                 bs_budget=cfg.bs_budget)
    point = throughput_outage_point(outcome, cfg.playback_threshold_bps)
    res = {"p_o": point.p_o, "t_min": point.t_min_bps, "tiers": point.tier_counts}
    if cfg.per_user_dump:
        res["users"] = (outcome.throughput_bps.copy(), outcome.tier.copy())
    return res


def run_bs_task(cfg: ExperimentConfig, pt: SweepPoint, realization: int) -> dict:
    """One shared realization of the BS-only schemes (unicast/coded/harmonic)."""
    layout, placement, table, sampler, bands, _, bs_band = \
        _realization_inputs(cfg, pt, realization)
    cell = bands[Band.CELLULAR2_1]
    b_eff = cell.bandwidth_hz / cell.reuse_k
    real = bss.bs_realization(layout, placement, table, cell, sampler)
    out: dict = {}
    if "unicast" in cfg.schemes:
        factor = 1.0 / (1.0 - pt.cache_size / pt.m)
        out["unicast"] = bss.unicast_realization(real, cfg.p_o_grid, b_eff, factor)
    if "coded" in cfg.schemes or "harmonic" in cfg.schemes:
        fail, wc = bss.coded_realization(real, np.asarray(cfg.c_r0_grid))
        out["decode"] = (fail, wc)
    return out


# ---------------------------------------------------------------------------
# Sweep driver
# ---------------------------------------------------------------------------

def _run_task(args):
    kind, cfg, pt, extra, realization = args
    if kind == "d2d":
        return args[:5], run_d2d_task(cfg, pt, extra, realization)
    return args[:5], run_bs_task(cfg, pt, realization)


def run_experiment(cfg: ExperimentConfig, jobs: int = 1
                   ) -> tuple[list[ResultRow], list[dict]]:
    """Execute the configured sweep; returns (rows, per-user dump records)."""
    errors = validate(cfg)
    if errors:
        raise ValueError("invalid configuration: " + "; ".join(errors))
    pts = sweep_points(cfg)
    cluster_sides = cfg.cluster_sides()
    tasks = []
    for pt in pts:
        if "d2d" in cfg.schemes:
            for side in cluster_sides:
                for r in range(cfg.realizations):
                    tasks.append(("d2d", cfg, pt, side, r))
        if any(s in cfg.schemes for s in ("unicast", "coded", "harmonic")):
            for r in range(cfg.realizations):
                tasks.append(("bs", cfg, pt, None, r))

    results: dict = {}
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for key, value in pool.map(_run_task, tasks, chunksize=1):
                results[(key[0], key[2].index, key[3], key[4])] = value
    else:
        for t in tasks:
            key, value = _run_task(t)
            results[(key[0], key[2].index, key[3], key[4])] = value

    rows: list[ResultRow] = []
    user_rows: list[dict] = []
    for pt in pts:
        common = dict(schema_version=SCHEMA_VERSION, environment=cfg.environment,
                      n=pt.n, m=pt.m, M=pt.cache_size, gamma_r=cfg.gamma_r,
                      band_split=pt.band_split, realizations=cfg.realizations,
                      seed=cfg.master_seed)
        if "d2d" in cfg.schemes:
            for side in cluster_sides:
                per_r = [results[("d2d", pt.index, side, r)]
                         for r in range(cfg.realizations)]
                tiers = {name: float(np.mean([p["tiers"][name] for p in per_r]))
                         for name in Tier.NAMES}
                rows.append(ResultRow(scheme="d2d", cluster_side=side, c_r0=None,
                                      p_o=float(np.mean([p["p_o"] for p in per_r])),
                                      t_min_bps=float(np.mean([p["t_min"] for p in per_r])),
                                      tier_self=tiers["self"], tier_mmwave=tiers["mmwave"],
                                      tier_uwave=tiers["uwave"], tier_bs=tiers["bs"],
                                      tier_outage=tiers["outage"], **common))
                if cfg.per_user_dump:
                    for r, p in enumerate(per_r):
                        thr, tier = p["users"]
                        for u in range(pt.n):
                            user_rows.append(dict(schema_version=SCHEMA_VERSION,
                                                  scheme="d2d",
                                                  environment=cfg.environment,
                                                  n=pt.n, m=pt.m, M=pt.cache_size,
                                                  gamma_r=cfg.gamma_r,
                                                  cluster_side=side,
                                                  band_split=pt.band_split,
                                                  realization=r, user=u,
                                                  tier=Tier.NAMES[int(tier[u])],
                                                  throughput_bps=float(thr[u]),
                                                  seed=cfg.master_seed))
        bs_needed = any(s in cfg.schemes for s in ("unicast", "coded", "harmonic"))
        if not bs_needed:
            continue
        per_r = [results[("bs", pt.index, None, r)] for r in range(cfg.realizations)]
        if "unicast" in cfg.schemes:
            for i, target in enumerate(cfg.p_o_grid):
                t = float(np.mean([p["unicast"][i][0] for p in per_r]))
                po = float(np.mean([p["unicast"][i][1] for p in per_r]))
                rows.append(_bs_row("unicast", common, float(target), t, po))
        if "coded" in cfg.schemes or "harmonic" in cfg.schemes:
            fail = np.mean([p["decode"][0] for p in per_r], axis=0)
            wc = np.mean([p["decode"][1] for p in per_r], axis=0)
            bands, _, _ = resolve_bands(cfg, pt.band_split)
            cell = bands[Band.CELLULAR2_1]
            b_eff = cell.bandwidth_hz / cell.reuse_k
            if "coded" in cfg.schemes:
                n_tx = bss.coded_multicast_ntx(pt.n, pt.m, pt.cache_size)
                for i, c in enumerate(cfg.c_r0_grid):
                    t = c * b_eff / n_tx * (1.0 - float(wc[i]))
                    rows.append(_bs_row("coded", common, float(c), t, float(fail[i])))
            if "harmonic" in cfg.schemes:
                demand = zipf_pmf(pt.m, cfg.gamma_r)
                delay = cfg.harmonic_delay_bits or cfg.video_length_bits / cfg.harmonic_blocks
                plan = bss.harmonic_plan(cfg.video_length_bits, delay)
                cum = np.cumsum(demand.pmf)
                for i, c in enumerate(cfg.c_r0_grid):
                    mp = bss.harmonic_broadcast_set(plan, c * b_eff, cfg.video_rate_bps, pt.m)
                    surv = float(cum[mp - 1]) if mp >= 1 else 0.0
                    t = cfg.video_rate_bps * surv * (1.0 - float(wc[i]))
                    po = 1.0 - surv * (1.0 - float(fail[i]))
                    rows.append(_bs_row("harmonic", common, float(c), t, po))
    return rows, user_rows


def _bs_row(scheme: str, common: dict, control: float, t_bps: float, p_o: float) -> ResultRow:
    n = common["n"]
    return ResultRow(scheme=scheme, cluster_side=None, c_r0=control, p_o=p_o,
                     t_min_bps=t_bps, tier_self=0.0, tier_mmwave=0.0, tier_uwave=0.0,
                     tier_bs=n * (1.0 - p_o), tier_outage=n * p_o, **common)


def analytic_rows(cfg: ExperimentConfig, *, const_a: float = 1.0) -> list[ResultRow]:
    """Scaling-law bound points in the results schema (scheme 'analytic:d2d').

    Prefactors without built-in exact values default to 1.0 and are
    illustrative; the c_r0 column carries the rho1 curve parameter.
    """
    side = cfg.cluster_sides()[0]
    g_c = max(2, int(round(cfg.n * (side / cfg.cell_side_m) ** 2)))
    params = scaling.BoundParams(gamma_r=cfg.gamma_r, M=cfg.cache_size, m=cfg.m,
                                 g_c=g_c, const_a=const_a)
    rows = []
    for b in scaling.d2d_tradeoff_bound(params):
        rows.append(ResultRow(schema_version=SCHEMA_VERSION, scheme=f"analytic:d2d_{b.regime.lower()}",
                              environment=cfg.environment, n=cfg.n, m=cfg.m,
                              M=cfg.cache_size, gamma_r=cfg.gamma_r, cluster_side=side,
                              band_split=None, c_r0=b.detail.get("rho1"),
                              p_o=b.p_o, t_min_bps=b.t_bps, tier_self=0.0,
                              tier_mmwave=0.0, tier_uwave=0.0, tier_bs=0.0,
                              tier_outage=0.0, realizations=0, seed=cfg.master_seed))
    return rows


# ---------------------------------------------------------------------------
# Emission and round-trip readers
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def rows_to_csv(rows: list, fields: list[str]) -> str:
    buf = io.StringIO()
    buf.write(VERSION_LINE + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        data = dataclasses.asdict(row) if dataclasses.is_dataclass(row) else row
        writer.writerow([_fmt(data[f]) for f in fields])
    return buf.getvalue()


def emit_results(rows: list, fmt: str, path: str | Path,
                 fields: list[str] | None = None) -> None:
    """Write rows as CSV (version line + header) or a faithful JSON mirror."""
    if not rows:
        raise ValueError("no rows to emit")
    fields = fields or CSV_FIELDS
    path = Path(path)
    if fmt == "csv":
        path.write_text(rows_to_csv(rows, fields))
    elif fmt == "json":
        data = [dataclasses.asdict(r) if dataclasses.is_dataclass(r) else r for r in rows]
        payload = {"schema_version": SCHEMA_VERSION, "rows": data}
        path.write_text(json.dumps(payload, indent=2) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def _parse_field(name: str, text: str):
    if text == "":
        return None
    if name in _STR_FIELDS:
        return text
    if name in _INT_FIELDS:
        return int(text)
    return float(text)


def read_results(path: str | Path) -> list[ResultRow]:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ValueError("missing schema version line")
    version = int(lines[0].rsplit("=", 1)[1])
    if version != SCHEMA_VERSION:
        raise ValueError(f"schema version mismatch: file {version}, reader {SCHEMA_VERSION}")
    reader = csv.reader(lines[1:])
    header = next(reader)
    if header != CSV_FIELDS:
        raise ValueError("unexpected CSV header")
    rows = []
    for rec in reader:
        kwargs = {f: _parse_field(f, v) for f, v in zip(header, rec)}
        rows.append(ResultRow(**kwargs))
    return rows


def read_results_json(path: str | Path) -> list[ResultRow]:
    payload = json.loads(Path(path).read_text())
    if payload.get("schema_version") != SCHEMA_VERSION:
        raise ValueError("schema version mismatch")
    return [ResultRow(**r) for r in payload["rows"]]
