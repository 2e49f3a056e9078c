"""Per-link propagation: LOS state, pathloss, noise and Shannon capacity.

Three transmission types are modeled, each with its own band parameters:
mm-wave D2D at 38 GHz (log-distance model, huge bandwidth, fragile), microwave
D2D at 2.45/2.1 GHz (WINNER II A1/A2/B1/B4 models, wall-tolerant) and the
cellular downlink at 2.1 GHz (WINNER II C2/C4 macro models).

Shadowing is log-normal (a zero-mean normal in dB).  Microwave links carry an
extra body-shadowing term (device held against the user's body); at mm-wave
the body is instead modeled as a separate BLOS state since it blocks the path
entirely.  ``NO_LINK`` (infinite pathloss) is a value, not an error: it feeds
through the capacity formula as zero rate.

Coefficient rows fixed by this simulator (A1 rows, mm-wave exponents, C2
expressions, band table) are hard defaults in code; rows assembled from
external channel-model documents (A2/B1/B4/C4) ship in
``data/winner_params.json`` with provenance notes, and every coefficient can
be overridden through the experiment configuration.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np

from .geometry import Scenario, Environment, SCENARIO_CODE

C_LIGHT = 299_792_458.0
NOISE_PSD_DBM_HZ = -174.0
NO_LINK = math.inf
WALL_DB = 5.0  # light interior partition attenuation, per wall

_A1, _A2, _B1, _B4, _C2, _C4 = range(6)
_LOS, _BLOS, _NLOS = range(3)


class Band(str, Enum):
    MMWAVE38 = "mmwave38"
    ISM2_45 = "ism2_45"
    CELLULAR2_1 = "cellular2_1"


class LosClass(str, Enum):
    LOS = "los"
    BLOS = "blos"
    NLOS = "nlos"


@dataclass(frozen=True)
class BandConfig:
    band: Band
    bandwidth_hz: float
    carrier_hz: float
    tx_power_dbm: float
    gain_tx_db: float
    gain_rx_db: float
    reuse_k: int
    max_range_m: float
    link_kind: str  # "d2d" | "bs"

    @property
    def eirp_gain_dbm(self) -> float:
        return self.tx_power_dbm + self.gain_tx_db + self.gain_rx_db


DEFAULT_BANDS: dict[Band, BandConfig] = {
    Band.MMWAVE38: BandConfig(Band.MMWAVE38, 800e6, 38e9, 20.0, 9.0, 9.0, 4, 80.0, "d2d"),
    Band.ISM2_45: BandConfig(Band.ISM2_45, 20e6, 2.45e9, 20.0, 12.0, 0.0, 4, 100.0, "d2d"),
    Band.CELLULAR2_1: BandConfig(Band.CELLULAR2_1, 20e6, 2.1e9, 43.0, 12.0, 0.0, 3, math.inf, "bs"),
}

# body-shadowing std (dB) by (link kind, LOS class): hand-to-hand D2D
# measurements vs access-point-to-handheld for BS links
BODY_SHADOW_DB = {
    ("d2d", LosClass.LOS): 4.2,
    ("d2d", LosClass.NLOS): 3.6,
    ("bs", LosClass.LOS): 2.3,
    ("bs", LosClass.NLOS): 2.2,
}


@dataclass(frozen=True)
class LosState:
    state: LosClass
    body_shadow_db: float = 0.0


# ---------------------------------------------------------------------------
# LOS probability (WINNER II models)
# ---------------------------------------------------------------------------

def _office_los(d: np.ndarray) -> np.ndarray:
    # clamped everywhere: the expression crosses 1 at d ~= 2.474 m, so the
    # clamp reproduces the nominal short-range unity plateau while keeping
    # the model continuous in d
    d = np.maximum(d, 1e-12)
    y = 1.24 - 0.61 * np.log10(d)
    t = 1.0 - y ** 3
    cbrt = np.cbrt(t)
    return np.clip(1.0 - 0.9 * cbrt, 0.0, 1.0)


def _hotspot_los(d: np.ndarray) -> np.ndarray:
    return np.where(d <= 10.0, 1.0, np.exp(-(d - 10.0) / 45.0))


def _outdoor_los(d: np.ndarray) -> np.ndarray:
    d = np.maximum(d, 1e-12)
    e = np.exp(-d / 36.0)
    return np.clip(np.minimum(18.0 / d, 1.0) * (1.0 - e) + e, 0.0, 1.0)


def los_probability_arr(scen_codes: np.ndarray, environment: Environment,
                        d: np.ndarray) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    p = np.zeros(d.shape)
    a1 = scen_codes == _A1
    if np.any(a1):
        indoor = _office_los if environment is Environment.OFFICE else _hotspot_los
        p[a1] = indoor(d[a1])
    outdoor = (scen_codes == _B1) | (scen_codes == _C2)
    if np.any(outdoor):
        p[outdoor] = _outdoor_los(d[outdoor])
    # A2/B4/C4 cross a building shell: zero LOS probability
    return p


def los_probability(scenario: Scenario, environment: Environment | str, d: float) -> float:
    """LOS probability of a link at distance d under its scenario model."""
    if d < 0:
        raise ValueError("distance must be non-negative")
    env = Environment(environment)
    code = np.array([SCENARIO_CODE[Scenario(scenario)]])
    return float(los_probability_arr(code, env, np.array([float(d)]))[0])


def states_from_uniform(p_los_w: np.ndarray, u: np.ndarray, mmwave: bool) -> np.ndarray:
    """Map uniform draws to LOS-class codes given the nominal LOS probability.

    At mm-wave, half the nominal LOS cases are body-blocked (BLOS); at
    microwave the body is an added shadowing term instead, so nominal LOS is
    true LOS.
    """
    if mmwave:
        out = np.full(np.shape(u), _NLOS, dtype=np.int8)
        out[u < p_los_w / 2.0] = _LOS
        out[(u >= p_los_w / 2.0) & (u < p_los_w)] = _BLOS
        return out
    return np.where(u < p_los_w, _LOS, _NLOS).astype(np.int8)


def sample_los_state(p_los_w: float, band: Band | str, link_kind: str,
                     rng: np.random.Generator) -> LosState:
    """Draw the LOS state of one link, with body shadowing for microwave bands."""
    if not 0.0 <= p_los_w <= 1.0:
        raise ValueError("p_los_w must be a probability")
    band = Band(band)
    code = states_from_uniform(np.array(p_los_w), np.array(rng.random()),
                               band is Band.MMWAVE38)
    state = (LosClass.LOS, LosClass.BLOS, LosClass.NLOS)[int(code)]
    body = 0.0
    if band is not Band.MMWAVE38:
        sigma = BODY_SHADOW_DB[(link_kind, state)]
        body = sigma * rng.standard_normal()
    return LosState(state=state, body_shadow_db=body)


# ---------------------------------------------------------------------------
# Pathloss parameter table
# ---------------------------------------------------------------------------

_DATA_FILE = "winner_params.json"

# built-in coefficient rows; key is "kind|scenario|environment|state"
_BUILTIN_ROWS: dict[str, dict] = {
    "mmwave|any|any|los": {"model": "mmwave_logdist", "d0": 5.0, "alpha": 2.21, "sigma": 9.4},
    "mmwave|any|any|blos": {"model": "mmwave_logdist", "d0": 5.0, "alpha": 3.18, "sigma": 11.0},
    "uwave|a1|office|los": {"model": "a1_winner", "a1": 18.7, "a2": 46.8, "a3": 20.0, "sigma": 3.0},
    "uwave|a1|office|nlos": {"model": "a1_winner", "a1": 36.8, "a2": 43.8, "a3": 20.0, "sigma": 6.0},
    "uwave|a1|hotspot|los": {"model": "a1_winner", "a1": 13.9, "a2": 64.4, "a3": 20.0, "sigma": 3.0},
    "uwave|a1|hotspot|nlos": {"model": "a1_winner", "a1": 37.8, "a2": 36.5, "a3": 23.0, "sigma": 6.0},
    "uwave|c2|any|nlos": {"model": "c2_nlos", "sigma": 8.0},
    # C2 LOS: first-slope coefficients come from the parameter file; the
    # dual-slope structure and the post-breakpoint expression are fixed here
    "uwave|c2|any|los": {"model": "c2_los_dual", "sigma_lo": 4.0, "sigma_hi": 6.0,
                         "hi_const": 13.37, "hi_h_coef": -14.0, "hi_a3": 6.0},
}


class PathlossTable:
    """Coefficient rows keyed by (band kind, scenario, environment, LOS class).

    Lookup falls back from the specific environment to ``any``.  The merged
    table = built-in rows <- packaged parameter file <- user overrides.
    """

    def __init__(self, rows: dict[str, dict]):
        self.rows = {k: dict(v) for k, v in rows.items()}

    @staticmethod
    def key(kind: str, scenario: str, environment: str, state: str) -> str:
        return f"{kind}|{scenario}|{environment}|{state}"

    def get(self, kind: str, scenario: str, environment: str, state: str) -> dict:
        for env in (environment, "any"):
            row = self.rows.get(self.key(kind, scenario, env, state))
            if row is not None:
                return row
        raise KeyError(f"no pathloss row for {kind}|{scenario}|{environment}|{state}")

    @classmethod
    def load_default(cls, overrides: dict[str, dict] | None = None) -> "PathlossTable":
        packaged = json.loads(resources.files("d2dcache.data").joinpath(_DATA_FILE).read_text())
        rows = {k: dict(v) for k, v in _BUILTIN_ROWS.items()}
        for layer in (packaged["rows"], overrides or {}):
            for k, patch in layer.items():
                row = rows.setdefault(k, {})
                row.update(patch)
        return cls(rows)

    def save(self, path: str | Path) -> None:
        payload = {"version": 1, "rows": self.rows}
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "PathlossTable":
        payload = json.loads(Path(path).read_text())
        return cls(payload["rows"])


# ---------------------------------------------------------------------------
# Pathloss evaluation
# ---------------------------------------------------------------------------

def free_space_db(d: np.ndarray, carrier_hz: float) -> np.ndarray:
    return 20.0 * np.log10(4.0 * np.pi * np.maximum(d, 1e-3) * carrier_hz / C_LIGHT)


def _logd(d: np.ndarray) -> np.ndarray:
    return np.log10(np.maximum(d, 1e-3))


def _fc_term(a3: float, carrier_hz: float) -> float:
    return a3 * math.log10(carrier_hz / 1e9 / 5.0)


def _c2_nlos_mean(d: np.ndarray, carrier_hz: float, bs_height: float) -> np.ndarray:
    lh = math.log10(bs_height)
    return ((44.9 - 6.55 * lh) * _logd(d) + 34.46 + 5.83 * lh
            + _fc_term(23.0, carrier_hz))


def breakpoint_distance(carrier_hz: float, h_a: float, h_b: float) -> float:
    """Dual-slope breakpoint with 1 m effective-height reduction."""
    ha, hb = max(h_a - 1.0, 1e-3), max(h_b - 1.0, 1e-3)
    return 4.0 * ha * hb * carrier_hz / C_LIGHT


def pathloss_mean_db(table: PathlossTable, band_cfg: BandConfig, environment: Environment,
                     scen_codes: np.ndarray, state_codes: np.ndarray, d: np.ndarray,
                     n_w: np.ndarray | None = None, d_in: np.ndarray | None = None,
                     bs_height: float = 25.0, ms_height: float = 1.5) -> np.ndarray:
    """Deterministic (shadowing-free) pathloss in dB; NO_LINK where unavailable.

    mm-wave availability: distance within range, LOS or BLOS state, and no
    wall on the path (same-room indoor or outdoor-to-outdoor only) -- walls
    are impenetrable at 38 GHz, so any wall-crossing scenario yields NO_LINK.
    """
    d = np.asarray(d, dtype=float)
    out = np.full(d.shape, NO_LINK)
    fc = band_cfg.carrier_hz
    env = environment.value
    if n_w is None:
        n_w = np.zeros(d.shape)
    if d_in is None:
        d_in = np.zeros(d.shape)

    if band_cfg.band is Band.MMWAVE38:
        same_room = (scen_codes == _A1) & (n_w == 0)
        open_path = same_room | (scen_codes == _B1)
        for state, skey in ((_LOS, "los"), (_BLOS, "blos")):
            row = table.get("mmwave", "any", env, skey)
            sel = open_path & (state_codes == state) & (d <= band_cfg.max_range_m)
            if np.any(sel):
                pl0 = 20.0 * math.log10(4.0 * math.pi * row["d0"] * fc / C_LIGHT)
                out[sel] = pl0 + 10.0 * row["alpha"] * np.log10(np.maximum(d[sel], 1e-3) / row["d0"])
        return out

    in_range = d <= band_cfg.max_range_m
    for scen, skey_opts in ((_A1, ("los", "nlos")), (_A2, ("nlos",)), (_B4, ("nlos",)),
                            (_B1, ("los", "nlos")), (_C2, ("los", "nlos")), (_C4, ("nlos",))):
        for skey in skey_opts:
            state = _LOS if skey == "los" else _NLOS
            sel = (scen_codes == scen) & (state_codes == state) & in_range
            if not np.any(sel):
                continue
            scen_name = ("a1", "a2", "b1", "b4", "c2", "c4")[scen]
            if scen in (_C4,):
                row = table.get("uwave", "c4", env, "nlos")
                base = _c2_nlos_mean(d[sel], fc, bs_height)
                out[sel] = (base + row["wall_db"] + row["din_db_per_m"] * d_in[sel]
                            - row["ms_height_coef"] * ms_height)
            elif scen == _C2 and skey == "los":
                row = table.get("uwave", "c2", env, "los")
                d_bp = breakpoint_distance(fc, bs_height, ms_height)
                lo = row["a1"] * _logd(d[sel]) + row["a2"] + _fc_term(row["a3"], fc)
                lha = math.log10(max(bs_height - 1.0, 1e-3))
                lhb = math.log10(max(ms_height - 1.0, 1e-3))
                hi = (40.0 * _logd(d[sel]) + row["hi_const"]
                      + row["hi_h_coef"] * (lha + lhb) + _fc_term(row["hi_a3"], fc))
                out[sel] = np.where(d[sel] < d_bp, lo, hi)
            elif scen == _C2:
                out[sel] = _c2_nlos_mean(d[sel], fc, bs_height)
            elif scen == _B1 and skey == "los":
                row = table.get("uwave", "b1", env, "los")
                d_bp = breakpoint_distance(fc, ms_height, ms_height)
                lo = row["a1"] * _logd(d[sel]) + row["a2"] + _fc_term(row["a3"], fc)
                lh = math.log10(max(ms_height - 1.0, 1e-3))
                hi = (40.0 * _logd(d[sel]) + row["hi_const"]
                      + row["hi_h_coef"] * 2.0 * lh + _fc_term(row["hi_a3"], fc))
                out[sel] = np.where(d[sel] < d_bp, lo, hi)
            else:
                row = table.get("uwave", scen_name, env, skey)
                out[sel] = row["a1"] * _logd(d[sel]) + row["a2"] + _fc_term(row["a3"], fc)
                if scen == _A1:
                    out[sel] += WALL_DB * n_w[sel]
    return out


def shadow_sigma_db(table: PathlossTable, band_cfg: BandConfig, environment: Environment,
                    scen_codes: np.ndarray, state_codes: np.ndarray, d: np.ndarray,
                    bs_height: float = 25.0, ms_height: float = 1.5) -> np.ndarray:
    """Environment-shadowing std per link (dB), matching the row that applies."""
    sig = np.zeros(np.shape(d))
    env = environment.value
    if band_cfg.band is Band.MMWAVE38:
        for state, skey in ((_LOS, "los"), (_BLOS, "blos")):
            sig[state_codes == state] = table.get("mmwave", "any", env, skey)["sigma"]
        return sig
    for scen, scen_name in zip((_A1, _A2, _B1, _B4, _C2, _C4),
                               ("a1", "a2", "b1", "b4", "c2", "c4")):
        for skey, state in (("los", _LOS), ("nlos", _NLOS)):
            sel = (scen_codes == scen) & (state_codes == state)
            if not np.any(sel):
                continue
            try:
                row = table.get("uwave", scen_name, env, skey)
            except KeyError:
                continue
            if row.get("model") == "c2_los_dual":
                d_bp = breakpoint_distance(band_cfg.carrier_hz, bs_height, ms_height)
                sig[sel] = np.where(np.asarray(d)[sel] < d_bp, row["sigma_lo"], row["sigma_hi"])
            elif "sigma" in row:
                sig[sel] = row["sigma"]
    return sig


def body_sigma_db(band_cfg: BandConfig, state_codes: np.ndarray) -> np.ndarray:
    """Body-shadowing std per link; zero at mm-wave (handled by BLOS)."""
    if band_cfg.band is Band.MMWAVE38:
        return np.zeros(np.shape(state_codes))
    los = BODY_SHADOW_DB[(band_cfg.link_kind, LosClass.LOS)]
    nlos = BODY_SHADOW_DB[(band_cfg.link_kind, LosClass.NLOS)]
    return np.where(state_codes == _LOS, los, nlos)


def apply_free_space_floor(total_db: np.ndarray, mean_db: np.ndarray, d: np.ndarray,
                           carrier_hz: float) -> np.ndarray:
    """Clip lucky shadowing draws at free space, where the model allows it.

    Some deterministic means sit legitimately below free space (indoor LOS
    waveguiding), so the floor only binds where the mean itself is at or
    above free space: it truncates shadowing excursions, never overrides the
    model.
    """
    fs = free_space_db(d, carrier_hz)
    return np.where(mean_db >= fs, np.maximum(total_db, fs), total_db)


def pathloss(table: PathlossTable, geometry, los: LosState, band_cfg: BandConfig,
             environment: Environment | str, rng: np.random.Generator | None = None,
             *, shadow_db: float | None = None, floor_free_space: bool = True,
             bs_height: float = 25.0, ms_height: float = 1.5) -> float:
    """Total pathloss of one link in dB (NO_LINK when unavailable).

    Includes the environment-shadowing draw (from ``rng`` unless ``shadow_db``
    pins it) and the body-shadowing value carried by ``los``.  With
    ``floor_free_space`` a lucky shadowing draw cannot beat vacuum
    propagation (see ``apply_free_space_floor``).
    """
    if geometry.distance <= 0:
        raise ValueError("distance must be positive")
    env = Environment(environment)
    scen = np.array([SCENARIO_CODE[geometry.scenario]], dtype=np.int8)
    state = np.array([(_LOS, _BLOS, _NLOS)[list(LosClass).index(los.state)]], dtype=np.int8)
    d = np.array([geometry.distance])
    n_w = np.array([float(geometry.n_w)])
    d_in = np.array([float(geometry.d_in)])
    mean = pathloss_mean_db(table, band_cfg, env, scen, state, d, n_w, d_in,
                            bs_height=bs_height, ms_height=ms_height)
    if math.isinf(mean[0]):
        return NO_LINK
    if shadow_db is None:
        sigma = shadow_sigma_db(table, band_cfg, env, scen, state, d,
                                bs_height=bs_height, ms_height=ms_height)
        shadow_db = float(sigma[0]) * (rng.standard_normal() if rng is not None else 0.0)
    total = float(mean[0]) + shadow_db + los.body_shadow_db
    if floor_free_space:
        total = float(apply_free_space_floor(np.array([total]), mean, d,
                                             band_cfg.carrier_hz)[0])
    return total


# ---------------------------------------------------------------------------
# Noise and capacity
# ---------------------------------------------------------------------------

def noise_power_dbm(bandwidth_hz: float, noise_figure_db: float = 6.0) -> float:
    """Thermal noise power: kT density + bandwidth + receiver noise figure."""
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth must be positive")
    return NOISE_PSD_DBM_HZ + 10.0 * math.log10(bandwidth_hz) + noise_figure_db


def dbm_to_mw(dbm):
    return np.power(10.0, np.asarray(dbm, dtype=float) / 10.0)


def link_capacity_bps(signal_dbm: float, interference_mw: float, noise_dbm: float,
                      bandwidth_hz: float) -> float:
    """Shannon rate with interference treated as noise."""
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth must be positive")
    if interference_mw < 0:
        raise ValueError("interference power cannot be negative")
    if math.isinf(signal_dbm) and signal_dbm < 0:
        return 0.0
    sinr = float(dbm_to_mw(signal_dbm)) / (float(dbm_to_mw(noise_dbm)) + interference_mw)
    return bandwidth_hz * math.log2(1.0 + sinr)


def band_with(band_cfg: BandConfig, **changes) -> BandConfig:
    """BandConfig with selected fields replaced (e.g. in-band splits)."""
    return replace(band_cfg, **changes)
