"""Declarative experiment configuration.

A config file is a JSON object whose keys match the ``ExperimentConfig``
fields; unknown keys are validation errors, missing keys take the defaults of
the selected profile.  ``parse(serialize(cfg)) == cfg`` holds exactly.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

SCHEMES = ("d2d", "unicast", "coded", "harmonic")
ENVIRONMENTS = ("office", "hotspot")
BAND_NAMES = ("mmwave38", "ism2_45", "cellular2_1")

DEFAULT_C_R0_GRID = [0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0]
DEFAULT_P_O_GRID = [0.02, 0.05, 0.1, 0.2, 0.3, 0.5]


@dataclass
class ExperimentConfig:
    environment: str = "office"
    cell_side_m: float = 600.0
    n: int = 10000
    m: int = 300
    cache_size: int = 20              # files per device (M)
    gamma_r: float = 0.4
    placement: str = "uniform"        # "uniform" | "grid"
    bands: list = field(default_factory=lambda: list(BAND_NAMES))
    schemes: list = field(default_factory=lambda: ["d2d"])
    cluster_side_grid: list = field(default_factory=lambda: [100.0])
    cluster_q_grid: list | None = None      # alternative: sides = cell_side / Q
    n_grid: list | None = None              # density sweep
    m_grid: list | None = None              # library-size sweep
    cache_size_grid: list | None = None     # cache-size sweep
    band_split_grid: list | None = None     # in-band B_d2d/B_BS ratios
    c_r0_grid: list = field(default_factory=lambda: list(DEFAULT_C_R0_GRID))
    p_o_grid: list = field(default_factory=lambda: list(DEFAULT_P_O_GRID))
    video_length_bits: float = 2.7e9
    harmonic_blocks: int = 540
    harmonic_delay_bits: float | None = None  # overrides blocks when set
    video_rate_bps: float = 2e6
    playback_threshold_bps: float = 100e3
    self_cache_rate_bps: float = 2e6
    realizations: int = 20
    master_seed: int = 12345
    reuse_k_d2d: int = 4
    rounds_factor: int = 10
    exponent_mode: str = "paper"
    floor_free_space: bool = True
    bs_budget: int | None = None
    channel_overrides: dict = field(default_factory=dict)
    out_dir: str | None = None
    per_user_dump: bool = False

    def cluster_sides(self) -> list[float]:
        if self.cluster_q_grid:
            return [self.cell_side_m / q for q in self.cluster_q_grid]
        return list(self.cluster_side_grid)


PROFILES = {
    "desk": {"n": 2000, "realizations": 20},
    "paper": {"n": 10000, "realizations": 20},
}

_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def make_config(values: dict | None = None, profile: str | None = None) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if profile is not None:
        if profile not in PROFILES:
            raise ValueError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}")
        for k, v in PROFILES[profile].items():
            setattr(cfg, k, v)
    for k, v in (values or {}).items():
        if k not in _FIELDS:
            raise ValueError(f"unknown config field {k!r}")
        setattr(cfg, k, v)
    return cfg


def serialize(cfg: ExperimentConfig) -> str:
    return json.dumps(dataclasses.asdict(cfg), indent=2, sort_keys=False) + "\n"


def parse(text: str) -> ExperimentConfig:
    values = json.loads(text)
    if not isinstance(values, dict):
        raise ValueError("config file must hold a JSON object")
    return make_config(values)


def load_config(path: str | Path, profile: str | None = None) -> ExperimentConfig:
    values = json.loads(Path(path).read_text())
    return make_config(values, profile=profile)


def validate(cfg: ExperimentConfig) -> list[str]:
    """Every constraint violation as one message; empty list means valid."""
    errors: list[str] = []

    def bad(fieldname: str, msg: str) -> None:
        errors.append(f"{fieldname}: {msg}")

    if cfg.environment not in ENVIRONMENTS:
        bad("environment", f"must be one of {ENVIRONMENTS}")
    if cfg.cell_side_m <= 0:
        bad("cell_side_m", "must be positive")
    if cfg.n < 1:
        bad("n", "must be >= 1")
    if cfg.m < 1:
        bad("m", "must be >= 1")
    if not 1 <= cfg.cache_size <= cfg.m:
        bad("cache_size", "must lie in [1, m]")
    if not 0.0 <= cfg.gamma_r < 1.0:
        bad("gamma_r", "must lie in [0, 1)")
    if cfg.placement not in ("uniform", "grid"):
        bad("placement", "must be 'uniform' or 'grid'")
    for b in cfg.bands:
        if b not in BAND_NAMES:
            bad("bands", f"unknown band {b!r}")
    if not cfg.schemes:
        bad("schemes", "at least one scheme required")
    for s in cfg.schemes:
        if s not in SCHEMES:
            bad("schemes", f"unknown scheme {s!r}")
    sides = cfg.cluster_sides() if (cfg.cluster_side_grid or cfg.cluster_q_grid) else []
    if not sides:
        bad("cluster_side_grid", "must be non-empty")
    for s in sides:
        if not 0 < s <= cfg.cell_side_m:
            bad("cluster_side_grid", f"cluster side {s} outside (0, cell_side]")
    if not cfg.c_r0_grid or any(c <= 0 for c in cfg.c_r0_grid):
        bad("c_r0_grid", "must be non-empty and positive")
    if not cfg.p_o_grid or any(not 0 < p < 1 for p in cfg.p_o_grid):
        bad("p_o_grid", "targets must lie in (0, 1)")
    if cfg.band_split_grid is not None and any(r <= 0 for r in cfg.band_split_grid):
        bad("band_split_grid", "ratios must be positive")
    if cfg.video_length_bits <= 0:
        bad("video_length_bits", "must be positive")
    if cfg.harmonic_delay_bits is not None:
        if not 0 < cfg.harmonic_delay_bits <= cfg.video_length_bits:
            bad("harmonic_delay_bits", "must lie in (0, video_length_bits]")
    elif cfg.harmonic_blocks < 1:
        bad("harmonic_blocks", "must be >= 1")
    if cfg.video_rate_bps <= 0:
        bad("video_rate_bps", "must be positive")
    if cfg.playback_threshold_bps <= 0:
        bad("playback_threshold_bps", "must be positive")
    if cfg.realizations < 1:
        bad("realizations", "must be >= 1")
    if cfg.rounds_factor < 1:
        bad("rounds_factor", "must be >= 1")
    root = int(cfg.reuse_k_d2d ** 0.5)
    if root * root != cfg.reuse_k_d2d:
        bad("reuse_k_d2d", "must be a perfect square")
    if cfg.exponent_mode not in ("paper", "neighbor-count"):
        bad("exponent_mode", "must be 'paper' or 'neighbor-count'")
    for g_name in ("n_grid", "m_grid", "cache_size_grid"):
        g = getattr(cfg, g_name)
        if g is not None and (not g or any(v < 1 for v in g)):
            bad(g_name, "must be non-empty with values >= 1")
    return errors
