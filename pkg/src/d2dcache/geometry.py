"""Virtual cell geometry: building grid, node placement, link classification.

The cell is a square of side ``cell_side`` containing a Manhattan grid of
square buildings.  Two environment kinds are supported:

* ``office``  -- 50 m buildings, 10 m streets, buildings partitioned into
  6.2 m offices by light interior walls;
* ``hotspot`` -- 100 m buildings, 20 m streets, no interior partitions
  (factory floors / airport halls).

The building block is centered in the cell with equal outer margins.  Every
point classifies as indoor or outdoor; links classify into one of six
propagation scenarios from the endpoint classes alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .rng import substream

OUTDOOR = -1  # sentinel for building/office indices


class Environment(str, Enum):
    OFFICE = "office"
    HOTSPOT = "hotspot"


class PlacementMode(str, Enum):
    GRID = "grid"
    UNIFORM = "uniform"


class Scenario(str, Enum):
    """Propagation scenario of a link, named after the WINNER II models."""

    INDOOR_A1 = "a1"            # both devices indoor, same building
    INDOOR_TO_OUTDOOR_A2 = "a2" # indoor<->indoor across different buildings
    OUTDOOR_B1 = "b1"           # both devices outdoor
    OUTDOOR_TO_INDOOR_B4 = "b4" # one device indoor, one outdoor
    BS_OUTDOOR_C2 = "c2"        # base station to outdoor device
    BS_INDOOR_C4 = "c4"         # base station to indoor device


@dataclass(frozen=True)
class CellLayout:
    environment: Environment
    cell_side: float
    building_side: float
    street_width: float
    office_side: float          # partition pitch; unused for hotspot
    bs_position: tuple[float, float]
    bs_height: float = 25.0
    ms_height: float = 1.5
    buildings_per_side: int = field(default=0)
    margin: float = field(default=0.0)

    @property
    def n_buildings(self) -> int:
        return self.buildings_per_side ** 2

    @property
    def pitch(self) -> float:
        return self.building_side + self.street_width

    @property
    def offices_per_side(self) -> int:
        if self.environment is not Environment.OFFICE or self.building_side <= 0:
            return 0
        return max(1, int(math.floor(self.building_side / self.office_side)))

    def building_origin(self, index: int) -> tuple[float, float]:
        k = self.buildings_per_side
        i, j = index % k, index // k
        return (self.margin + i * self.pitch, self.margin + j * self.pitch)

    def locate(self, xy: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Classify points (N,2) -> (indoor, building_index, office_col, office_row).

        Outdoor points get ``OUTDOOR`` sentinels; hotspot indoor points get
        office sentinels too since hotspot buildings have no partitions.
        """
        xy = np.atleast_2d(np.asarray(xy, dtype=float))
        n = xy.shape[0]
        indoor = np.zeros(n, dtype=bool)
        bld = np.full(n, OUTDOOR, dtype=np.int64)
        ocol = np.full(n, OUTDOOR, dtype=np.int64)
        orow = np.full(n, OUTDOOR, dtype=np.int64)
        k = self.buildings_per_side
        if k == 0:
            return indoor, bld, ocol, orow
        rel = xy - self.margin
        cell_ij = np.floor(rel / self.pitch).astype(np.int64)
        in_grid = (cell_ij >= 0).all(axis=1) & (cell_ij < k).all(axis=1)
        # offset within the building pitch; indoor iff inside the building square
        off = rel - cell_ij * self.pitch
        inside = in_grid & (off <= self.building_side).all(axis=1) & (off >= 0).all(axis=1)
        indoor[inside] = True
        bld[inside] = cell_ij[inside, 1] * k + cell_ij[inside, 0]
        if self.environment is Environment.OFFICE:
            n_off = self.offices_per_side
            # interior walls at multiples of office_side; the last office
            # absorbs the sub-pitch remainder of the building side
            oc = np.minimum(np.floor(off[inside] / self.office_side).astype(np.int64), n_off - 1)
            ocol[inside] = oc[:, 0]
            orow[inside] = oc[:, 1]
        return indoor, bld, ocol, orow


def build_layout(environment: Environment | str, cell_side: float = 600.0,
                 *, bs_height: float = 25.0, ms_height: float = 1.5) -> CellLayout:
    """Build the cell layout with environment-default building dimensions.

    The building count per side is ``floor(cell_side / (building_side +
    street_width))``; degenerate small cells yield zero buildings and an
    all-outdoor cell.
    """
    if cell_side <= 0:
        raise ValueError("cell_side must be positive")
    env = Environment(environment)
    if env is Environment.OFFICE:
        building_side, street_width, office_side = 50.0, 10.0, 6.2
    else:
        building_side, street_width, office_side = 100.0, 20.0, 0.0
    pitch = building_side + street_width
    k = int(math.floor(cell_side / pitch))
    span = k * building_side + max(0, k - 1) * street_width if k > 0 else 0.0
    margin = (cell_side - span) / 2.0 if k > 0 else 0.0
    return CellLayout(
        environment=env,
        cell_side=float(cell_side),
        building_side=building_side,
        street_width=street_width,
        office_side=office_side,
        bs_position=(cell_side / 2.0, cell_side / 2.0),
        bs_height=bs_height,
        ms_height=ms_height,
        buildings_per_side=k,
        margin=margin,
    )


@dataclass(frozen=True)
class NodePlacement:
    positions: np.ndarray        # (n, 2) meters
    indoor: np.ndarray           # (n,) bool
    building_index: np.ndarray   # (n,) int, OUTDOOR sentinel
    office_col: np.ndarray       # (n,) int, OUTDOOR sentinel
    office_row: np.ndarray       # (n,) int, OUTDOOR sentinel
    mode: PlacementMode
    seed: int

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def office_index(self) -> np.ndarray:
        k = max(1, int(self.office_col.max(initial=0)) + 1)
        flat = self.office_row * k + self.office_col
        return np.where(self.office_col >= 0, flat, OUTDOOR)


def place_nodes(layout: CellLayout, n: int, mode: PlacementMode | str = PlacementMode.UNIFORM,
                seed: int = 0) -> NodePlacement:
    """Place ``n`` devices in the cell.

    Grid mode builds a sqrt(n) x sqrt(n) lattice with pitch cell_side/sqrt(n)
    (n must be a perfect square); uniform mode draws i.i.d. positions from
    the stream identified by ``seed``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    mode = PlacementMode(mode)
    if mode is PlacementMode.GRID:
        root = math.isqrt(n)
        if root * root != n:
            raise ValueError(f"grid placement needs a perfect-square n, got {n}")
        pitch = layout.cell_side / root
        coords = (np.arange(root) + 0.5) * pitch
        xx, yy = np.meshgrid(coords, coords)
        pos = np.column_stack([xx.ravel(), yy.ravel()])
    else:
        rng = substream(seed, 0x9_0DE)
        pos = rng.uniform(0.0, layout.cell_side, size=(n, 2))
    indoor, bld, ocol, orow = layout.locate(pos)
    return NodePlacement(positions=pos, indoor=indoor, building_index=bld,
                         office_col=ocol, office_row=orow, mode=mode, seed=seed)


@dataclass(frozen=True)
class LinkGeometry:
    distance: float
    scenario: Scenario
    n_w: int = 0        # interior light walls crossed (office A1 links only)
    d_in: float = 0.0   # indoor depth at the device end (C4 links only)


def classify_d2d(layout: CellLayout, a_xy, b_xy) -> LinkGeometry:
    """Classify a device-to-device link from its endpoint positions.

    Symmetric in the endpoints.  Scenario table:

    * both indoor, same building  -> A1 (n_w = interior partitions crossed)
    * both indoor, different buildings -> A2 on the total distance (the
      four-scenario model has no two-shell case; A2 is the conservative fit)
    * exactly one endpoint indoor -> B4
    * both outdoor -> B1
    """
    a = np.asarray(a_xy, dtype=float)
    b = np.asarray(b_xy, dtype=float)
    d = float(np.linalg.norm(a - b))
    ind, bld, ocol, orow = layout.locate(np.vstack([a, b]))
    if ind[0] and ind[1]:
        if bld[0] == bld[1]:
            n_w = 0
            if layout.environment is Environment.OFFICE:
                n_w = int(abs(ocol[0] - ocol[1]) + abs(orow[0] - orow[1]))
            return LinkGeometry(d, Scenario.INDOOR_A1, n_w=n_w)
        return LinkGeometry(d, Scenario.INDOOR_TO_OUTDOOR_A2)
    if ind[0] != ind[1]:
        return LinkGeometry(d, Scenario.OUTDOOR_TO_INDOOR_B4)
    return LinkGeometry(d, Scenario.OUTDOOR_B1)


def classify_bs(layout: CellLayout, u_xy) -> LinkGeometry:
    """Classify a base-station-to-device link (C2 outdoor / C4 indoor)."""
    u = np.asarray(u_xy, dtype=float)
    bs = np.asarray(layout.bs_position, dtype=float)
    d = float(np.linalg.norm(u - bs))
    ind, bld, _, _ = layout.locate(u[None, :])
    if not ind[0]:
        return LinkGeometry(d, Scenario.BS_OUTDOOR_C2)
    d_in = _indoor_depth(layout, bs, u, int(bld[0]))
    return LinkGeometry(d, Scenario.BS_INDOOR_C4, d_in=d_in)


def classify_link(layout: CellLayout, a_xy, b_xy, *, a_is_bs: bool = False,
                  b_is_bs: bool = False) -> LinkGeometry:
    """Classify any link; endpoint kind distinguishes device vs base station."""
    if a_is_bs and b_is_bs:
        raise ValueError("a link needs at least one device endpoint")
    if a_is_bs:
        return classify_bs(layout, b_xy)
    if b_is_bs:
        return classify_bs(layout, a_xy)
    return classify_d2d(layout, a_xy, b_xy)


def _indoor_depth(layout: CellLayout, outside_xy: np.ndarray, inside_xy: np.ndarray,
                  building: int) -> float:
    """Length of the segment portion inside the device's own building.

    Standard slab entry test on the building square; the outdoor endpoint is
    outside the box, the device inside, so the segment enters exactly once.
    """
    x0, y0 = layout.building_origin(building)
    lo = np.array([x0, y0])
    hi = lo + layout.building_side
    direction = inside_xy - outside_xy
    t_entry = 0.0
    for ax in range(2):
        if direction[ax] > 0:
            t = (lo[ax] - outside_xy[ax]) / direction[ax]
        elif direction[ax] < 0:
            t = (hi[ax] - outside_xy[ax]) / direction[ax]
        else:
            continue
        t_entry = max(t_entry, min(max(t, 0.0), 1.0))
    return float((1.0 - t_entry) * np.linalg.norm(direction))


def classify_d2d_arrays(layout: CellLayout, placement: NodePlacement,
                        a_idx: np.ndarray, b_idx: np.ndarray
                        ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized D2D classification for node-index arrays.

    Returns (distance, scenario_code, n_w) where scenario codes index into
    ``D2D_SCENARIO_ORDER``.
    """
    pos = placement.positions
    d = np.linalg.norm(pos[a_idx] - pos[b_idx], axis=1)
    ind_a, ind_b = placement.indoor[a_idx], placement.indoor[b_idx]
    same_bld = placement.building_index[a_idx] == placement.building_index[b_idx]
    scen = np.full(a_idx.shape, _B1, dtype=np.int8)
    scen[ind_a & ind_b & same_bld] = _A1
    scen[ind_a & ind_b & ~same_bld] = _A2
    scen[ind_a != ind_b] = _B4
    n_w = np.zeros(a_idx.shape, dtype=np.int64)
    if layout.environment is Environment.OFFICE:
        a1 = scen == _A1
        n_w[a1] = (np.abs(placement.office_col[a_idx][a1] - placement.office_col[b_idx][a1])
                   + np.abs(placement.office_row[a_idx][a1] - placement.office_row[b_idx][a1]))
    return d, scen, n_w


def classify_bs_arrays(layout: CellLayout, placement: NodePlacement
                       ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized BS-link classification for every node: (distance, scenario, d_in)."""
    pos = placement.positions
    bs = np.asarray(layout.bs_position)
    d = np.linalg.norm(pos - bs, axis=1)
    scen = np.where(placement.indoor, _C4, _C2).astype(np.int8)
    d_in = np.zeros(placement.n)
    idx = np.nonzero(placement.indoor)[0]
    for i in idx:
        d_in[i] = _indoor_depth(layout, bs, pos[i], int(placement.building_index[i]))
    return d, scen, d_in


# scenario codes shared with the channel kernels
_A1, _A2, _B1, _B4, _C2, _C4 = range(6)
D2D_SCENARIO_ORDER = (Scenario.INDOOR_A1, Scenario.INDOOR_TO_OUTDOOR_A2,
                      Scenario.OUTDOOR_B1, Scenario.OUTDOOR_TO_INDOOR_B4,
                      Scenario.BS_OUTDOOR_C2, Scenario.BS_INDOOR_C4)
SCENARIO_CODE = {s: i for i, s in enumerate(D2D_SCENARIO_ORDER)}
