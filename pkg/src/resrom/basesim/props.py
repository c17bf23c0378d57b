"""Rock/fluid properties, Corey curves, wells and grid geometry.

SimGrid is the simulator's own geometry record: unlike the dataset
GridSpec it carries no divisibility constraints, so tests can run
single-cell or single-column grids.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core.errors import InvariantError

# Unit conversion constants (mD, m, bar, cP, day).
MILLIDARCY_M2 = 9.869233e-16
DARCY_CONST = MILLIDARCY_M2 * 1e8 * 86400.0  # ~8.527e-3 m3/day per mD*m*bar/cP
GRAVITY_BAR = 9.80665e-5  # bar per (kg/m3 * m)
WELLBORE_RADIUS = 0.1  # m


@dataclass(frozen=True)
class SimGrid:
    """Structured grid geometry used by the simulator."""

    nx: int
    ny: int
    nz: int
    dx: float
    dy: float
    dz: float
    depth_top: float

    def __post_init__(self):
        if min(self.nx, self.ny, self.nz) < 1:
            raise InvariantError("cell counts must be >= 1")
        if min(self.dx, self.dy, self.dz) <= 0:
            raise InvariantError("cell sizes must be > 0")

    @property
    def shape(self):
        return (self.nx, self.ny, self.nz)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def cell_volume(self) -> float:
        return self.dx * self.dy * self.dz

    def layer_depths(self) -> np.ndarray:
        return self.depth_top + (np.arange(self.nz) + 0.5) * self.dz


@dataclass(frozen=True)
class CoreyParams:
    """Corey power-law relative permeability parameters."""

    s_wc: float  # connate water saturation
    s_or: float  # residual oil saturation
    n_w: float
    n_o: float
    k_rw_max: float
    k_ro_max: float

    def __post_init__(self):
        if self.s_wc < 0 or self.s_or < 0 or self.s_wc + self.s_or >= 1:
            raise InvariantError("require 0 <= S_wc, S_or and S_wc + S_or < 1")
        if not (1 <= self.n_w <= 6 and 1 <= self.n_o <= 6):
            raise InvariantError("Corey exponents must lie in [1, 6]")
        if self.k_rw_max <= 0 or self.k_ro_max <= 0:
            raise InvariantError("endpoint permeabilities must be > 0")

    def effective_sw(self, s_w):
        span = 1.0 - self.s_wc - self.s_or
        return np.clip((np.asarray(s_w) - self.s_wc) / span, 0.0, 1.0)

    def krw(self, s_w):
        return self.k_rw_max * self.effective_sw(s_w) ** self.n_w

    def kro(self, s_w):
        return self.k_ro_max * (1.0 - self.effective_sw(s_w)) ** self.n_o


@dataclass(frozen=True)
class RockFluidProps:
    """Rock and fluid constants of one development unit."""

    phi_ref: float
    perm_layers: np.ndarray  # (nz,), mD
    c_r: float  # 1/bar
    c_o: float
    c_w: float
    mu_o: float  # cP
    mu_w: float
    b_o_ref: float  # rm3/sm3 at p_ref
    b_w_ref: float
    b_g_ref: float
    gamma: float  # sm3/sm3
    rho_o: float  # kg/m3 (gravity term)
    rho_w: float
    corey: CoreyParams

    def __post_init__(self):
        perm = np.asarray(self.perm_layers, dtype=np.float64)
        object.__setattr__(self, "perm_layers", perm)
        scalars = (
            self.phi_ref,
            self.c_r,
            self.c_o,
            self.c_w,
            self.mu_o,
            self.mu_w,
            self.b_o_ref,
            self.b_w_ref,
            self.b_g_ref,
            self.gamma,
            self.rho_o,
            self.rho_w,
        )
        if min(scalars) <= 0 or np.any(perm <= 0):
            raise InvariantError("rock/fluid properties must all be positive")
        # The reference-volume accumulation uses exp((c_r - c_f) dp); the
        # effective storage must stay positive.
        if self.c_r <= max(self.c_o, self.c_w):
            raise InvariantError(
                "c_r must exceed fluid compressibilities (positive total "
                "compressibility under the reference-volume convention)"
            )


@dataclass(frozen=True)
class WellSpec:
    """One well: a perforated cell interval at a fixed grid location.

    Vertical wells sit at (col, row) and perforate layers
    [perf_start, perf_start + perf_len); horizontal wells run along x at
    (row, layer) and perforate columns [perf_start, perf_start + perf_len).
    """

    kind: str  # "producer" | "injector"
    orientation: str  # "vertical" | "horizontal"
    col: int  # x index (vertical) / ignored (horizontal)
    row: int  # y index
    layer: int  # z index (horizontal) / ignored (vertical)
    perf_start: int
    perf_len: int

    def __post_init__(self):
        if self.kind not in ("producer", "injector"):
            raise InvariantError(f"unknown well kind {self.kind!r}")
        if self.orientation not in ("vertical", "horizontal"):
            raise InvariantError(f"unknown orientation {self.orientation!r}")
        if self.perf_len < 1:
            raise InvariantError("perforation needs at least one cell")

    def cells(self, grid: SimGrid) -> list[tuple[int, int, int]]:
        """Perforated (i, j, k) cells; validates the interval fits."""
        if self.orientation == "vertical":
            if not (0 <= self.col < grid.nx and 0 <= self.row < grid.ny):
                raise InvariantError("well location outside grid")
            if self.perf_start < 0 or self.perf_start + self.perf_len > grid.nz:
                raise InvariantError("perforation interval outside grid")
            return [
                (self.col, self.row, k)
                for k in range(self.perf_start, self.perf_start + self.perf_len)
            ]
        if not (0 <= self.row < grid.ny and 0 <= self.layer < grid.nz):
            raise InvariantError("well location outside grid")
        if self.perf_start < 0 or self.perf_start + self.perf_len > grid.nx:
            raise InvariantError("perforation interval outside grid")
        return [
            (i, self.row, self.layer)
            for i in range(self.perf_start, self.perf_start + self.perf_len)
        ]


def validate_wells(wells, grid: SimGrid) -> None:
    producers = [w for w in wells if w.kind == "producer"]
    injectors = [w for w in wells if w.kind == "injector"]
    if len(producers) != 1:
        raise InvariantError(f"exactly one producer required, got {len(producers)}")
    if len(injectors) > 1:
        raise InvariantError("at most one injector supported")
    seen = set()
    for w in wells:
        for cell in w.cells(grid):
            if cell in seen:
                raise InvariantError(f"wells share perforated cell {cell}")
            seen.add(cell)


def peaceman_wi(grid: SimGrid, perm_md: float, orientation: str) -> float:
    """Peaceman well index of one perforated cell, m3/day per bar/cP.

    Equivalent radius 0.14 * sqrt of the squared cell sizes in the plane
    perpendicular to the well axis.
    """
    if orientation == "vertical":
        r_e = 0.14 * np.sqrt(grid.dx**2 + grid.dy**2)
        length = grid.dz
    else:
        r_e = 0.14 * np.sqrt(grid.dy**2 + grid.dz**2)
        length = grid.dx
    return DARCY_CONST * 2.0 * np.pi * perm_md * length / np.log(r_e / WELLBORE_RADIUS)
