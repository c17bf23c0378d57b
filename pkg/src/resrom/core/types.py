"""Domain types shared by every module.

Conventions are metric throughout: pressure in bar, lengths in m, volumes
in m3, rates in m3/day, time in days. Grids are row-major (nx, ny, nz)
with z increasing downward (layer 0 is the reservoir top). All types are
immutable after construction and safe to share across threads.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InvariantError

# Tolerance on saturation bounds and on s_o + s_w <= 1.
SAT_TOL = 1e-9

# Oil-rate shut-in threshold: 3 stb/day converted once to m3/day
# (1 stb = 0.158987 m3).
STOP_OIL_RATE_M3_PER_DAY = 0.477


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GridSpec:
    """Structured-grid geometry of one development unit (1/4 element)."""

    nx: int
    ny: int
    nz: int
    dx: float  # m
    dy: float  # m
    dz: float  # m
    depth_top: float  # m, depth of the reservoir top

    def __post_init__(self):
        if min(self.nx, self.ny, self.nz) < 1:
            raise InvariantError("cell counts must be >= 1")
        if min(self.dx, self.dy, self.dz) <= 0:
            raise InvariantError("cell sizes must be > 0")
        # Two stride-2 reduction stages must invert exactly.
        if self.nx % 4 or self.ny % 4 or self.nz % 2:
            raise InvariantError(
                f"grid ({self.nx},{self.ny},{self.nz}) must have nx,ny "
                "divisible by 4 and nz divisible by 2"
            )

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def cell_volume(self) -> float:
        return self.dx * self.dy * self.dz

    def cell_center_depths(self) -> np.ndarray:
        """Depth of each layer's cell centers, shape (nz,)."""
        return self.depth_top + (np.arange(self.nz) + 0.5) * self.dz


@dataclass(frozen=True)
class ReservoirState:
    """Pressure and phase saturations on the grid at one timestep.

    Gas saturation is implicit (1 - s_oil - s_wat) and obtained through
    :func:`gas_saturation` when needed.
    """

    pressure: np.ndarray  # (nx, ny, nz), bar
    s_oil: np.ndarray  # (nx, ny, nz), fraction
    s_wat: np.ndarray  # (nx, ny, nz), fraction
    time_index: int = 0

    def __post_init__(self):
        p, so, sw = self.pressure, self.s_oil, self.s_wat
        if not (p.shape == so.shape == sw.shape) or p.ndim != 3:
            raise InvariantError("state fields must share one 3D shape")
        if not np.all(np.isfinite(p)) or np.any(p <= 0):
            raise InvariantError("pressure must be finite and > 0 everywhere")
        for name, s in (("s_oil", so), ("s_wat", sw)):
            if np.any(s < -SAT_TOL) or np.any(s > 1 + SAT_TOL):
                raise InvariantError(f"{name} outside [0, 1]")
        if np.any(so + sw > 1 + SAT_TOL):
            raise InvariantError("s_oil + s_wat exceeds 1")
        object.__setattr__(self, "pressure", _freeze(p))
        object.__setattr__(self, "s_oil", _freeze(so))
        object.__setattr__(self, "s_wat", _freeze(sw))

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.pressure.shape

    def as_tensor(self, dtype=np.float64) -> np.ndarray:
        """Stack the three fields into a (3, nx, ny, nz) tensor."""
        return np.stack([self.pressure, self.s_oil, self.s_wat]).astype(
            dtype, copy=False
        )

    @classmethod
    def from_tensor(cls, t: np.ndarray, time_index: int = 0) -> "ReservoirState":
        if t.ndim != 4 or t.shape[0] != 3:
            raise InvariantError("expected a (3, nx, ny, nz) tensor")
        return cls(
            pressure=np.array(t[0], dtype=np.float64),
            s_oil=np.array(t[1], dtype=np.float64),
            s_wat=np.array(t[2], dtype=np.float64),
            time_index=time_index,
        )


def gas_saturation(state: ReservoirState) -> np.ndarray:
    """Implicit gas saturation 1 - s_oil - s_wat, clamped at 0 from below.

    Clamping only absorbs numerical noise; the state invariant already
    bounds the negative excursion by SAT_TOL.
    """
    sg = 1.0 - state.s_oil - state.s_wat
    return np.maximum(sg, 0.0)


@dataclass(frozen=True)
class Control:
    """Well controls applied over one timestep."""

    bhp_prod: float  # bar, producer bottomhole pressure
    inj_rate_wat: float = 0.0  # m3/day at reference conditions; 0 = no injector

    def __post_init__(self):
        if not self.bhp_prod > 0:
            raise InvariantError("bhp_prod must be > 0")
        if self.inj_rate_wat < 0:
            raise InvariantError("inj_rate_wat must be >= 0")

    def as_vector(self) -> np.ndarray:
        return np.array([self.bhp_prod, self.inj_rate_wat], dtype=np.float64)


@dataclass(frozen=True)
class RateRecord:
    """Surface-condition production rates over one timestep, m3/day."""

    oil: float
    water: float
    gas: float

    def __post_init__(self):
        if min(self.oil, self.water, self.gas) < 0:
            raise InvariantError("production rates must be >= 0")

    def as_vector(self) -> np.ndarray:
        return np.array([self.oil, self.water, self.gas], dtype=np.float64)


@dataclass(frozen=True)
class LayoutBlock:
    """One named slice of the metadata vector."""

    name: str
    offset: int
    length: int
    kind: str  # "scalar" | "onehot" | "pca"

    @property
    def slice(self) -> slice:
        return slice(self.offset, self.offset + self.length)


@dataclass(frozen=True)
class MetadataLayout:
    """Ordered slice map covering the full metadata vector.

    k_perm / k_tab are the retained PCA component counts for the per-layer
    permeability block and the relative-permeability table block.
    """

    blocks: tuple[LayoutBlock, ...]
    k_perm: int
    k_tab: int

    def __post_init__(self):
        off = 0
        for b in self.blocks:
            if b.offset != off or b.length < 1:
                raise InvariantError(
                    f"layout block {b.name!r} is not contiguous at {off}"
                )
            off += b.length

    @property
    def dim(self) -> int:
        return sum(b.length for b in self.blocks)

    def block(self, name: str) -> LayoutBlock:
        for b in self.blocks:
            if b.name == name:
                return b
        raise KeyError(name)

    def names(self) -> list[str]:
        return [b.name for b in self.blocks]


@dataclass(frozen=True)
class Metadata:
    """Fixed-dimensionality vector describing one development unit.

    codec, when attached, holds the fitted compressors needed to invert
    the PCA blocks; it is dataset-level data and is not serialized per
    scenario.
    """

    vector: np.ndarray
    layout: MetadataLayout
    codec: Optional[object] = None

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=np.float64)
        if v.ndim != 1 or v.size != self.layout.dim:
            raise InvariantError(
                f"metadata vector length {v.size} != layout total {self.layout.dim}"
            )
        if not np.all(np.isfinite(v)):
            raise InvariantError("metadata vector must be finite")
        for b in self.blocks_of_kind("onehot"):
            block = v[b.slice]
            if not (
                np.all((np.abs(block) < 1e-12) | (np.abs(block - 1) < 1e-12))
                and abs(block.sum() - 1) < 1e-9
            ):
                raise InvariantError(f"one-hot block {b.name!r} malformed: {block}")
        object.__setattr__(self, "vector", _freeze(v))

    def blocks_of_kind(self, kind: str):
        return [b for b in self.layout.blocks if b.kind == kind]

    def get(self, name: str) -> np.ndarray:
        return self.vector[self.layout.block(name).slice]

    def scalar(self, name: str) -> float:
        b = self.layout.block(name)
        if b.length != 1:
            raise KeyError(f"{name} is not a scalar block")
        return float(self.vector[b.offset])

    @property
    def dim(self) -> int:
        return self.vector.size


@dataclass(frozen=True)
class ScenarioTags:
    """Group labels used in the grouped error analysis."""

    scheme: str  # "staggered" | "direct" | "no_injection"
    control_form: str  # "constant" | "exponential" | "sharp"
    orientation: str  # "vertical" | "horizontal"

    SCHEMES = ("staggered", "direct", "no_injection")
    FORMS = ("constant", "exponential", "sharp")
    ORIENTATIONS = ("vertical", "horizontal")

    def __post_init__(self):
        if self.scheme not in self.SCHEMES:
            raise InvariantError(f"unknown scheme {self.scheme!r}")
        if self.control_form not in self.FORMS:
            raise InvariantError(f"unknown control form {self.control_form!r}")
        if self.orientation not in self.ORIENTATIONS:
            raise InvariantError(f"unknown orientation {self.orientation!r}")


@dataclass(frozen=True)
class Scenario:
    """One development-unit episode: inputs, and (once simulated) outputs.

    states[t] is the reservoir state after t steps; rates[t] covers the
    interval between states[t] and states[t+1], so a simulated scenario
    holds T+1 states and T rate records.
    """

    metadata: Metadata
    controls: tuple[Control, ...]
    dt_days: float
    tags: ScenarioTags
    states: Optional[tuple[ReservoirState, ...]] = None
    rates: Optional[tuple[RateRecord, ...]] = None

    def __post_init__(self):
        if self.dt_days <= 0:
            raise InvariantError("dt_days must be > 0")
        if len(self.controls) < 1:
            raise InvariantError("scenario needs at least one control step")
        object.__setattr__(self, "controls", tuple(self.controls))
        if self.states is not None:
            object.__setattr__(self, "states", tuple(self.states))
            if len(self.states) > len(self.controls) + 1:
                raise InvariantError("more states than controls + 1")
        if self.rates is not None:
            object.__setattr__(self, "rates", tuple(self.rates))
            if self.states is None or len(self.rates) != len(self.states) - 1:
                raise InvariantError("rates must pair consecutive states")

    @property
    def horizon(self) -> int:
        """Number of simulated transitions (0 when not yet simulated)."""
        return 0 if self.states is None else len(self.states) - 1

    def with_solution(
        self,
        states: Sequence[ReservoirState],
        rates: Sequence[RateRecord],
    ) -> "Scenario":
        return Scenario(
            metadata=self.metadata,
            controls=self.controls,
            dt_days=self.dt_days,
            tags=self.tags,
            states=tuple(states),
            rates=tuple(rates),
        )

    def states_tensor(self, dtype=np.float32) -> np.ndarray:
        """All states as a (T+1, 3, nx, ny, nz) tensor."""
        if self.states is None:
            raise InvariantError("scenario has no simulated states")
        return np.stack([s.as_tensor(dtype) for s in self.states])

    def controls_matrix(self) -> np.ndarray:
        return np.stack([c.as_vector() for c in self.controls])

    def rates_matrix(self) -> np.ndarray:
        if self.rates is None:
            raise InvariantError("scenario has no simulated rates")
        return np.stack([r.as_vector() for r in self.rates])
