"""Metadata vectorization: raw unit records <-> fixed-length vectors.

Scalar properties are packed directly, categorical ones as one-hot
blocks, per-layer log10 permeability and the resampled relative
permeability curves as truncated-PCA coefficient blocks. Well positions
are stored in meters (start/length of the single perforation interval)
and recovered to cell indices exactly because the generator samples them
on cell boundaries.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core.codec import MetadataCodec, PcaBlockCodec
from ..core.errors import GenerationError, InvariantError
from ..core.types import GridSpec, LayoutBlock, Metadata, MetadataLayout
from ..basesim.props import CoreyParams, RockFluidProps, SimGrid, WellSpec
from .config import GeneratorConfig

N_TAB_POINTS = 32

SCALAR_NAMES = (
    "c_r",
    "c_o",
    "c_w",
    "c_g",
    "rho_o",
    "rho_w",
    "mu_o",
    "mu_w",
    "b_o",
    "b_w",
    "b_g",
    "gamma",
    "phi_ref",
    "p_init",
    "p_sat",
    "depth_top",
    "woc_depth",
    "size_x",
    "size_y",
    "size_z",
)
PERF_NAMES = (
    "prod_perf_start",
    "prod_perf_len",
    "inj_perf_start",
    "inj_perf_len",
)
COREY_NAMES = ("s_wc", "s_or", "n_w", "n_o", "k_rw_max", "k_ro_max")
SCHEMES = ("staggered", "direct", "no_injection")
ORIENTATIONS = ("vertical", "horizontal")


@dataclass
class RawUnitRecord:
    """Sampled development-unit properties before vectorization.

    Perforation fields are cell indices; vectorization converts them to
    meters along the well axis.
    """

    c_r: float
    c_o: float
    c_w: float
    c_g: float
    rho_o: float
    rho_w: float
    mu_o: float
    mu_w: float
    b_o: float
    b_w: float
    b_g: float
    gamma: float
    phi_ref: float
    p_init: float
    p_sat: float
    depth_top: float
    woc_depth: float
    size_x: float
    size_y: float
    size_z: float
    perm_layers: np.ndarray  # (nz,), mD
    corey: CoreyParams
    scheme: str
    orientation: str
    prod_perf_start: int
    prod_perf_len: int
    inj_perf_start: int  # 0 when no injector
    inj_perf_len: int  # 0 when no injector

    def scalars(self) -> dict:
        return {name: float(getattr(self, name)) for name in SCALAR_NAMES}


def build_layout(nz: int, k_perm: int, k_tab: int) -> MetadataLayout:
    if not (1 <= k_perm <= nz):
        raise InvariantError(f"k_perm must lie in [1, nz={nz}]")
    if not (1 <= k_tab <= 2 * N_TAB_POINTS):
        raise InvariantError("k_tab out of range")
    blocks = []
    off = 0
    for name in SCALAR_NAMES:
        blocks.append(LayoutBlock(name, off, 1, "scalar"))
        off += 1
    blocks.append(LayoutBlock("scheme", off, 3, "onehot"))
    off += 3
    blocks.append(LayoutBlock("orientation", off, 2, "onehot"))
    off += 2
    for name in PERF_NAMES:
        blocks.append(LayoutBlock(name, off, 1, "scalar"))
        off += 1
    blocks.append(LayoutBlock("perm_pca", off, k_perm, "pca"))
    off += k_perm
    for name in COREY_NAMES:
        blocks.append(LayoutBlock(name, off, 1, "scalar"))
        off += 1
    blocks.append(LayoutBlock("tab_pca", off, k_tab, "pca"))
    off += k_tab
    return MetadataLayout(tuple(blocks), k_perm=k_perm, k_tab=k_tab)


def corey_curves(corey: CoreyParams, sat_grid: np.ndarray) -> np.ndarray:
    """[k_rw; k_ro] evaluated on the fixed saturation grid."""
    return np.concatenate([corey.krw(sat_grid), corey.kro(sat_grid)])


def fit_metadata_compressors(
    records: list,
    nz: int,
    k_perm: int,
    k_tab: int,
) -> MetadataCodec:
    """Fit the PCA compressors for the permeability and table blocks."""
    from ..rom.pca import truncated_components

    if len(records) < max(k_perm, k_tab) + 1:
        raise GenerationError(
            f"need at least {max(k_perm, k_tab) + 1} records to fit compressors"
        )
    layout = build_layout(nz, k_perm, k_tab)
    sat_grid = np.linspace(0.0, 1.0, N_TAB_POINTS)

    perm_mat = np.stack([np.log10(r.perm_layers) for r in records])
    perm_mean = perm_mat.mean(axis=0)
    _, perm_vt = truncated_components(perm_mat - perm_mean, k_perm)

    tab_mat = np.stack([corey_curves(r.corey, sat_grid) for r in records])
    tab_mean = tab_mat.mean(axis=0)
    _, tab_vt = truncated_components(tab_mat - tab_mean, k_tab)

    return MetadataCodec(
        layout=layout,
        perm=PcaBlockCodec(perm_mean, perm_vt),
        tab=PcaBlockCodec(tab_mean, tab_vt),
        sat_grid=sat_grid,
    )


def _axis_cell_size(record: RawUnitRecord, grid: GridSpec) -> tuple[float, float]:
    """(cell size along producer-perforation axis, vertical cell size)."""
    dz = record.size_z / grid.nz
    dx = record.size_x / grid.nx
    return dx, dz


def vectorize(
    record: RawUnitRecord,
    codec: MetadataCodec,
    grid: GridSpec,
    cfg: GeneratorConfig | None = None,
) -> Metadata:
    """Pack a raw record into a metadata vector (deterministic layout)."""
    if cfg is not None:
        _check_ranges(record, cfg)
    layout = codec.layout
    v = np.zeros(layout.dim, dtype=np.float64)
    for name, value in record.scalars().items():
        v[layout.block(name).offset] = value
    v[layout.block("scheme").slice] = np.eye(3)[SCHEMES.index(record.scheme)]
    v[layout.block("orientation").slice] = np.eye(2)[
        ORIENTATIONS.index(record.orientation)
    ]
    dx, dz = _axis_cell_size(record, grid)
    if record.orientation == "vertical":
        unit, origin = dz, record.depth_top
    else:
        unit, origin = dx, 0.0
    v[layout.block("prod_perf_start").offset] = origin + record.prod_perf_start * unit
    v[layout.block("prod_perf_len").offset] = record.prod_perf_len * unit
    v[layout.block("inj_perf_start").offset] = (
        origin + record.inj_perf_start * unit if record.inj_perf_len else 0.0
    )
    v[layout.block("inj_perf_len").offset] = record.inj_perf_len * unit
    v[layout.block("perm_pca").slice] = codec.perm.encode(
        np.log10(record.perm_layers)
    )
    for name in COREY_NAMES:
        v[layout.block(name).offset] = getattr(record.corey, name)
    v[layout.block("tab_pca").slice] = codec.tab.encode(
        corey_curves(record.corey, codec.sat_grid)
    )
    return Metadata(vector=v, layout=layout, codec=codec)


def devectorize(meta: Metadata, grid: GridSpec) -> RawUnitRecord:
    """Invert :func:`vectorize`; PCA blocks up to truncation error."""
    codec = meta.codec
    if codec is None:
        raise InvariantError("metadata has no attached codec")
    layout = meta.layout
    scalars = {name: meta.scalar(name) for name in SCALAR_NAMES}
    scheme = SCHEMES[int(np.argmax(meta.get("scheme")))]
    orientation = ORIENTATIONS[int(np.argmax(meta.get("orientation")))]
    perm_layers = 10.0 ** codec.perm.decode(meta.get("perm_pca"))
    corey = CoreyParams(**{n: meta.scalar(n) for n in COREY_NAMES})

    dz = scalars["size_z"] / grid.nz
    dx = scalars["size_x"] / grid.nx
    if orientation == "vertical":
        unit, origin = dz, scalars["depth_top"]
    else:
        unit, origin = dx, 0.0
    prod_start = int(round((meta.scalar("prod_perf_start") - origin) / unit))
    prod_len = int(round(meta.scalar("prod_perf_len") / unit))
    inj_len = int(round(meta.scalar("inj_perf_len") / unit))
    inj_start = (
        int(round((meta.scalar("inj_perf_start") - origin) / unit)) if inj_len else 0
    )
    return RawUnitRecord(
        **scalars,
        perm_layers=perm_layers,
        corey=corey,
        scheme=scheme,
        orientation=orientation,
        prod_perf_start=prod_start,
        prod_perf_len=prod_len,
        inj_perf_start=inj_start,
        inj_perf_len=inj_len,
    )


def _check_ranges(record: RawUnitRecord, cfg: GeneratorConfig) -> None:
    for name in SCALAR_NAMES:
        rng = getattr(cfg, name, None)
        if isinstance(rng, tuple) and len(rng) == 2:
            value = getattr(record, name)
            if not (rng[0] - 1e-12 <= value <= rng[1] + 1e-12):
                raise GenerationError(
                    f"record field {name}={value} outside generator range {rng}"
                )


def wells_from_record(record: RawUnitRecord, grid: GridSpec) -> list[WellSpec]:
    """Well placement per allocation scheme (quarter-unit corners).

    Vertical wells: producer at corner (0, 0); the injector sits at the
    diagonally opposite corner for staggered line drive and on the same
    row (opposite x edge) for direct line drive. Horizontal wells run
    along x in the top layer (producer) / bottom layer (injector) with
    the matching row placement.
    """
    wells = []
    if record.orientation == "vertical":
        wells.append(
            WellSpec(
                kind="producer",
                orientation="vertical",
                col=0,
                row=0,
                layer=0,
                perf_start=record.prod_perf_start,
                perf_len=record.prod_perf_len,
            )
        )
        if record.scheme != "no_injection":
            inj_row = grid.ny - 1 if record.scheme == "staggered" else 0
            wells.append(
                WellSpec(
                    kind="injector",
                    orientation="vertical",
                    col=grid.nx - 1,
                    row=inj_row,
                    layer=0,
                    perf_start=record.inj_perf_start,
                    perf_len=record.inj_perf_len,
                )
            )
    else:
        wells.append(
            WellSpec(
                kind="producer",
                orientation="horizontal",
                col=0,
                row=0,
                layer=0,
                perf_start=record.prod_perf_start,
                perf_len=record.prod_perf_len,
            )
        )
        if record.scheme != "no_injection":
            inj_row = grid.ny - 1 if record.scheme == "staggered" else 0
            wells.append(
                WellSpec(
                    kind="injector",
                    orientation="horizontal",
                    col=0,
                    row=inj_row,
                    layer=grid.nz - 1,
                    perf_start=record.inj_perf_start,
                    perf_len=record.inj_perf_len,
                )
            )
    return wells


def sim_inputs(record: RawUnitRecord, grid: GridSpec):
    """(SimGrid, RockFluidProps, wells) for the base simulator."""
    sim_grid = SimGrid(
        nx=grid.nx,
        ny=grid.ny,
        nz=grid.nz,
        dx=record.size_x / grid.nx,
        dy=record.size_y / grid.ny,
        dz=record.size_z / grid.nz,
        depth_top=record.depth_top,
    )
    props = RockFluidProps(
        phi_ref=record.phi_ref,
        perm_layers=record.perm_layers,
        c_r=record.c_r,
        c_o=record.c_o,
        c_w=record.c_w,
        mu_o=record.mu_o,
        mu_w=record.mu_w,
        b_o_ref=record.b_o,
        b_w_ref=record.b_w,
        b_g_ref=record.b_g,
        gamma=record.gamma,
        rho_o=record.rho_o,
        rho_w=record.rho_w,
        corey=record.corey,
    )
    return sim_grid, props, wells_from_record(record, grid)
