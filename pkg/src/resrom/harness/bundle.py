"""Serialized metamodel bundle: reducer + dynamics + init map + statistics.

A bundle is a directory holding a text header (bundle.txt) and one array
blob (arrays.bin). Parameters are stored float64, so a reloaded bundle
reproduces encodings and rollouts bitwise; rerunning the pipeline with
identical config and seeds reproduces the directory bytes exactly.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Union

import numpy as np

from ..core.arrayio import load_arrays, save_arrays
from ..core.errors import InvariantError
from ..core.types import GridSpec
from ..dynamics import (
    FcnnDynModel,
    GruDynModel,
    InitStateModel,
    LinearDynModel,
    Standardizer,
)
from ..rom import Normalizer, PcaModel, VaeArch, VaeModel

HEADER_NAME = "bundle.txt"
ARRAYS_NAME = "arrays.bin"

ReducerT = Union[PcaModel, VaeModel]
DynT = Union[LinearDynModel, FcnnDynModel, GruDynModel]


@dataclass
class MetamodelBundle:
    reducer_kind: str  # "pca" | "vae"
    reducer: ReducerT
    dynamics_kind: str  # "linear" | "fcnn" | "gru"
    dynamics: DynT
    init_model: InitStateModel  # standardized spaces
    z_std: Standardizer
    m_std: Standardizer
    u_std: Standardizer
    grid: GridSpec
    dt_days: float
    provenance: dict  # dataset_sha, config_sha, seed

    def __post_init__(self):
        if self.reducer.d_z != self.z_std.mean.size:
            raise InvariantError("reducer and standardizer d_z disagree")
        if self.dynamics_kind == "gru" and self.dynamics.d_z != self.reducer.d_z:
            raise InvariantError("dynamics and reducer d_z disagree")
        for key in ("dataset_sha", "config_sha", "seed"):
            if not str(self.provenance.get(key, "")):
                raise InvariantError(f"provenance entry {key!r} missing")

    @property
    def d_z(self) -> int:
        return self.reducer.d_z


def save_bundle(bundle: MetamodelBundle, path) -> None:
    os.makedirs(path, exist_ok=True)
    lines = [
        "format = resrom-bundle-1",
        f"reducer_kind = {bundle.reducer_kind}",
        f"dynamics_kind = {bundle.dynamics_kind}",
        f"d_z = {bundle.d_z}",
        f"dt_days = {bundle.dt_days!r}",
        f"grid = {bundle.grid.nx} {bundle.grid.ny} {bundle.grid.nz} "
        f"{bundle.grid.dx!r} {bundle.grid.dy!r} {bundle.grid.dz!r} "
        f"{bundle.grid.depth_top!r}",
        f"dataset_sha = {bundle.provenance['dataset_sha']}",
        f"config_sha = {bundle.provenance['config_sha']}",
        f"seed = {bundle.provenance['seed']}",
    ]
    arrays: list[np.ndarray] = []
    for std in (bundle.z_std, bundle.m_std, bundle.u_std):
        arrays.extend(std.to_arrays())
    arrays.extend(bundle.init_model.to_arrays())

    if bundle.reducer_kind == "pca":
        arrays.extend(bundle.reducer.to_arrays())
        lines.append("reducer_arrays = 3")
    else:
        vae: VaeModel = bundle.reducer
        a = vae.arch
        lines.append(
            "vae_arch = "
            f"{a.d_z} | {','.join(map(str, a.channels))} | {a.kernel} | "
            f"{','.join(map(str, a.strides))} | {a.lrelu_slope!r}"
        )
        lines.append(f"vae_params = {','.join(vae.param_names())}")
        arrays.extend(vae.to_arrays())
        lines.append(f"reducer_arrays = {3 + len(vae.params)}")

    if bundle.dynamics_kind == "linear":
        arrays.extend(bundle.dynamics.to_arrays())
        lines.append("dynamics_arrays = 4")
    elif bundle.dynamics_kind == "fcnn":
        fc: FcnnDynModel = bundle.dynamics
        arrays.extend(fc.to_arrays())
        lines.append(f"fcnn_layers = {len(fc.weights)}")
        lines.append(f"fcnn_slope = {fc.slope!r}")
        lines.append(f"dynamics_arrays = {2 * len(fc.weights)}")
    else:
        arrays.extend(bundle.dynamics.to_arrays())
        lines.append("dynamics_arrays = 12")

    save_arrays(os.path.join(path, ARRAYS_NAME), arrays)
    with open(os.path.join(path, HEADER_NAME), "w") as f:
        f.write("\n".join(lines) + "\n")


def load_bundle(path) -> MetamodelBundle:
    header = os.path.join(path, HEADER_NAME)
    if not os.path.exists(header):
        raise InvariantError(f"no bundle header in {path}")
    keys = {}
    with open(header) as f:
        for line in f:
            k, _, v = line.strip().partition("=")
            keys[k.strip()] = v.strip()
    if keys.get("format") != "resrom-bundle-1":
        raise InvariantError("unsupported bundle format")
    arrays = load_arrays(os.path.join(path, ARRAYS_NAME))
    pos = 0

    def take(n):
        nonlocal pos
        out = arrays[pos : pos + n]
        pos += n
        return out

    z_std = Standardizer(*take(2))
    m_std = Standardizer(*take(2))
    u_std = Standardizer(*take(2))
    init_model = InitStateModel(*take(2))

    g = keys["grid"].split()
    grid = GridSpec(
        nx=int(g[0]), ny=int(g[1]), nz=int(g[2]),
        dx=float(g[3]), dy=float(g[4]), dz=float(g[5]), depth_top=float(g[6]),
    )

    reducer_kind = keys["reducer_kind"]
    n_red = int(keys["reducer_arrays"])
    red_arrays = take(n_red)
    if reducer_kind == "pca":
        reducer: ReducerT = PcaModel.from_arrays(red_arrays, grid.shape)
    else:
        dz_s, ch_s, k_s, st_s, slope_s = [
            part.strip() for part in keys["vae_arch"].split("|")
        ]
        arch = VaeArch(
            d_z=int(dz_s),
            channels=tuple(int(x) for x in ch_s.split(",")),
            kernel=int(k_s),
            strides=tuple(int(x) for x in st_s.split(",")),
            lrelu_slope=float(slope_s),
        )
        names = keys["vae_params"].split(",")
        normalizer = Normalizer(shift=red_arrays[0], scale=red_arrays[1])
        grid_shape = tuple(int(x) for x in red_arrays[2])
        params = dict(zip(names, red_arrays[3:]))
        reducer = VaeModel(arch, grid_shape, normalizer, params)

    dynamics_kind = keys["dynamics_kind"]
    n_dyn = int(keys["dynamics_arrays"])
    dyn_arrays = take(n_dyn)
    if dynamics_kind == "linear":
        dynamics: DynT = LinearDynModel(*dyn_arrays)
    elif dynamics_kind == "fcnn":
        n_layers = int(keys["fcnn_layers"])
        weights = tuple(
            (dyn_arrays[2 * i], dyn_arrays[2 * i + 1]) for i in range(n_layers)
        )
        dynamics = FcnnDynModel(weights=weights, slope=float(keys["fcnn_slope"]))
    else:
        dynamics = GruDynModel.from_arrays(dyn_arrays)

    return MetamodelBundle(
        reducer_kind=reducer_kind,
        reducer=reducer,
        dynamics_kind=dynamics_kind,
        dynamics=dynamics,
        init_model=init_model,
        z_std=z_std,
        m_std=m_std,
        u_std=u_std,
        grid=grid,
        dt_days=float(keys["dt_days"]),
        provenance={
            "dataset_sha": keys["dataset_sha"],
            "config_sha": keys["config_sha"],
            "seed": keys["seed"],
        },
    )
