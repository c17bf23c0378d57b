"""On-disk dataset format: one manifest plus per-scenario binary files.

Layout of a dataset directory:

    manifest.txt        key = value lines plus a per-scenario table
    codec.bin           fitted metadata compressors (5 arrays)
    scenario_00000.bin  metadata, controls and (if simulated) states/rates
    ...

Physics inputs (metadata vector, controls) are stored float64; simulated
fields (states, rates) float32 -- training precision. Each scenario file
carries a sha256 recorded in the manifest.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from .arrayio import load_arrays, read_array, sha256_file, write_array
from .codec import MetadataCodec
from .errors import DatasetError, IntegrityError
from .types import (
    Control,
    GridSpec,
    LayoutBlock,
    Metadata,
    MetadataLayout,
    RateRecord,
    ReservoirState,
    Scenario,
    ScenarioTags,
)

MANIFEST_NAME = "manifest.txt"
CODEC_NAME = "codec.bin"
FORMAT_VERSION = 1
_TABLE_HEADER = "# index file sha256 steps has_states has_rates scheme form orientation"


@dataclass
class Dataset:
    """In-memory view of a dataset directory."""

    grid: GridSpec
    dt_days: float
    scenarios: list[Scenario]
    codec: Optional[MetadataCodec] = None

    def __len__(self) -> int:
        return len(self.scenarios)

    def __iter__(self):
        return iter(self.scenarios)

    def __getitem__(self, i: int) -> Scenario:
        return self.scenarios[i]


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def _layout_line(layout: MetadataLayout) -> str:
    parts = [f"{b.name}:{b.offset}:{b.length}:{b.kind}" for b in layout.blocks]
    return ",".join(parts)


def _parse_layout(line: str, k_perm: int, k_tab: int) -> MetadataLayout:
    blocks = []
    for part in line.split(","):
        name, off, length, kind = part.split(":")
        blocks.append(LayoutBlock(name, int(off), int(length), kind))
    return MetadataLayout(tuple(blocks), k_perm=k_perm, k_tab=k_tab)


def scenario_filename(index: int) -> str:
    return f"scenario_{index:05d}.bin"


def write_scenario_file(path, scenario: Scenario) -> None:
    with open(path, "wb") as f:
        write_array(f, np.asarray(scenario.metadata.vector, dtype=np.float64))
        write_array(f, scenario.controls_matrix().astype(np.float64))
        if scenario.states is not None:
            write_array(f, scenario.states_tensor(np.float32), channels=3)
        if scenario.rates is not None:
            write_array(f, scenario.rates_matrix().astype(np.float32))


def read_scenario_file(
    path,
    layout: MetadataLayout,
    dt_days: float,
    tags: ScenarioTags,
    has_states: bool,
    has_rates: bool,
    codec: Optional[MetadataCodec] = None,
) -> Scenario:
    with open(path, "rb") as f:
        meta_vec, _ = read_array(f)
        controls, _ = read_array(f)
        states = rates = None
        if has_states:
            tens, _ = read_array(f)
            states = tuple(
                ReservoirState.from_tensor(tens[t].astype(np.float64), time_index=t)
                for t in range(tens.shape[0])
            )
        if has_rates:
            rmat, _ = read_array(f)
            rates = tuple(
                RateRecord(float(r[0]), float(r[1]), float(r[2])) for r in rmat
            )
    metadata = Metadata(vector=meta_vec, layout=layout, codec=codec)
    ctrl = tuple(Control(float(c[0]), float(c[1])) for c in controls)
    return Scenario(
        metadata=metadata,
        controls=ctrl,
        dt_days=dt_days,
        tags=tags,
        states=states,
        rates=rates,
    )


def write_dataset(
    scenarios: Sequence[Scenario],
    path,
    grid: GridSpec,
    codec: Optional[MetadataCodec] = None,
) -> dict:
    """Write scenarios plus manifest; returns a manifest summary dict."""
    if not scenarios:
        raise DatasetError("refusing to write an empty dataset")
    os.makedirs(path, exist_ok=True)
    dt = scenarios[0].dt_days
    layout = scenarios[0].metadata.layout
    for i, s in enumerate(scenarios):
        if s.dt_days != dt:
            raise DatasetError(f"scenario {i} dt {s.dt_days} != dataset dt {dt}")
        if s.metadata.layout.dim != layout.dim:
            raise DatasetError(f"scenario {i} metadata layout differs")
        if s.states is not None and s.states[0].shape != grid.shape:
            raise DatasetError(
                f"scenario {i} states shaped {s.states[0].shape}, grid {grid.shape}"
            )

    rows = []
    for i, s in enumerate(scenarios):
        fname = scenario_filename(i)
        fpath = os.path.join(path, fname)
        write_scenario_file(fpath, s)
        rows.append(
            (
                i,
                fname,
                sha256_file(fpath),
                s.horizon,
                int(s.states is not None),
                int(s.rates is not None),
                s.tags.scheme,
                s.tags.control_form,
                s.tags.orientation,
            )
        )

    lines = [
        f"format_version = {FORMAT_VERSION}",
        f"count = {len(scenarios)}",
        f"nx = {grid.nx}",
        f"ny = {grid.ny}",
        f"nz = {grid.nz}",
        f"dx = {_fmt(grid.dx)}",
        f"dy = {_fmt(grid.dy)}",
        f"dz = {_fmt(grid.dz)}",
        f"depth_top = {_fmt(grid.depth_top)}",
        f"dt_days = {_fmt(dt)}",
        f"d_m = {layout.dim}",
        f"k_perm = {layout.k_perm}",
        f"k_tab = {layout.k_tab}",
        f"layout = {_layout_line(layout)}",
    ]
    if codec is not None:
        cpath = os.path.join(path, CODEC_NAME)
        with open(cpath, "wb") as f:
            for arr in codec.to_arrays():
                write_array(f, arr)
        lines.append(f"codec_file = {CODEC_NAME}")
        lines.append(f"codec_sha256 = {sha256_file(cpath)}")
    lines.append("[scenarios]")
    lines.append(_TABLE_HEADER)
    for row in rows:
        lines.append(" ".join(str(x) for x in row))
    with open(os.path.join(path, MANIFEST_NAME), "w") as f:
        f.write("\n".join(lines) + "\n")
    return {
        "count": len(scenarios),
        "grid": grid.shape,
        "dt_days": dt,
        "d_m": layout.dim,
        "path": str(path),
    }


def _parse_manifest(path) -> tuple[dict, list[dict]]:
    mpath = os.path.join(path, MANIFEST_NAME)
    if not os.path.exists(mpath):
        raise DatasetError(f"manifest missing in {path}")
    keys: dict[str, str] = {}
    rows: list[dict] = []
    in_table = False
    with open(mpath) as f:
        for raw in f:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line == "[scenarios]":
                in_table = True
                continue
            if not in_table:
                k, _, v = line.partition("=")
                keys[k.strip()] = v.strip()
            else:
                parts = line.split()
                rows.append(
                    {
                        "index": int(parts[0]),
                        "file": parts[1],
                        "sha256": parts[2],
                        "steps": int(parts[3]),
                        "has_states": bool(int(parts[4])),
                        "has_rates": bool(int(parts[5])),
                        "scheme": parts[6],
                        "form": parts[7],
                        "orientation": parts[8],
                    }
                )
    if int(keys.get("format_version", -1)) != FORMAT_VERSION:
        raise DatasetError(
            f"unsupported dataset format version {keys.get('format_version')}"
        )
    if int(keys["count"]) != len(rows):
        raise DatasetError(
            f"manifest count {keys['count']} != table rows {len(rows)}"
        )
    return keys, rows


def _grid_from_keys(keys: dict) -> GridSpec:
    return GridSpec(
        nx=int(keys["nx"]),
        ny=int(keys["ny"]),
        nz=int(keys["nz"]),
        dx=float(keys["dx"]),
        dy=float(keys["dy"]),
        dz=float(keys["dz"]),
        depth_top=float(keys["depth_top"]),
    )


def _check_scenario_file(path, row) -> None:
    if not os.path.exists(path):
        raise DatasetError(f"scenario {row['index']} file {row['file']} missing")
    digest = sha256_file(path)
    if digest != row["sha256"]:
        raise IntegrityError(
            f"scenario {row['index']} file {row['file']} checksum mismatch"
        )


def _load_codec(path, keys, layout) -> Optional[MetadataCodec]:
    if "codec_file" not in keys:
        return None
    cpath = os.path.join(path, keys["codec_file"])
    if not os.path.exists(cpath):
        raise DatasetError("codec file named in manifest is missing")
    if sha256_file(cpath) != keys["codec_sha256"]:
        raise IntegrityError("codec file checksum mismatch")
    return MetadataCodec.from_arrays(layout, load_arrays(cpath, expect=5))


def iter_dataset(path) -> Iterator[Scenario]:
    """Stream scenarios in manifest order, verifying checksums lazily."""
    keys, rows = _parse_manifest(path)
    layout = _parse_layout(keys["layout"], int(keys["k_perm"]), int(keys["k_tab"]))
    codec = _load_codec(path, keys, layout)
    dt = float(keys["dt_days"])
    for row in rows:
        fpath = os.path.join(path, row["file"])
        _check_scenario_file(fpath, row)
        tags = ScenarioTags(row["scheme"], row["form"], row["orientation"])
        yield read_scenario_file(
            fpath, layout, dt, tags, row["has_states"], row["has_rates"], codec
        )


def read_dataset(path) -> Dataset:
    """Load an entire dataset directory into memory."""
    keys, rows = _parse_manifest(path)
    layout = _parse_layout(keys["layout"], int(keys["k_perm"]), int(keys["k_tab"]))
    codec = _load_codec(path, keys, layout)
    return Dataset(
        grid=_grid_from_keys(keys),
        dt_days=float(keys["dt_days"]),
        scenarios=list(iter_dataset(path)),
        codec=codec,
    )


def dataset_manifest_sha256(path) -> str:
    mpath = os.path.join(path, MANIFEST_NAME)
    if not os.path.exists(mpath):
        raise DatasetError(f"manifest missing in {path}")
    return sha256_file(mpath)
