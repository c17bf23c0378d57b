"""Run configuration: one INI file drives every CLI subcommand.

Sections map to modules ([grid], [dataset], [rom], [dynamics], [harness]);
[generator] keys are passed through to the scenario generator, which owns
their defaults. Values omitted from the file keep the desk-scale defaults
below. `canonical_text()` is the normalized form used for config hashing.
"""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields, replace

from .errors import ConfigError
from .types import GridSpec, STOP_OIL_RATE_M3_PER_DAY


@dataclass
class DatasetConfig:
    n_train: int = 256
    n_val: int = 32
    dt_days: float = 14.0
    horizon: int = 260  # steps; 260 x 14 d = 10 years
    stop_oil_rate: float = STOP_OIL_RATE_M3_PER_DAY  # m3/day


@dataclass
class RomConfig:
    reducer: str = "vae"  # "pca" | "vae"
    d_z: int = 32
    vae_epochs: int = 30
    vae_batch: int = 64
    vae_lr: float = 1e-3
    vae_beta: float = 1e-3
    vae_beta_warmup_frac: float = 0.1
    vae_channels: tuple = (16, 32)
    vae_kernel: int = 3
    vae_strides: tuple = (2, 2)
    vae_train_stride: int = 2  # take every n-th state for training
    vae_max_train_states: int = 20000
    pca_max_states: int = 4000


@dataclass
class DynamicsConfig:
    kind: str = "gru"  # "linear" | "fcnn" | "gru"
    d_h: int = 0  # 0 -> 2 * d_z
    gru_epochs: int = 300
    gru_batch: int = 32
    gru_lr: float = 3e-3
    grad_clip: float = 1.0
    fcnn_layers: int = 3
    fcnn_width: int = 128
    fcnn_epochs: int = 60
    fcnn_batch: int = 256
    fcnn_lr: float = 1e-3
    ridge: float = 1e-8  # Tikhonov damping for analytic fits


@dataclass
class HarnessConfig:
    threads: int = 0  # 0 -> os.cpu_count()
    verbose: bool = False
    workdir: str = "runs/desk"
    decode_stride: int = 1


@dataclass
class RunConfig:
    grid: GridSpec = field(
        default_factory=lambda: GridSpec(
            nx=16, ny=24, nz=4, dx=28.0, dy=28.0, dz=4.0, depth_top=2000.0
        )
    )
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    rom: RomConfig = field(default_factory=RomConfig)
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    harness: HarnessConfig = field(default_factory=HarnessConfig)
    generator: dict = field(default_factory=dict)  # raw overrides
    seed: int = 1234

    def canonical_text(self) -> str:
        """Normalized, fully-expanded key=value form (stable for hashing)."""
        out = io.StringIO()
        out.write(f"[run]\nseed = {self.seed}\n")
        g = self.grid
        out.write("[grid]\n")
        for k in ("nx", "ny", "nz", "dx", "dy", "dz", "depth_top"):
            out.write(f"{k} = {getattr(g, k)!r}\n".replace("'", ""))
        for name, section in (
            ("dataset", self.dataset),
            ("rom", self.rom),
            ("dynamics", self.dynamics),
            ("harness", self.harness),
        ):
            out.write(f"[{name}]\n")
            for f_ in fields(section):
                v = getattr(section, f_.name)
                if isinstance(v, tuple):
                    v = ", ".join(str(x) for x in v)
                out.write(f"{f_.name} = {v}\n")
        out.write("[generator]\n")
        for k in sorted(self.generator):
            out.write(f"{k} = {self.generator[k]}\n")
        return out.getvalue()


def _coerce(raw: str, like):
    if isinstance(like, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"expected boolean, got {raw!r}")
    if isinstance(like, int):
        return int(raw)
    if isinstance(like, float):
        return float(raw)
    if isinstance(like, tuple):
        items = [x.strip() for x in raw.split(",") if x.strip()]
        kind = type(like[0]) if like else int
        return tuple(kind(x) for x in items)
    return raw


def _apply_section(obj, parser: configparser.ConfigParser, section: str):
    if not parser.has_section(section):
        return obj
    updates = {}
    valid = {f_.name: getattr(obj, f_.name) for f_ in fields(obj)}
    for key, raw in parser.items(section):
        if key not in valid:
            raise ConfigError(f"unknown key {key!r} in section [{section}]")
        try:
            updates[key] = _coerce(raw, valid[key])
        except (ValueError, ConfigError) as e:
            raise ConfigError(f"bad value for [{section}] {key}: {e}") from e
    return replace(obj, **updates)


def load_config(path) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file {path} not found")
    cfg = RunConfig()
    if parser.has_section("run"):
        for key, raw in parser.items("run"):
            if key != "seed":
                raise ConfigError(f"unknown key {key!r} in section [run]")
            cfg.seed = int(raw)
    if parser.has_section("grid"):
        gvals = {
            "nx": cfg.grid.nx,
            "ny": cfg.grid.ny,
            "nz": cfg.grid.nz,
            "dx": cfg.grid.dx,
            "dy": cfg.grid.dy,
            "dz": cfg.grid.dz,
            "depth_top": cfg.grid.depth_top,
        }
        for key, raw in parser.items("grid"):
            if key not in gvals:
                raise ConfigError(f"unknown key {key!r} in section [grid]")
            gvals[key] = _coerce(raw, gvals[key])
        cfg.grid = GridSpec(**gvals)
    cfg.dataset = _apply_section(cfg.dataset, parser, "dataset")
    cfg.rom = _apply_section(cfg.rom, parser, "rom")
    cfg.dynamics = _apply_section(cfg.dynamics, parser, "dynamics")
    cfg.harness = _apply_section(cfg.harness, parser, "harness")
    if parser.has_section("generator"):
        cfg.generator = dict(parser.items("generator"))
    return cfg


def write_config(cfg: RunConfig, path) -> None:
    with open(path, "w") as f:
        f.write(cfg.canonical_text())
