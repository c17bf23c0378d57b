"""Shared domain types, dataset format and run configuration."""

from .codec import MetadataCodec, PcaBlockCodec
from .config import (
    DatasetConfig,
    DynamicsConfig,
    HarnessConfig,
    RomConfig,
    RunConfig,
    load_config,
    write_config,
)
from .dataset import (
    Dataset,
    dataset_manifest_sha256,
    iter_dataset,
    read_dataset,
    write_dataset,
)
from .errors import (
    CflError,
    ConfigError,
    ConvergenceError,
    DatasetError,
    DivergenceError,
    GenerationError,
    IntegrityError,
    InvariantError,
    ResromError,
)
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
    STOP_OIL_RATE_M3_PER_DAY,
    gas_saturation,
)

__all__ = [
    "CflError",
    "ConfigError",
    "Control",
    "ConvergenceError",
    "Dataset",
    "DatasetConfig",
    "DatasetError",
    "DivergenceError",
    "DynamicsConfig",
    "GenerationError",
    "GridSpec",
    "HarnessConfig",
    "IntegrityError",
    "InvariantError",
    "LayoutBlock",
    "Metadata",
    "MetadataCodec",
    "MetadataLayout",
    "PcaBlockCodec",
    "RateRecord",
    "ReservoirState",
    "ResromError",
    "RomConfig",
    "RunConfig",
    "STOP_OIL_RATE_M3_PER_DAY",
    "Scenario",
    "ScenarioTags",
    "dataset_manifest_sha256",
    "gas_saturation",
    "iter_dataset",
    "load_config",
    "read_dataset",
    "write_config",
    "write_dataset",
]
