"""Generative model of development units and their metadata vectorization."""

from .config import GeneratorConfig
from .layout import (
    N_TAB_POINTS,
    RawUnitRecord,
    build_layout,
    corey_curves,
    devectorize,
    fit_metadata_compressors,
    sim_inputs,
    vectorize,
    wells_from_record,
)
from .sampler import FORMS, generate_scenarios, sample_controls, sample_unit

__all__ = [
    "FORMS",
    "GeneratorConfig",
    "N_TAB_POINTS",
    "RawUnitRecord",
    "build_layout",
    "corey_curves",
    "devectorize",
    "fit_metadata_compressors",
    "generate_scenarios",
    "sample_controls",
    "sample_unit",
    "sim_inputs",
    "vectorize",
    "wells_from_record",
]
