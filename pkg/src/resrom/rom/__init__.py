"""Dimensionality reduction: PCA and convolutional VAE reducers."""

from .normalizer import Normalizer
from .pca import (
    PcaModel,
    clamp_state_tensor,
    pca_fit,
    state_from_flat,
    truncated_components,
)
from .vae import VaeArch, VaeModel, init_params, vae_train

__all__ = [
    "Normalizer",
    "PcaModel",
    "VaeArch",
    "VaeModel",
    "clamp_state_tensor",
    "init_params",
    "pca_fit",
    "state_from_flat",
    "truncated_components",
    "vae_train",
]
