"""Latent dynamics: analytic linear, one-step FCNN, free-running GRU."""

from .common import LatentTrajectory, Standardizer, transitions_matrix
from .fcnn import FcnnDynModel, fit_fcnn
from .gru import GruDynModel, fit_gru
from .linear import (
    InitStateModel,
    LinearDynModel,
    RIDGE_DEFAULT,
    fit_init,
    fit_linear,
    ridge_solve,
)
from .rollout import rollout

__all__ = [
    "FcnnDynModel",
    "GruDynModel",
    "InitStateModel",
    "LatentTrajectory",
    "LinearDynModel",
    "RIDGE_DEFAULT",
    "Standardizer",
    "fit_fcnn",
    "fit_gru",
    "fit_init",
    "fit_linear",
    "ridge_solve",
    "rollout",
    "transitions_matrix",
]
