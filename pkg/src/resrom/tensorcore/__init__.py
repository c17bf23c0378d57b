"""Minimal dense-array autodiff engine with the ops the models need."""

from .adam import Adam, adam_step, clip_global_norm
from .autodiff import (
    Tensor,
    add,
    bias_add_channel,
    concat,
    conv3d,
    crop3d,
    dense,
    exp,
    lrelu,
    mean_all,
    mul,
    reshape,
    sigmoid,
    sum_all,
    tanh,
    upsample_trilinear,
)
from .backend import BACKEND

__all__ = [
    "Adam",
    "BACKEND",
    "Tensor",
    "adam_step",
    "add",
    "bias_add_channel",
    "clip_global_norm",
    "concat",
    "conv3d",
    "crop3d",
    "dense",
    "exp",
    "lrelu",
    "mean_all",
    "mul",
    "reshape",
    "sigmoid",
    "sum_all",
    "tanh",
    "upsample_trilinear",
]
