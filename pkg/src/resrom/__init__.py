"""Latent-space surrogate modelling of oil development units.

Subpackages:
    core        shared domain types, dataset format, run configuration
    basesim     finite-difference two-phase base simulator (ground truth)
    scenariogen generative model for unit properties and control schedules
    tensorcore  minimal autodiff engine with the operators the models need
    rom         dimensionality reduction (PCA / convolutional VAE)
    dynamics    latent dynamics models (linear / FCNN / GRU) and rollout
    rates       physics-based production-rate reconstruction
    harness     training pipeline orchestration, metrics, benchmark, CLI
"""

__version__ = "0.1.0"
