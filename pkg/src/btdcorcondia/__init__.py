"""Core consistency diagnostic for rank-(Lr, Lr, 1) block term decompositions."""
from .datagen import SimSpec, add_noise, apply_block_transform, generate, snr_sweep
from .diagnostics import btd_corcondia, compute_core, consistency, ideal_core
from .ll1 import BlockStructure, FitOptions, Ll1Model, fit_ll1, gevd_init, reconstruct
from .search import SearchSpace, enumerate_structures, grid_search

__all__ = [
    "BlockStructure",
    "FitOptions",
    "Ll1Model",
    "SearchSpace",
    "SimSpec",
    "add_noise",
    "apply_block_transform",
    "btd_corcondia",
    "compute_core",
    "consistency",
    "enumerate_structures",
    "fit_ll1",
    "generate",
    "gevd_init",
    "grid_search",
    "ideal_core",
    "reconstruct",
    "snr_sweep",
]
