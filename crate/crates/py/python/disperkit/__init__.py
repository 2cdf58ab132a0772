"""Guided-wave dispersion curves from SAFE cross-section models."""

from ._native import (
    AdaptiveConfig,
    Branch,
    Dataset,
    Material,
    Matrices,
    Mesh,
    ModeSet,
    hungarian,
    mac,
    run_adaptive,
    solve_modes,
    uniform_sweep,
)

__all__ = [
    "AdaptiveConfig",
    "Branch",
    "Dataset",
    "Material",
    "Matrices",
    "Mesh",
    "ModeSet",
    "hungarian",
    "mac",
    "run_adaptive",
    "solve_modes",
    "uniform_sweep",
]
