"""Exact localization of maps between block-substitution tiling spaces."""

__version__ = "0.1.0"

from .systems import RotationAction, SubstitutionSystem, load_catalog, load_system
