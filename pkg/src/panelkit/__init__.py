"""Instruction-driven sewing-pattern prediction from 3D garment point clouds."""

from .config import Config
from .errors import PanelkitError
from .model import PatternModel
from .pattern.types import GarmentSample, Panel, SewingPattern

__all__ = [
    "Config",
    "GarmentSample",
    "Panel",
    "PanelkitError",
    "PatternModel",
    "SewingPattern",
]

__version__ = "0.1.0"
