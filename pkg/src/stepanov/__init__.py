"""Curvature, energy-momentum classification and Kähler checks for metrics given by formulas."""

__version__ = "0.1.0"

from .classify import ClassFit, classify_all
from .curvature import CurvaturePack, christoffel, divergence_T
from .errors import StepanovError
from .expr import parse_expression, taylor_jet
from .jets import Manifest, load_manifest, manifest_from_dict, metric_jet
from .kahler import KahlerReport, check_structure

__all__ = [
    "ClassFit",
    "CurvaturePack",
    "KahlerReport",
    "Manifest",
    "StepanovError",
    "check_structure",
    "christoffel",
    "classify_all",
    "divergence_T",
    "load_manifest",
    "manifest_from_dict",
    "metric_jet",
    "parse_expression",
    "taylor_jet",
]
