"""Random M-adic Cantor sets, random covering sets of the torus, and their projections."""
from __future__ import annotations

__version__ = "0.1.0"

from ._kernels import BACKEND
from .cantor import Construction, Generation, extend, generate, measure_mass, project_mass_interval
from .concentration import BoundParams, calibrate_R, conditional_failure_estimate, event_A, event_G
from .covering import CoveringSample, CoveringSpec, aniso_experiment, choose_nk, extract_cantor, sample_covering
from .dimension import boxcount_projection, closing_identity_check, direction_sweep, local_dim_scan
from .errors import DepthGuardError, ExtractionInvariantError, FamilyGuardError, GuardError, ParameterWarning
from .geometry import Line, Strip, line_total_length, strip_count
from .grid import GridSequence, Rect, dim_s

__all__ = [
    "BACKEND", "BoundParams", "Construction", "CoveringSample", "CoveringSpec", "DepthGuardError",
    "ExtractionInvariantError", "FamilyGuardError", "Generation", "GridSequence", "GuardError", "Line",
    "ParameterWarning", "Rect", "Strip", "aniso_experiment", "boxcount_projection", "calibrate_R", "choose_nk",
    "closing_identity_check", "conditional_failure_estimate", "dim_s", "direction_sweep", "event_A", "event_G",
    "extend", "extract_cantor", "generate", "line_total_length", "local_dim_scan", "measure_mass",
    "project_mass_interval", "sample_covering", "strip_count",
]
