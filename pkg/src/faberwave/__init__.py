"""Faber-polynomial exponential integration of acoustic and elastic waves with PML."""

from .analysis import (DispersionReport, StabilityReport, SymbolMatrix, amplification_matrix, cfl_number,
                       dispersion_alpha, dispersion_error, symbol_deltaH)
from .bounds import BoundReport, literature_bound, proposed_bound
from .ellipse import EllipseParams, SpectralRectangle, ellipse_from_rectangle
from .faber import FaberCoefficients, SeriesDivergedError, faber_apply, faber_coefficients
from .harness import (RunResult, corner_profile, faber_solve, l2_error, max_dt_scan, prepare,
                      reference_solve)
from .linop import DiscreteOperator
from .medium import MediumModel, PmlConfig
from .operators import Formulation, build_operator
from .sources import RickerSource, augment_with_source
from .spectrum import ImagCalibration, calibrate_imag_slope, eigen_full, spectral_rectangle
from .testcases import TestCase, build_test_case

__all__ = [
    "BoundReport", "DiscreteOperator", "DispersionReport", "EllipseParams", "FaberCoefficients",
    "Formulation", "ImagCalibration", "MediumModel", "PmlConfig", "RickerSource", "RunResult",
    "SeriesDivergedError", "SpectralRectangle", "StabilityReport", "SymbolMatrix", "TestCase",
    "amplification_matrix", "augment_with_source", "build_operator", "build_test_case",
    "calibrate_imag_slope", "cfl_number", "corner_profile", "dispersion_alpha", "dispersion_error",
    "eigen_full", "ellipse_from_rectangle", "faber_apply", "faber_coefficients", "faber_solve",
    "l2_error", "literature_bound", "max_dt_scan", "prepare", "proposed_bound", "reference_solve",
    "spectral_rectangle", "symbol_deltaH",
]
