"""Non-adaptive tolerant junta testing."""

from .estimators import EstarConfig, LocalEstimatorConfig, estar, local_mean_estimate
from .flatpoly import build_chebyshev, build_minimax
from .fourier import FourierSpectrum, inverse_wht, noise_exact, wht
from .hypercube import FormulaSource, PackedTruthTable, Point, TableSource, restrict
from .numdiff import backward_coeffs
from .oracle import exact_dist_to_juntas, exact_stats
from .tester import CoordinateOracleSet, DistanceReport, k_junta_distance, warmup_ball_tester

__all__ = [
    "CoordinateOracleSet",
    "DistanceReport",
    "EstarConfig",
    "FormulaSource",
    "FourierSpectrum",
    "LocalEstimatorConfig",
    "PackedTruthTable",
    "Point",
    "TableSource",
    "backward_coeffs",
    "build_chebyshev",
    "build_minimax",
    "estar",
    "exact_dist_to_juntas",
    "exact_stats",
    "inverse_wht",
    "k_junta_distance",
    "local_mean_estimate",
    "noise_exact",
    "restrict",
    "warmup_ball_tester",
    "wht",
]
