"""Spectral comparison and clustering of stationary time series with unequal lengths."""

from .cluster import agglomerate, distance_matrix, export_dendrogram, spectral_distance
from .core import ComparisonInput, FourierGrid, SeriesError, TimeSeries, load_csv, prepare_comparison
from .inference import (
    DStatistics,
    TestResult,
    compare,
    confidence_interval_d2,
    d_statistics,
    equality_test,
    precise_test,
    sigma2_alternative,
    sigma2_h0,
)
from .procgen import CouplingSpec, ModelSpec, coupled_innovations, simulate, simulate_pair, zoo
from .spectral import cross_periodogram, periodogram, periodogram_on_grid

__version__ = "0.1.0"
