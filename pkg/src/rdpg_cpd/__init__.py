"""Change point detection for dynamic random dot product graphs.

Snapshots are embedded spectrally, inner products on a fixed disjoint pair
set are tracked over time, and a Kolmogorov-Smirnov CUSUM drives wild binary
segmentation.
"""

__version__ = "0.1.0"

from .cusum import PairSeries, PairSet, cusum_at, cusum_sup, max_cusum, pair_scores, pair_set
from .errors import (
    FormatError,
    InvalidDimensionError,
    InvalidInputError,
    InvalidIntervalError,
    ModelViolationError,
    RdpgCpdError,
    ResourceLimitError,
)
from .segmentation import AUTO, DetectionResult, IntervalSet, detect, draw_intervals, nonpar_rdpg_cpd
from .series import AdjacencySeries, ChangePointSet
from .spectral import LatentSeries, embed_series, scaled_pca
