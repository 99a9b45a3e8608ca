"""Multiresolution analysis of graph signals via random spanning forests."""

from .coarsen import CoarseLevel, local_errors, neumann_inverse, schur_complement, sparsify
from .filterbank import (
    AnalysisResult,
    FilterBank,
    analyze,
    build_reconstructors,
    green_kernel,
    intertwining_error,
    lp_norm,
    operator_norm,
    reconstruct,
    wavelet_functions,
)
from .forests import (
    ROOT,
    ForestEnsemble,
    SpanningForest,
    enumerate_forests,
    forest_weight,
    sample_forests,
    wilson_sample,
)
from .graphs import (
    SpectralDecomposition,
    WeightedGraph,
    build_graph,
    laplacian_apply,
    spectral_decompose,
)
from .pyramid import (
    CompressionReport,
    JacksonBound,
    PyramidCoefficients,
    PyramidLevel,
    compress,
    compression_curve,
    decompose,
    jackson_bound,
    read_coefficients,
    reconstruct_full,
    select_q,
    select_qprime,
    stacked_norm,
    write_coefficients,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
