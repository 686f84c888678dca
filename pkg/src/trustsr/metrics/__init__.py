"""Quality metrics: edges, SSIM, wavelet artifact energy, trustworthiness score."""

from .edges import sobel_edge_map
from .score import (
    DEFAULT_ABLATION_GRID,
    TwsBreakdown,
    TwsWeights,
    WeightConfig,
    ablation_sweep,
    combine,
    normalize_components,
    raw_components,
    s_edge,
    tws,
)
from .ssim import ssim
from .wavelet import (
    DB19_SCALING,
    MIN_IMAGE_SIDE,
    TAPS,
    WaveletConfig,
    WaveletPyramid,
    band_length,
    dwt2_db19,
    idwt2_db19,
    level_energies,
    s_wavelet_raw,
)

__all__ = [
    "sobel_edge_map",
    "DEFAULT_ABLATION_GRID",
    "TwsBreakdown",
    "TwsWeights",
    "WeightConfig",
    "ablation_sweep",
    "combine",
    "normalize_components",
    "raw_components",
    "s_edge",
    "tws",
    "ssim",
    "DB19_SCALING",
    "MIN_IMAGE_SIDE",
    "TAPS",
    "WaveletConfig",
    "WaveletPyramid",
    "band_length",
    "dwt2_db19",
    "idwt2_db19",
    "level_energies",
    "s_wavelet_raw",
]
