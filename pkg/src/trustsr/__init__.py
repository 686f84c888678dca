"""trustsr: trustworthiness scoring and VLM-guided selection for SR sample sets."""

from . import errors
from .embedding import (
    CachedEmbeddingProvider,
    Embedding,
    EmbeddingProvider,
    MockEmbeddingProvider,
    RemoteEmbeddingProvider,
    cached,
    cosine_similarity,
    mock_provider,
    remote_provider,
)
from .image import (
    PERFECT_MATCH,
    Image,
    PerfectMatch,
    SampleSet,
    ensemble_average,
    load_image,
    load_sample_set,
    psnr,
    save_image,
    save_sample_set,
    tile_mnist,
    to_grayscale,
)
from .metrics import (
    DEFAULT_ABLATION_GRID,
    TwsBreakdown,
    TwsWeights,
    WaveletConfig,
    WeightConfig,
    ablation_sweep,
    dwt2_db19,
    idwt2_db19,
    normalize_components,
    s_edge,
    s_wavelet_raw,
    sobel_edge_map,
    ssim,
    tws,
)
from .stats import (
    TTestResult,
    pearson,
    regularized_incomplete_beta,
    t_test_one_sample,
    t_test_two_sample,
)

__version__ = "0.1.0"
