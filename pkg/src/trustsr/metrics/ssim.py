"""Windowed structural similarity on single-channel images in [0, 1].

Local statistics use an 11x11 Gaussian window (sigma 1.5) evaluated only
where the window fits entirely inside the image, and the stabilising
constants are C1 = 0.01^2 and C2 = 0.03^2 for the unit dynamic range.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import correlate1d

from ..errors import ShapeMismatch, TooSmall
from ..image import Image

WINDOW_SIZE = 11
WINDOW_SIGMA = 1.5
C1 = 0.01**2
C2 = 0.03**2


def gaussian_window(size: int = WINDOW_SIZE, sigma: float = WINDOW_SIGMA) -> np.ndarray:
    """1-D Gaussian taps normalized to unit sum."""
    half = (size - 1) / 2.0
    x = np.arange(size) - half
    w = np.exp(-(x**2) / (2.0 * sigma**2))
    return w / w.sum()


_WINDOW = gaussian_window()
_RADIUS = WINDOW_SIZE // 2


def _local_mean(plane: np.ndarray) -> np.ndarray:
    # Separable window; boundary mode is irrelevant because the result is
    # cropped to fully interior windows.
    out = correlate1d(plane, _WINDOW, axis=0, mode="nearest")
    out = correlate1d(out, _WINDOW, axis=1, mode="nearest")
    return out[_RADIUS:-_RADIUS, _RADIUS:-_RADIUS]


def ssim(a: Image, b: Image) -> float:
    """Mean of the local SSIM map between two single-channel images."""
    if a.channels != 1 or b.channels != 1:
        raise ShapeMismatch("ssim expects single-channel images")
    if a.shape != b.shape:
        raise ShapeMismatch(f"ssim: shapes differ, {a.shape} vs {b.shape}")
    if min(a.height, a.width) < WINDOW_SIZE:
        raise TooSmall(
            f"ssim needs sides >= {WINDOW_SIZE}px, got {a.height}x{a.width}"
        )
    x = a.plane()
    y = b.plane()
    mu_x = _local_mean(x)
    mu_y = _local_mean(y)
    var_x = _local_mean(x * x) - mu_x**2
    var_y = _local_mean(y * y) - mu_y**2
    cov = _local_mean(x * y) - mu_x * mu_y
    numerator = (2.0 * mu_x * mu_y + C1) * (2.0 * cov + C2)
    denominator = (mu_x**2 + mu_y**2 + C1) * (var_x + var_y + C2)
    return float(np.mean(numerator / denominator))
