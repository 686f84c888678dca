"""Sobel gradient-magnitude edge maps."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch
from ..image import Image

# Standard 3x3 Sobel kernels, correlation orientation.
SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
SOBEL_Y = SOBEL_X.T

# Largest gradient magnitude either kernel can produce on [0, 1] input:
# |Gx| and |Gy| are each at most 4, so the magnitude is at most 4*sqrt(2).
_MAX_MAGNITUDE = 4.0 * np.sqrt(2.0)


def sobel_edge_map(img: Image) -> Image:
    """Normalized Sobel gradient magnitude of a single-channel image.

    Computes sqrt(Gx^2 + Gy^2) with edge-replicate padding, divided by the
    theoretical maximum magnitude so the result stays in [0, 1].  The map is
    kept continuous; no threshold is applied.

    The kernels are applied in separable difference-then-smooth form, so
    regions of constant intensity produce exact zeros rather than rounding
    residue.
    """
    if img.channels != 1:
        raise ShapeMismatch(
            f"sobel_edge_map expects a single-channel image, got {img.channels}"
        )
    plane = img.plane()
    h, w = plane.shape
    padded = np.pad(plane, 1, mode="edge")
    dx = padded[:, 2:] - padded[:, :-2]  # central difference along width
    gx = dx[:h] + 2.0 * dx[1 : h + 1] + dx[2 : h + 2]
    dy = padded[2:, :] - padded[:-2, :]
    gy = dy[:, :w] + 2.0 * dy[:, 1 : w + 1] + dy[:, 2 : w + 2]
    return Image(np.hypot(gx, gy) / _MAX_MAGNITUDE)
