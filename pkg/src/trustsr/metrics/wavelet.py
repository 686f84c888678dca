"""Two-dimensional Daubechies-19 wavelet decomposition.

The transform pads each signal with symmetric half-point extension to an
even length, then applies the orthonormal periodized filter bank.  Because
the filter bank is exactly orthogonal on the padded signal, the transform
conserves energy against the padded samples and inverts exactly; cropping
the padded margin back out recovers the input.  Sub-band length for an
n-sample signal is ceil((n + taps - 1) / 2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeMismatch, TooSmall
from ..image import Image, to_grayscale

#: Orthonormal Daubechies-19 scaling coefficients (38 taps, minimum-phase
#: ordering, sum = sqrt(2)).  The orthonormality of this table is asserted by
#: the test suite rather than trusted.
DB19_SCALING = (
    0.0011086697631817106, 0.014281098450764397,
    0.08127811326545956, 0.26438843174089677,
    0.5244363774646549, 0.6017045491275379,
    0.26089495265103885, -0.22809139421548263,
    -0.28583863175582624, 0.07465226970810326,
    0.21234974330627848, -0.03351854190230288,
    -0.1427856950387366, 0.027584350625628667,
    0.08690675555581223, -0.02650123625012304,
    -0.04567422627723091, 0.02162376740958505,
    0.019375549889176127, -0.013988388678535142,
    -0.005866922281012175, 0.007040747367105243,
    0.0007689543592575484, -0.002687551800701582,
    0.00034180865345859575, 0.0007358025205054352,
    -0.000260676135678628, -0.00012460079173415878,
    8.711270467219923e-05, 5.105950487073886e-06,
    -1.6640176297154945e-05, 3.0109643162965265e-06,
    1.531931476691193e-06, -6.862755657769143e-07,
    1.4470882987978445e-08, 4.6369377757826045e-08,
    -1.1164020670358259e-08, 8.666848838997619e-10,
)

TAPS = len(DB19_SCALING)

# Analysis filters in correlation form: lowpass is the reversed scaling
# filter, highpass its quadrature mirror.
_DEC_LO = np.asarray(DB19_SCALING[::-1], dtype=np.float64)
_DEC_HI = np.asarray(
    [(-1.0) ** k * DB19_SCALING[k] for k in range(TAPS)], dtype=np.float64
)

# Symmetric extension needs this many samples on the wider side.
_MIN_SIDE = (TAPS + 1) // 2

#: Minimum image side accepted by the artifact-score path.
MIN_IMAGE_SIDE = 64


@dataclass(frozen=True)
class WaveletConfig:
    """Decomposition settings.  Only the db19 bank is supported."""

    wavelet_name: str = "db19"
    levels: int = 2
    boundary_mode: str = "symmetric"

    def __post_init__(self) -> None:
        if self.wavelet_name != "db19":
            raise ValueError(f"unsupported wavelet {self.wavelet_name!r}")
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.boundary_mode != "symmetric":
            raise ValueError(f"unsupported boundary mode {self.boundary_mode!r}")


@dataclass
class WaveletPyramid:
    """Multi-level decomposition output.

    ``details[j]`` holds the level j+1 triple (row-detail, column-detail,
    diagonal-detail); ``approx`` is the lowpass residue after the last
    level.  ``input_shapes[j]`` records the shape the level j+1 transform
    consumed, which the inverse needs for cropping.
    """

    approx: np.ndarray
    details: list[tuple[np.ndarray, np.ndarray, np.ndarray]]
    input_shapes: list[tuple[int, int]] = field(default_factory=list)

    @property
    def levels(self) -> int:
        return len(self.details)

    def coefficient_energy(self) -> float:
        """Sum of squared coefficients over every sub-band."""
        total = float(np.sum(self.approx**2))
        for bands in self.details:
            for band in bands:
                total += float(np.sum(band**2))
        return total

    def detail_l1(self) -> float:
        """Sum of absolute detail coefficients over all levels."""
        return float(sum(np.abs(band).sum() for bands in self.details for band in bands))


def band_length(n: int) -> int:
    """Sub-band length produced by one analysis step on ``n`` samples."""
    return (n + TAPS - 1 + 1) // 2  # ceil((n + TAPS - 1) / 2)


def _pad_symmetric(x: np.ndarray) -> tuple[np.ndarray, int]:
    """Extend the last axis to even length 2 * band_length(n).

    Half-point symmetry: the sample just outside each border mirrors the
    sample just inside it.  Returns the padded array and the left margin.
    """
    n = x.shape[-1]
    total = 2 * band_length(n) - n
    left = (total + 1) // 2
    right = total - left
    if left > n:
        raise TooSmall(f"signal of length {n} too short for {TAPS}-tap analysis")
    parts = [x[..., left - 1 :: -1], x]
    if right:
        parts.append(x[..., : n - right - 1 : -1])
    return np.concatenate(parts, axis=-1), left


def _analyze_last_axis(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One periodized analysis step along the last axis."""
    padded, _ = _pad_symmetric(x)
    npad = padded.shape[-1]
    half = npad // 2
    idx = (2 * np.arange(half)[:, None] + np.arange(TAPS)[None, :]) % npad
    windows = padded[..., idx]
    return windows @ _DEC_LO, windows @ _DEC_HI


def _synthesize_last_axis(lo: np.ndarray, hi: np.ndarray, n: int) -> np.ndarray:
    """Adjoint of :func:`_analyze_last_axis`, cropped back to length ``n``."""
    half = lo.shape[-1]
    npad = 2 * half
    out = np.zeros(lo.shape[:-1] + (npad,), dtype=np.float64)
    offsets = 2 * np.arange(half)
    for i in range(TAPS):
        pos = (offsets + i) % npad  # distinct for fixed i, so += is safe
        out[..., pos] += lo * _DEC_LO[i] + hi * _DEC_HI[i]
    total = npad - n
    left = (total + 1) // 2
    return out[..., left : left + n]


def _analyze_2d(plane: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    row_lo, row_hi = _analyze_last_axis(plane)
    ll, lh = (b.swapaxes(-1, -2) for b in _analyze_last_axis(row_lo.swapaxes(-1, -2)))
    hl, hh = (b.swapaxes(-1, -2) for b in _analyze_last_axis(row_hi.swapaxes(-1, -2)))
    return ll, lh, hl, hh


def _synthesize_2d(
    ll: np.ndarray,
    lh: np.ndarray,
    hl: np.ndarray,
    hh: np.ndarray,
    shape: tuple[int, int],
) -> np.ndarray:
    h, w = shape
    row_lo = _synthesize_last_axis(ll.swapaxes(-1, -2), lh.swapaxes(-1, -2), h)
    row_hi = _synthesize_last_axis(hl.swapaxes(-1, -2), hh.swapaxes(-1, -2), h)
    return _synthesize_last_axis(row_lo.swapaxes(-1, -2), row_hi.swapaxes(-1, -2), w)


def dwt2_db19(plane: np.ndarray, levels: int = 2) -> WaveletPyramid:
    """Forward 2-D decomposition of a single-channel sample plane."""
    arr = np.asarray(plane, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeMismatch(f"dwt2_db19 expects a 2-D plane, got shape {arr.shape}")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    details = []
    shapes = []
    current = arr
    for _ in range(levels):
        if min(current.shape) < _MIN_SIDE:
            raise TooSmall(
                f"side {min(current.shape)} below the {_MIN_SIDE}-sample minimum "
                f"for {TAPS}-tap analysis"
            )
        shapes.append(current.shape)
        ll, lh, hl, hh = _analyze_2d(current)
        details.append((lh, hl, hh))
        current = ll
    return WaveletPyramid(approx=current, details=details, input_shapes=shapes)


def idwt2_db19(pyramid: WaveletPyramid) -> np.ndarray:
    """Exact inverse of :func:`dwt2_db19`."""
    current = pyramid.approx
    for level in range(pyramid.levels - 1, -1, -1):
        lh, hl, hh = pyramid.details[level]
        current = _synthesize_2d(current, lh, hl, hh, pyramid.input_shapes[level])
    return current


def level_energies(plane: np.ndarray) -> tuple[float, float]:
    """Coefficient energy and padded-signal energy of one analysis level.

    The filter bank is orthogonal between its padded input and its four
    sub-bands, so the two values agree to rounding error.  Row analysis
    pads each row; the column stage then pads each column of the two
    row-transformed halves, so the padded-signal energy is accumulated over
    the column-stage inputs (each of which already conserves the energy of
    its own padded rows).
    """
    arr = np.asarray(plane, dtype=np.float64)
    row_lo, row_hi = _analyze_last_axis(arr)
    cols_lo, _ = _pad_symmetric(row_lo.swapaxes(-1, -2))
    cols_hi, _ = _pad_symmetric(row_hi.swapaxes(-1, -2))
    padded = float(np.sum(cols_lo**2) + np.sum(cols_hi**2))
    coeff = sum(float(np.sum(b**2)) for b in _analyze_2d(arr))
    return coeff, padded


def s_wavelet_raw(img: Image, cfg: WaveletConfig | None = None) -> float:
    """Mean absolute detail coefficient per pixel of the grayscale image.

    Sums |coefficient| over every detail sub-band at all levels and divides
    by the pixel count of the original image.  High-frequency content --
    noise, ringing, synthetic texture -- raises the score.
    """
    cfg = cfg or WaveletConfig()
    gray = to_grayscale(img)
    if min(gray.height, gray.width) < MIN_IMAGE_SIDE:
        raise TooSmall(
            f"artifact score needs sides >= {MIN_IMAGE_SIDE}px, "
            f"got {gray.height}x{gray.width}"
        )
    pyramid = dwt2_db19(gray.plane(), levels=cfg.levels)
    return pyramid.detail_l1() / float(img.width * img.height)
