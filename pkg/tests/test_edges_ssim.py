"""Sobel edge maps and windowed SSIM against brute-force oracles."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trustsr.errors import ShapeMismatch, TooSmall
from trustsr.image import Image
from trustsr.metrics.edges import SOBEL_X, SOBEL_Y, sobel_edge_map
from trustsr.metrics.score import s_edge
from trustsr.metrics.ssim import C1, C2, gaussian_window, ssim

from conftest import constant_image, make_image


def brute_force_sobel(plane):
    """Nested-loop correlation with edge-replicate padding."""
    h, w = plane.shape
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            gx = gy = 0.0
            for di in range(-1, 2):
                for dj in range(-1, 2):
                    ii = min(max(i + di, 0), h - 1)
                    jj = min(max(j + dj, 0), w - 1)
                    gx += SOBEL_X[di + 1, dj + 1] * plane[ii, jj]
                    gy += SOBEL_Y[di + 1, dj + 1] * plane[ii, jj]
            out[i, j] = np.sqrt(gx * gx + gy * gy)
    return out / (4.0 * np.sqrt(2.0))


def brute_force_ssim(x, y):
    """Windowed SSIM with explicit loops over fully interior windows."""
    w1 = gaussian_window()
    window = np.outer(w1, w1)
    h, w = x.shape
    values = []
    for i in range(h - 10):
        for j in range(w - 10):
            px = x[i : i + 11, j : j + 11]
            py = y[i : i + 11, j : j + 11]
            mx = float((window * px).sum())
            my = float((window * py).sum())
            vx = float((window * px * px).sum()) - mx * mx
            vy = float((window * py * py).sum()) - my * my
            cov = float((window * px * py).sum()) - mx * my
            values.append(
                ((2 * mx * my + C1) * (2 * cov + C2))
                / ((mx * mx + my * my + C1) * (vx + vy + C2))
            )
    return float(np.mean(values))


class TestSobel:
    def test_constant_is_zero(self):
        out = sobel_edge_map(constant_image(0.7))
        assert np.all(out.data == 0.0)

    def test_vertical_step_band(self):
        plane = np.zeros((16, 16))
        plane[:, 8:] = 1.0
        out = sobel_edge_map(Image(plane)).plane()
        assert np.all(out[:, 7:9] > 0.1)
        assert np.all(out[:, :6] == 0.0)
        assert np.all(out[:, 10:] == 0.0)

    def test_matches_brute_force_on_ramp(self):
        ramp = np.linspace(0, 1, 25).reshape(5, 5)
        ours = sobel_edge_map(Image(ramp)).plane()
        assert np.abs(ours - brute_force_sobel(ramp)).max() < 1e-12

    def test_matches_brute_force_on_random(self, rng):
        plane = rng.random((9, 11))
        ours = sobel_edge_map(Image(plane)).plane()
        assert np.abs(ours - brute_force_sobel(plane)).max() < 1e-12

    def test_multichannel_rejected(self, rng):
        with pytest.raises(ShapeMismatch):
            sobel_edge_map(make_image(rng, 8, 8, 3))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_output_in_unit_range(self, seed):
        r = np.random.default_rng(seed)
        out = sobel_edge_map(make_image(r, 12, 12))
        assert out.data.min() >= 0.0
        assert out.data.max() <= 1.0


class TestSsim:
    def test_identical_is_exactly_one(self, rng):
        img = make_image(rng)
        assert abs(ssim(img, img) - 1.0) < 1e-12

    def test_matches_brute_force(self, rng):
        for _ in range(3):
            a = make_image(rng, 24, 24)
            b = make_image(rng, 24, 24)
            assert ssim(a, b) == pytest.approx(brute_force_ssim(a.plane(), b.plane()), abs=1e-4)

    def test_negation_of_texture_low(self, rng):
        x = make_image(rng, 32, 32)
        neg = Image(1.0 - x.data)
        value = ssim(x, neg)
        assert value == pytest.approx(brute_force_ssim(x.plane(), neg.plane()), abs=1e-4)
        assert value < 0.5

    def test_constant_pair_luminance_only(self):
        a, b = 0.25, 0.75
        value = ssim(constant_image(a, 16), constant_image(b, 16))
        # variance terms vanish, leaving the luminance factor alone
        assert value == pytest.approx((2 * a * b + C1) / (a * a + b * b + C1), abs=1e-12)

    def test_too_small(self, rng):
        with pytest.raises(TooSmall):
            ssim(make_image(rng, 10, 30), make_image(rng, 10, 30))

    def test_shape_mismatch(self, rng):
        with pytest.raises(ShapeMismatch):
            ssim(make_image(rng, 16, 16), make_image(rng, 16, 17))
        with pytest.raises(ShapeMismatch):
            ssim(make_image(rng, 16, 16, 3), make_image(rng, 16, 16, 3))


class TestEdgeSimilarity:
    def test_identical(self, rng):
        img = make_image(rng, 32, 32, 3)
        assert s_edge(img, img) == pytest.approx(1.0, abs=1e-12)

    def test_constant_pairs_are_perfect(self):
        # Flat images of different levels have identical (all-zero) edge maps.
        assert s_edge(constant_image(0.2), constant_image(0.9)) == pytest.approx(1.0, abs=1e-12)

    def test_blur_ladder_monotone(self, textured_refs):
        from trustsr.harness import DegradationKind, DegradationSpec, degrade

        ref = textured_refs[0]
        values = [
            s_edge(ref, degrade(ref, DegradationSpec(DegradationKind.GAUSSIAN_BLUR, sigma)))
            for sigma in (0.8, 2.0, 5.0)
        ]
        assert values[0] > values[1] > values[2]

    def test_shape_mismatch(self, rng):
        with pytest.raises(ShapeMismatch):
            s_edge(make_image(rng, 16, 16), make_image(rng, 17, 16))
