"""Shared fixtures for the trustsr test suite."""

from __future__ import annotations

import numpy as np
import pytest

from trustsr.image import Image, SampleSet


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def textured_refs():
    from trustsr.harness import textured_references

    return textured_references(5, side=96)


def make_image(rng, height=64, width=64, channels=1):
    shape = (height, width) if channels == 1 else (height, width, channels)
    return Image(rng.random(shape))


def constant_image(value=0.5, side=64, channels=1):
    shape = (side, side) if channels == 1 else (side, side, channels)
    return Image(np.full(shape, value))


def make_sample_set(images, scene_id="scene", reference=None):
    return SampleSet(
        scene_id=scene_id,
        candidates=[(f"c{i:02d}", img) for i, img in enumerate(images)],
        reference=reference,
    )
