"""Shared fixtures for the groundloc test suite."""

import numpy as np
import pytest

from src.imgcore import GrayImage
from src.synth import generate_texture


@pytest.fixture(scope="session")
def fractal_texture() -> GrayImage:
    """A 128x96 fractal-noise texture, deterministic per session."""
    return generate_texture("fractal-noise", 128, 96, seed=3)


@pytest.fixture(scope="session")
def blob_texture() -> GrayImage:
    return generate_texture("blobs", 128, 128, seed=1)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def random_image(rng) -> GrayImage:
    return GrayImage(rng.integers(0, 256, size=(32, 32), dtype=np.uint8))

