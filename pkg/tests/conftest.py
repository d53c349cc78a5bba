import numpy as np
import pytest

from guidedvo.params import make_rng


@pytest.fixture
def rng():
    """Fresh deterministic generator per test."""
    return make_rng(1234)


@pytest.fixture
def tiny_frames(rng):
    """Three random 64x64 uint8 RGB frames."""
    return [rng.integers(0, 256, size=(64, 64, 3)).astype(np.uint8) for _ in range(3)]
