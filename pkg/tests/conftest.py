import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

from chen_invariants.shapes import AmbientForm, ShapeOperatorSet  # noqa: E402


@pytest.fixture
def example_b():
    """n = 3, p = 1, A = diag(0, 1, 1) in a flat ambient space."""
    return ShapeOperatorSet(np.diag([0.0, 1.0, 1.0])[None]), AmbientForm.real(0.0, 4)


@pytest.fixture
def geodesic3():
    return ShapeOperatorSet(np.zeros((1, 3, 3))), AmbientForm.real(1.0, 4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
