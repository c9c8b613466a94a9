import os

import hypothesis
import numpy as np
import pytest

from config import build_config
from sampler import RngStream

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=5)
hypothesis.settings.register_profile("ci", max_examples=50, deadline=None)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "ci"))


@pytest.fixture
def stream():
    return RngStream(20240607, 0)


@pytest.fixture
def gen(stream):
    return stream.generator()


@pytest.fixture
def small_config(tmp_path):
    """Factory for quick experiment configs writing into a temporary directory."""

    def make(experiment, **overrides):
        overrides.setdefault('output_dir', str(tmp_path))
        return build_config(experiment, overrides=overrides, environ={})

    return make
