"""Shared fixtures for the lsi-forge test suite."""

import os
import sys

import numpy as np
import pytest
from hypothesis import settings as hypothesis_settings

# Ensure we can import from the parent directory (project root)
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from lsi_forge.config import get_settings, use_settings  # noqa: E402

hypothesis_settings.register_profile("lsi", deadline=None, max_examples=40)
hypothesis_settings.load_profile("lsi")


@pytest.fixture
def rng() -> np.random.Generator:
    """Fixed-seed generator for tests that need random inputs."""
    return np.random.default_rng(20240611)


@pytest.fixture
def quick_settings():
    """Small search sizes so command-level tests finish quickly."""
    quick = get_settings().with_overrides(
        samples=2_000,
        sphere_starts=16,
        kkt_starts=20,
        hyper_starts=8,
        resolution=60,
        cascade_samples=400,
        threads=1,
    )
    with use_settings(quick) as active:
        yield active
