"""Shared helpers for the test suite."""

import numpy as np
import pytest


def random_channel(rng, k, m, scale=1.0):
    """i.i.d. CN(0, scale) channel matrix, UE rows, antenna columns."""
    z = rng.standard_normal((k, m)) + 1j * rng.standard_normal((k, m))
    return np.sqrt(scale / 2.0) * z


@pytest.fixture
def rng():
    return np.random.default_rng(20250825)
