"""Shared fixtures: cheap HEOM settings for structural tests.

The cheap profile (shallow hierarchy, short run) resolves nothing
physical but exercises every code path in under a second.  Physics
accuracy is the acceptance suite's job.
"""

import numpy as np
import pytest

from oqsim import experiments as ex


CHEAP = ex.HeomSettings(depth=3, n_pade=2, t_final_ps=0.05, sample_points=40)


@pytest.fixture
def cheap_settings():
    return CHEAP


@pytest.fixture
def cheap_config():
    return ex.paper_operating_config(0.6, 100.0, settings=CHEAP)


@pytest.fixture
def rng():
    return np.random.default_rng(20260816)


def random_density(rng, n=2):
    """Haar-ish random density matrix via a Ginibre draw."""
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    m = g @ g.conj().T
    return m / np.trace(m).real
