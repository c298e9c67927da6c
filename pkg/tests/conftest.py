import numpy as np
import pytest

from risfair import model
from risfair.model import SystemConfig


def make_setup(m, n, k, seed=0, **overrides):
    """Small end-to-end instance: (config, geometry, stats, realization)."""
    cfg = SystemConfig(M=m, N=n, K=k, **overrides)
    rng = np.random.default_rng(seed)
    geom = model.sample_geometry(cfg, rng)
    stats = model.build_statistics(cfg, geom, rng)
    realization, _ = model.sample_H2(cfg, geom, rng)
    return cfg, geom, stats, realization


@pytest.fixture
def small_setup():
    return make_setup(6, 12, 3, seed=0)
