"""Limit-law constants and the Chernoff argmin simulator."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy.stats import ks_2samp

from icboot import (
    ChernoffConfig,
    empirical_quantile,
    kappa_case2,
    kappa_cs,
    simulate_chernoff,
)


def test_kappa_cs_value():
    # Exp(1) event at t0 = 1 examined uniformly on [0, 2]
    F0 = 1.0 - math.exp(-1.0)
    f0 = math.exp(-1.0)
    g0 = 0.5
    want = (4.0 * F0 * (1.0 - F0) * f0 / g0) ** (1.0 / 3.0)
    assert kappa_cs(F0, f0, g0) == pytest.approx(want, rel=1e-15)
    assert kappa_cs(F0, f0, g0) == pytest.approx(0.8812524001933143, abs=1e-12)


def test_kappa_case2_value():
    # same event; two U[0, 2] examinations have diagonal density 1/2
    f0 = math.exp(-1.0)
    want = (0.75 * f0 * f0 / 0.5) ** (1.0 / 3.0)
    assert kappa_case2(f0, 0.5) == pytest.approx(want, rel=1e-15)
    assert kappa_case2(f0, 0.5) == pytest.approx(0.5877158885273075, abs=1e-12)


def test_kappa_validation():
    with pytest.raises(ValueError):
        kappa_cs(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        kappa_cs(1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        kappa_cs(0.5, 0.0, 1.0)
    with pytest.raises(ValueError):
        kappa_cs(0.5, 1.0, 0.0)
    with pytest.raises(ValueError):
        kappa_case2(0.0, 1.0)
    with pytest.raises(ValueError):
        kappa_case2(1.0, 0.0)


def test_chernoff_config_validation():
    with pytest.raises(ValueError):
        ChernoffConfig(half_width=0.0)
    with pytest.raises(ValueError):
        ChernoffConfig(step=0.0)
    with pytest.raises(ValueError):
        ChernoffConfig(replicates=0)
    with pytest.raises(ValueError, match="grid"):
        ChernoffConfig(step=1e-9)


def test_chernoff_deterministic_with_prefix_property():
    cfg = ChernoffConfig(replicates=300, seed=5)
    draws = simulate_chernoff(cfg)
    assert_array_equal(draws, simulate_chernoff(cfg))
    # replicate r only touches its own stream: a shorter run is a prefix
    head = simulate_chernoff(ChernoffConfig(replicates=60, seed=5))
    assert_array_equal(draws[:60], head)
    # a different seed moves every draw
    other = simulate_chernoff(ChernoffConfig(replicates=300, seed=6))
    assert np.mean(draws == other) < 0.05


def test_chernoff_distribution_shape():
    draws = simulate_chernoff(ChernoffConfig(replicates=5000, seed=0))
    assert np.all(np.abs(draws) <= 4.0)
    assert abs(float(draws.mean())) < 0.03
    # symmetric law: draws and -draws are indistinguishable
    assert ks_2samp(draws, -draws).statistic < 0.05
    # essentially no mass near the truncation boundary
    assert np.mean(np.abs(draws) > 2.0) < 1e-3


def test_empirical_quantile():
    draws = np.arange(101.0)
    assert empirical_quantile(draws, 0.5) == pytest.approx(50.0)
    assert empirical_quantile(draws, 0.0) == 0.0
    assert empirical_quantile(draws, 1.0) == 100.0
    got = empirical_quantile(draws, [0.25, 0.75])
    assert_allclose(got, np.quantile(draws, [0.25, 0.75]))
    assert isinstance(empirical_quantile(draws, 0.5), float)
    with pytest.raises(ValueError):
        empirical_quantile([], 0.5)
    with pytest.raises(ValueError):
        empirical_quantile([1.0, np.nan], 0.5)
    with pytest.raises(ValueError):
        empirical_quantile(draws, 1.5)
