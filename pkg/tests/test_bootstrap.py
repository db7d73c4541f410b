"""Model-based bootstrap machinery: streams, roots, CIs, bandwidth selection."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

import icboot.bootstrap as bt
from icboot import (
    CurrentStatusSample,
    FromNPMLE,
    FromSMLE,
    MixedCaseSubject,
    StepDistribution,
    basic_ci,
    bmse_curve,
    bootstrap_roots,
    select_bandwidth,
)
from icboot.bootstrap import child_seed, resample_subject, stream
from icboot.estimators import (
    NonConvergenceError,
    npmle_current_status,
    npmle_interval_censored,
    reduce_to_interval,
)


def _cs_sample(seed=5, n=60):
    rng = np.random.default_rng(seed)
    times = rng.uniform(0.0, 2.0, size=n)
    x = rng.exponential(1.0, size=n)
    return CurrentStatusSample(times, (x <= times).astype(int))


def _mixed_sample(seed=6, n=40, kmax=3):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        k = int(rng.integers(1, kmax + 1))
        times = np.sort(rng.uniform(0.05, 2.0, size=k))
        while np.any(np.diff(times) <= 0):
            times = np.sort(rng.uniform(0.05, 2.0, size=k))
        x = rng.exponential(1.0)
        cat = int(np.searchsorted(times, x, side="left")) + 1
        out.append(MixedCaseSubject(tuple(float(t) for t in times), cat))
    return out


def _case2_sample(seed=7, n=30):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        t1, t2 = np.sort(rng.uniform(0.1, 2.0, size=2))
        if t2 - t1 < 1e-3:
            t2 = t1 + 0.3
        x = rng.exponential(1.0)
        cat = 1 if x <= t1 else (2 if x <= t2 else 3)
        out.append(MixedCaseSubject((float(t1), float(t2)), cat))
    return out


# ---------------------------------------------------------------------------
# random streams
# ---------------------------------------------------------------------------


def test_stream_determinism_and_independence():
    a = stream(3, 1, 4).random(8)
    b = stream(3, 1, 4).random(8)
    assert_array_equal(a, b)
    c = stream(3, 1, 5).random(8)
    d = stream(4, 1, 4).random(8)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_child_seed_stable():
    s1 = child_seed(11, 2, 7)
    s2 = child_seed(11, 2, 7)
    assert s1 == s2
    assert s1 != child_seed(11, 2, 8)
    assert 0 <= s1 < 2**64


def test_resample_subject_frequencies():
    dist = StepDistribution([0.5, 1.5], [0.3, 0.4])
    rng = np.random.default_rng(0)
    draws = np.array([resample_subject([1.0, 2.0], dist, rng) for _ in range(20000)])
    # cells: F(1)=0.3, F(2)-F(1)=0.4, 1-F(2)=0.3
    freq = np.bincount(draws, minlength=4)[1:] / draws.size
    assert_allclose(freq, [0.3, 0.4, 0.3], atol=0.02)
    with pytest.raises(ValueError):
        resample_subject([], dist, rng)
    with pytest.raises(ValueError):
        resample_subject([2.0, 1.0], dist, rng)


# ---------------------------------------------------------------------------
# bootstrap roots
# ---------------------------------------------------------------------------


def test_bootstrap_roots_deterministic():
    data = _cs_sample()
    r1 = bootstrap_roots(data, 1.0, FromSMLE(0.3), 50, seed=9)
    r2 = bootstrap_roots(data, 1.0, FromSMLE(0.3), 50, seed=9)
    assert_array_equal(r1.roots, r2.roots)
    r3 = bootstrap_roots(data, 1.0, FromSMLE(0.3), 50, seed=10)
    assert not np.array_equal(r1.roots, r3.roots)


def test_bootstrap_roots_thread_invariance(monkeypatch):
    data = _mixed_sample()
    monkeypatch.setenv("ICBOOT_THREADS", "1")
    r1 = bootstrap_roots(data, 1.0, FromNPMLE(), 40, seed=3)
    monkeypatch.setenv("ICBOOT_THREADS", "3")
    r2 = bootstrap_roots(data, 1.0, FromNPMLE(), 40, seed=3)
    assert_array_equal(r1.roots, r2.roots)
    # explicit n_jobs overrides the environment
    r3 = bootstrap_roots(data, 1.0, FromNPMLE(), 40, seed=3, n_jobs=2)
    assert_array_equal(r1.roots, r3.roots)


def test_bootstrap_roots_order_invariance():
    data = _case2_sample()
    r1 = bootstrap_roots(data, 1.0, FromSMLE(0.4), 30, seed=1, mode="case2")
    r2 = bootstrap_roots(list(reversed(data)), 1.0, FromSMLE(0.4), 30, seed=1, mode="case2")
    assert_array_equal(r1.roots, r2.roots)

    cs = _cs_sample()
    perm = np.random.default_rng(2).permutation(len(cs))
    cs_perm = CurrentStatusSample(cs.times[perm], cs.delta[perm])
    r3 = bootstrap_roots(cs, 1.0, FromNPMLE(), 30, seed=1)
    r4 = bootstrap_roots(cs_perm, 1.0, FromNPMLE(), 30, seed=1)
    assert_array_equal(r3.roots, r4.roots)


def test_bootstrap_roots_fields_and_rates():
    cs = _cs_sample(n=64)
    res = bootstrap_roots(cs, 1.0, FromSMLE(0.3), 25, seed=0)
    assert res.B == 25 and res.failures == 0
    assert res.roots.shape == (25,)
    assert res.rate == pytest.approx(64 ** (1 / 3))
    base = npmle_current_status(cs)
    assert res.estimate == pytest.approx(float(base.evaluate(1.0)))
    smooth = bt._source_from(base, FromSMLE(0.3))
    assert res.source_value == pytest.approx(float(smooth.evaluate(1.0)))
    # current-status runs center the CI on the resampling source
    assert res.ci_center == res.source_value

    c2 = _case2_sample(n=27)
    res2 = bootstrap_roots(c2, 1.0, FromSMLE(0.3), 25, seed=0, mode="case2")
    assert res2.rate == pytest.approx((27 * math.log(27)) ** (1 / 3))
    # interval-censored runs center on the NPMLE of the original data
    assert res2.ci_center == res2.estimate

    mixed = _mixed_sample()
    res3 = bootstrap_roots(mixed, 1.0, FromSMLE(0.3), 25, seed=0)
    assert res3.ci_center == res3.estimate
    base3 = npmle_interval_censored([reduce_to_interval(s) for s in mixed])
    assert res3.estimate == pytest.approx(float(base3.evaluate(1.0)))


def test_bootstrap_roots_npmle_source_centers_coincide():
    data = _cs_sample()
    res = bootstrap_roots(data, 1.0, FromNPMLE(), 25, seed=0)
    assert res.source_value == pytest.approx(res.estimate)
    assert res.ci_center == pytest.approx(res.estimate)


def test_with_center():
    data = _cs_sample()
    res = bootstrap_roots(data, 1.0, FromSMLE(0.3), 25, seed=0)
    moved = res.with_center(0.42)
    assert moved.ci_center == 0.42
    assert res.ci_center != 0.42  # original untouched
    assert_array_equal(moved.roots, res.roots)
    with pytest.raises(AttributeError):
        res.ci_center = 0.0


def test_bootstrap_roots_validation():
    data = _cs_sample()
    with pytest.raises(ValueError):
        bootstrap_roots(data, 1.0, FromSMLE(0.3), 0, seed=0)
    with pytest.raises(ValueError):
        bootstrap_roots(data, 1.0, FromSMLE(0.3), 10, seed=0, mode="case2")
    with pytest.raises(ValueError):
        bootstrap_roots(_mixed_sample(), 1.0, FromSMLE(0.3), 10, seed=0, mode="nonsense")
    with pytest.raises(ValueError):
        FromSMLE(0.0)
    # case2 mode rejects subjects without exactly two examinations
    with pytest.raises(ValueError):
        bootstrap_roots(
            [MixedCaseSubject((1.0,), 1), MixedCaseSubject((0.5, 1.5), 2)],
            1.0,
            FromNPMLE(),
            10,
            seed=0,
            mode="case2",
        )


def test_bootstrap_roots_retry_and_abort(monkeypatch):
    data = _cs_sample(n=30)
    real = bt._CurrentStatusPlan.refit_value
    calls = {"k": 0}

    def flaky(self, u):
        calls["k"] += 1
        if calls["k"] % 2 == 1:  # every first attempt fails, retries succeed
            raise NonConvergenceError("synthetic", StepDistribution([], []), 1.0, 1)
        return real(self, u)

    monkeypatch.setenv("ICBOOT_THREADS", "1")
    monkeypatch.setattr(bt._CurrentStatusPlan, "refit_value", flaky)
    res = bootstrap_roots(data, 1.0, FromNPMLE(), 30, seed=0)
    assert res.failures == 0
    assert res.roots.shape == (30,)

    def broken(self, u):
        raise NonConvergenceError("synthetic", StepDistribution([], []), 1.0, 1)

    monkeypatch.setattr(bt._CurrentStatusPlan, "refit_value", broken)
    with pytest.raises(RuntimeError, match="replicates failed"):
        bootstrap_roots(data, 1.0, FromNPMLE(), 30, seed=0)


# ---------------------------------------------------------------------------
# confidence intervals
# ---------------------------------------------------------------------------


def _result_with(roots, center, rate):
    return bt.BootstrapResult(
        roots=np.asarray(roots, dtype=float),
        source_value=center,
        estimate=center,
        ci_center=center,
        rate=rate,
        B=len(roots),
        failures=0,
        seed=0,
        t0=1.0,
        scheme=FromNPMLE(),
    )


def test_basic_ci_quantile_inversion():
    roots = np.arange(100.0) - 50.0  # -50 ... 49
    res = _result_with(roots, center=0.5, rate=100.0)
    lo, hi = basic_ci(res, 0.9)
    qlo, qhi = np.quantile(roots, [0.05, 0.95])
    assert lo == pytest.approx(0.5 - qhi / 100.0)
    assert hi == pytest.approx(0.5 - qlo / 100.0)
    assert lo < 0.5 < hi


def test_basic_ci_clamps_to_unit_interval():
    res = _result_with(np.linspace(-40, 40, 50), center=0.9, rate=10.0)
    lo, hi = basic_ci(res, 0.95)
    assert lo == 0.0 and hi == 1.0


def test_basic_ci_uses_ci_center():
    roots = np.linspace(-1.0, 1.0, 41)
    res = _result_with(roots, center=0.5, rate=5.0)
    lo1, hi1 = basic_ci(res, 0.9)
    lo2, hi2 = basic_ci(res.with_center(0.6), 0.9)
    assert lo2 == pytest.approx(lo1 + 0.1)
    assert hi2 == pytest.approx(hi1 + 0.1)


def test_basic_ci_validation():
    res = _result_with(np.arange(10.0), center=0.5, rate=5.0)
    with pytest.raises(ValueError, match="at least 20"):
        basic_ci(res, 0.9)
    res = _result_with(np.arange(30.0), center=0.5, rate=5.0)
    with pytest.raises(ValueError):
        basic_ci(res, 1.0)
    with pytest.raises(ValueError):
        basic_ci(res, 0.0)


# ---------------------------------------------------------------------------
# bandwidth selection
# ---------------------------------------------------------------------------


def test_bmse_curve_deterministic_and_common_random_numbers():
    data = _cs_sample(n=50)
    grid = [0.2, 0.4, 0.6]
    c1 = bmse_curve(data, 1.0, FromSMLE(0.4), grid, B=40, seed=17)
    c2 = bmse_curve(data, 1.0, FromSMLE(0.4), grid, B=40, seed=17)
    assert c1 == c2
    assert [h for h, _ in c1] == grid
    assert all(v >= 0.0 for _, v in c1)
    # common random numbers: each column equals the single-bandwidth curve
    for h, v in c1:
        (single,) = bmse_curve(data, 1.0, FromSMLE(0.4), [h], B=40, seed=17)
        assert single[1] == pytest.approx(v, abs=1e-15)


def test_bmse_curve_validation():
    data = _cs_sample(n=30)
    with pytest.raises(ValueError):
        bmse_curve(data, 1.0, FromSMLE(0.4), [], B=10, seed=0)
    with pytest.raises(ValueError):
        bmse_curve(data, 1.0, FromSMLE(0.4), [0.0, 0.2], B=10, seed=0)
    with pytest.raises(ValueError):
        bmse_curve(data, 1.0, FromSMLE(0.4), [0.2], B=0, seed=0)


def test_select_bandwidth():
    assert select_bandwidth([(0.1, 3.0), (0.2, 1.0), (0.3, 2.0)]) == 0.2
    # exact tie breaks toward the smaller bandwidth, whatever the order
    assert select_bandwidth([(0.3, 1.0), (0.1, 1.0), (0.2, 2.0)]) == 0.1
    assert select_bandwidth([(0.5, 7.0)]) == 0.5
    with pytest.raises(ValueError):
        select_bandwidth([])
