"""Model-based bootstrap for interval-censored estimators.

Resampling follows the "bootstrapping residuals" idea: examination times are
held fixed and each subject's response category is redrawn from a fitted
distribution (the NPMLE, or its kernel smooth), as a single multinomial draw
over the K+1 censoring cells.  Roots are the centered, scaled differences
between the refitted estimator at ``t0`` and the resampling source at ``t0``.

Reproducibility contract: every replicate ``b`` uses the counter-derived
stream ``stream(seed, 1, b)`` (retry: ``stream(seed, 1, b, 1)``) and consumes
exactly one uniform per subject, with subjects in a canonical sort order, so
results are bit-identical for a given ``(data, scheme, B, seed)`` no matter
the thread count, schedule, or input subject order.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace
from typing import Callable, Sequence, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .estimators import (
    CensoringInterval,
    CurrentStatusSample,
    EvaluableDistribution,
    MixedCaseSubject,
    NonConvergenceError,
    SmoothedDistribution,
    StepDistribution,
    _npmle_lr,
    kernel_cdf,
    npmle_current_status,
    npmle_interval_censored,
    reduce_to_interval,
    subject_from_interval,
)
from .gcm import _pava_fit

__all__ = [
    "BootstrapResult",
    "BootstrapScheme",
    "DegenerateSourceError",
    "FromNPMLE",
    "FromSMLE",
    "basic_ci",
    "bmse_curve",
    "bootstrap_roots",
    "child_seed",
    "resample_subject",
    "select_bandwidth",
    "stream",
]

#: abort threshold: more than this fraction of failed replicates is an error
MAX_FAILURE_FRACTION = 0.01

_ENV_THREADS = "ICBOOT_THREADS"


class DegenerateSourceError(ValueError):
    """All multinomial cells of a subject are zero under the source."""


# ---------------------------------------------------------------------------
# random streams
# ---------------------------------------------------------------------------


def stream(seed: int, *key: int) -> np.random.Generator:
    """Deterministic random stream for a master seed and an index tuple.

    Distinct keys give statistically independent streams (Philox keyed via
    SeedSequence spawn keys), independent of the order streams are created
    or consumed in.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def child_seed(seed: int, *key: int) -> int:
    """A derived 64-bit master seed for a nested engine."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(2, np.uint64)[0])


def _resolve_jobs(n_jobs: int | None) -> int:
    if n_jobs is not None:
        return max(1, int(n_jobs))
    env = os.environ.get(_ENV_THREADS, "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def _run_indexed(fn: Callable[[int], float], count: int, n_jobs: int) -> list[float]:
    # Results are reduced by replicate index, so scheduling cannot change them.
    if n_jobs == 1:
        return [fn(b) for b in range(count)]
    from joblib import Parallel, delayed

    return list(
        Parallel(n_jobs=n_jobs, backend="threading")(delayed(fn)(b) for b in range(count))
    )


# ---------------------------------------------------------------------------
# schemes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FromNPMLE:
    """Resample responses from the fitted NPMLE."""


@dataclass(frozen=True)
class FromSMLE:
    """Resample responses from the kernel smooth of the NPMLE with the given
    bandwidth."""

    bandwidth: float

    def __post_init__(self) -> None:
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")


BootstrapScheme = Union[FromNPMLE, FromSMLE]


def _source_from(base: StepDistribution, scheme: BootstrapScheme) -> EvaluableDistribution:
    if isinstance(scheme, FromSMLE):
        return SmoothedDistribution(base, scheme.bandwidth)
    if isinstance(scheme, FromNPMLE):
        return base
    raise TypeError(f"unknown bootstrap scheme {scheme!r}")


# ---------------------------------------------------------------------------
# resampling
# ---------------------------------------------------------------------------


def resample_subject(
    times: ArrayLike, source: EvaluableDistribution, rng: np.random.Generator
) -> int:
    """Redraw one subject's category from ``source`` (times held fixed).

    A single multinomial draw over the K+1 cells with probabilities
    ``F(T_1), F(T_2)-F(T_1), ..., 1-F(T_K)``; numerically negative cells are
    clamped to zero and the rest renormalized.  Consumes exactly one uniform.
    """
    t = np.asarray(times, dtype=np.float64)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("times must be a nonempty 1-d sequence")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    fvals = np.asarray(source.evaluate(t), dtype=np.float64)
    cells = np.concatenate([np.diff(fvals, prepend=0.0), [1.0 - fvals[-1]]])
    cells = np.clip(cells, 0.0, None)
    total = cells.sum()
    if total <= 0.0:
        raise DegenerateSourceError("all multinomial cells are zero under the source")
    cum = np.cumsum(cells) / total
    cum[-1] = 1.0
    return int(np.searchsorted(cum, rng.random(), side="right")) + 1


# ---------------------------------------------------------------------------
# per-mode refit plans (times fixed; only categories are redrawn)
# ---------------------------------------------------------------------------


class _CurrentStatusPlan:
    def __init__(self, sample: CurrentStatusSample, source: EvaluableDistribution, t0: float):
        order = np.lexsort((sample.delta, sample.times))
        self.t = sample.times[order]
        self.n = self.t.size
        self.uniq, self.start = np.unique(self.t, return_index=True)
        self.counts = np.ascontiguousarray(
            np.diff(np.append(self.start, self.n)).astype(np.float64)
        )
        self.thresholds = np.asarray(source.evaluate(self.t), dtype=np.float64)
        # slope giving F*(t0): the one at the largest unique time <= t0
        self.i0 = int(np.searchsorted(self.uniq, t0, side="right")) - 1

    def refit_value(self, u: NDArray[np.float64]) -> float:
        dstar = (u < self.thresholds).astype(np.float64)
        dsum = np.add.reduceat(dstar, self.start)
        slopes = _pava_fit(np.ascontiguousarray(dsum / self.counts), self.counts)
        return float(slopes[self.i0]) if self.i0 >= 0 else 0.0

    def refit_dist(self, u: NDArray[np.float64]) -> StepDistribution:
        dstar = (u < self.thresholds).astype(np.float64)
        dsum = np.add.reduceat(dstar, self.start)
        slopes = _pava_fit(np.ascontiguousarray(dsum / self.counts), self.counts)
        return StepDistribution.from_cdf_values(self.uniq, np.clip(slopes, 0.0, 1.0))


def _canonical_subjects(subjects: Sequence[MixedCaseSubject]) -> list[MixedCaseSubject]:
    return sorted(subjects, key=lambda s: (s.times, s.category))


class _MixedPlan:
    def __init__(
        self,
        subjects: Sequence[MixedCaseSubject],
        source: EvaluableDistribution,
        t0: float,
        tol: float = 1e-8,
        max_iter: int = 500,
    ):
        subjects = _canonical_subjects(subjects)
        self.n = len(subjects)
        self.tol = tol
        self.max_iter = max_iter
        self.t0 = t0
        kmax = max(len(s.times) for s in subjects)
        tm = np.full((self.n, kmax), np.inf)
        for i, s in enumerate(subjects):
            tm[i, : len(s.times)] = s.times
        self.tm = tm
        self.kvec = np.array([len(s.times) for s in subjects])
        fin = np.isfinite(tm)
        fv = np.zeros_like(tm)
        fv[fin] = np.asarray(source.evaluate(tm[fin]), dtype=np.float64)
        # per-subject cumulative thresholds; padding columns threshold at 1 so
        # a padded column can never be counted when drawing the category
        cum = np.where(fin, fv, 1.0)
        self.cum = np.maximum.accumulate(np.clip(cum, 0.0, 1.0), axis=1)
        self.rows = np.arange(self.n)

    def categories(self, u: NDArray[np.float64]) -> NDArray[np.intp]:
        return 1 + np.sum(u[:, None] >= self.cum, axis=1)

    def intervals_from(self, cat: NDArray[np.intp]) -> tuple[NDArray, NDArray]:
        l = np.where(cat == 1, 0.0, self.tm[self.rows, np.maximum(cat - 2, 0)])
        r = self.tm[self.rows, np.minimum(cat - 1, self.tm.shape[1] - 1)]
        r = np.where(cat - 1 < self.tm.shape[1], r, np.inf)
        return l, r

    def refit_value(self, u: NDArray[np.float64]) -> float:
        l, r = self.intervals_from(self.categories(u))
        ls, rs, p, _, _ = _npmle_lr(l, r, self.tol, self.max_iter)
        idx = int(np.searchsorted(rs, self.t0, side="right"))
        return float(np.cumsum(p)[idx - 1]) if idx > 0 else 0.0

    def refit_dist(self, u: NDArray[np.float64]) -> StepDistribution:
        l, r = self.intervals_from(self.categories(u))
        ls, rs, p, _, _ = _npmle_lr(l, r, self.tol, self.max_iter)
        keep = (p > 0) & np.isfinite(rs)
        return StepDistribution(rs[keep], p[keep])


class _Case2Plan:
    """One-step refits: all per-category increments are precomputable because
    the examination times never change across replicates."""

    def __init__(self, subjects: Sequence[MixedCaseSubject], source: EvaluableDistribution, t0: float):
        subjects = _canonical_subjects(subjects)
        n = len(subjects)
        t1 = np.empty(n)
        t2 = np.empty(n)
        for i, s in enumerate(subjects):
            if len(s.times) != 2:
                raise ValueError("case2 mode requires exactly two examination times per subject")
            t1[i], t2[i] = s.times
        f1 = np.asarray(source.evaluate(t1), dtype=np.float64)
        f2 = np.asarray(source.evaluate(t2), dtype=np.float64)
        f2 = np.maximum(f1, f2)
        self.f1 = f1
        self.f2 = f2
        self.grid, idx = np.unique(np.concatenate([t1, t2]), return_inverse=True)
        self.i1 = idx[:n]
        self.i2 = idx[n:]
        # a category with zero cell probability is never drawn, so its inf
        # weights are unreachable; zero them to keep the arithmetic clean
        with np.errstate(divide="ignore"):
            inv1 = np.where(f1 > 0.0, 1.0 / f1, 0.0)
            inv2 = np.where(f2 > f1, 1.0 / (f2 - f1), 0.0)
            inv3 = np.where(f2 < 1.0, 1.0 / (1.0 - f2), 0.0)
        self.w_c1 = inv1 * inv1
        self.v_c1 = f1 * self.w_c1 + inv1
        self.w_c2 = inv2 * inv2
        self.v_c2_t1 = f1 * self.w_c2 - inv2
        self.v_c2_t2 = f2 * self.w_c2 + inv2
        self.w_c3 = inv3 * inv3
        self.v_c3 = f2 * self.w_c3 - inv3
        self.t0 = t0

    def refit_value(self, u: NDArray[np.float64]) -> float:
        cat = 1 + (u >= self.f1).astype(np.intp) + (u >= self.f2).astype(np.intp)
        g = self.grid.size
        dw2 = np.zeros(g)
        dv = np.zeros(g)
        m1 = cat == 1
        m2 = cat == 2
        m3 = cat == 3
        np.add.at(dw2, self.i1[m1], self.w_c1[m1])
        np.add.at(dv, self.i1[m1], self.v_c1[m1])
        np.add.at(dw2, self.i1[m2], self.w_c2[m2])
        np.add.at(dv, self.i1[m2], self.v_c2_t1[m2])
        np.add.at(dw2, self.i2[m2], self.w_c2[m2])
        np.add.at(dv, self.i2[m2], self.v_c2_t2[m2])
        np.add.at(dw2, self.i2[m3], self.w_c3[m3])
        np.add.at(dv, self.i2[m3], self.v_c3[m3])
        keep = dw2 > 0
        if not keep.any():
            return 0.0
        w = np.ascontiguousarray(dw2[keep])
        slopes = np.clip(_pava_fit(np.ascontiguousarray(dv[keep] / w), w), 0.0, 1.0)
        pos = int(np.searchsorted(self.grid[keep], self.t0, side="right"))
        return float(slopes[pos - 1]) if pos > 0 else 0.0


# ---------------------------------------------------------------------------
# bootstrap roots
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BootstrapResult:
    """Roots and centering values of one bootstrap run.

    ``roots`` holds the successful replicates (length ``B - failures``):
    ``rate * (refit(t0) - source_value)`` with ``rate = n^{1/3}`` for current
    status / mixed refits and ``(n log n)^{1/3}`` for case-2 one-step refits.
    ``source_value`` is the resampling source at ``t0`` (the root center) and
    ``estimate`` the NPMLE of the original data at ``t0``.  ``ci_center`` is
    what :func:`basic_ci` inverts around; its default is mode-dependent (the
    source value for current-status runs, the NPMLE for mixed and case-2
    runs — the choices that calibrate each model's intervals), and coverage
    experiments may replace it via :meth:`with_center`.
    """

    roots: NDArray[np.float64]
    source_value: float
    estimate: float
    ci_center: float
    rate: float
    B: int
    failures: int
    seed: int
    t0: float
    scheme: BootstrapScheme

    def with_center(self, center: float) -> "BootstrapResult":
        """Copy of the result with a different CI center."""
        return replace(self, ci_center=float(center))


Dataset = Union[CurrentStatusSample, Sequence[MixedCaseSubject], Sequence[CensoringInterval]]


def _as_subjects(data: Sequence) -> list[MixedCaseSubject]:
    out = []
    for item in data:
        if isinstance(item, MixedCaseSubject):
            out.append(item)
        elif isinstance(item, CensoringInterval):
            out.append(subject_from_interval(item))
        else:
            raise TypeError(f"cannot interpret {type(item).__name__} as a subject")
    return out


def _base_npmle(data: Dataset, mode: str) -> StepDistribution:
    if mode == "current-status":
        return npmle_current_status(data)
    subjects = _as_subjects(data)
    return npmle_interval_censored([reduce_to_interval(s) for s in subjects])


def _resolve_mode(data: Dataset, mode: str | None) -> str:
    if isinstance(data, CurrentStatusSample):
        if mode not in (None, "current-status"):
            raise ValueError(f"mode {mode!r} incompatible with current status data")
        return "current-status"
    if mode is None:
        return "mixed"
    if mode not in ("mixed", "case2"):
        raise ValueError(f"unknown mode {mode!r}")
    return mode


def bootstrap_roots(
    data: Dataset,
    t0: float,
    scheme: BootstrapScheme,
    B: int,
    seed: int,
    *,
    mode: str | None = None,
    n_jobs: int | None = None,
) -> BootstrapResult:
    """Model-based bootstrap roots at ``t0``.

    Per replicate, every subject's category is redrawn from the scheme's
    fitted source (holding examination times fixed) and the estimator is
    refitted: the full NPMLE for ``mode="current-status"`` and ``"mixed"``
    (rate ``n^{1/3}``), the one-step estimator started at the source for
    ``mode="case2"`` (rate ``(n log n)^{1/3}``).  ``mode`` defaults to the
    data's natural mode ("current-status" for a :class:`CurrentStatusSample`,
    otherwise "mixed"); case-2 mode is never inferred and must be requested.

    A replicate whose refit fails is retried once on a derived stream and then
    marked failed; more than ``MAX_FAILURE_FRACTION`` failures aborts.
    Results are deterministic given ``(data, scheme, B, seed)``.
    """
    if B < 1:
        raise ValueError("B must be >= 1")
    mode = _resolve_mode(data, mode)
    if mode != "current-status":
        # fit in canonical order too: summation order must not leak into roots
        data = _canonical_subjects(_as_subjects(data))
    base = _base_npmle(data, mode)
    source = _source_from(base, scheme)
    n = len(data)
    if mode == "case2":
        rate = (n * math.log(n)) ** (1.0 / 3.0) if n > 1 else 1.0
        plan = _Case2Plan(_as_subjects(data), source, t0)
    elif mode == "mixed":
        rate = n ** (1.0 / 3.0)
        plan = _MixedPlan(_as_subjects(data), source, t0)
    else:
        rate = n ** (1.0 / 3.0)
        plan = _CurrentStatusPlan(data, source, t0)
    source_value = float(np.asarray(source.evaluate(np.float64(t0))))
    estimate = float(np.asarray(base.evaluate(np.float64(t0))))

    def one(b: int) -> float:
        for attempt, key in enumerate(((1, b), (1, b, 1))):
            u = stream(seed, *key).random(n)
            try:
                return rate * (plan.refit_value(u) - source_value)
            except (NonConvergenceError, DegenerateSourceError):
                if attempt == 1:
                    return math.nan
        return math.nan  # pragma: no cover

    roots = np.asarray(_run_indexed(one, B, _resolve_jobs(n_jobs)))
    bad = np.isnan(roots)
    failures = int(bad.sum())
    if failures > MAX_FAILURE_FRACTION * B:
        raise RuntimeError(
            f"{failures}/{B} bootstrap replicates failed (> {MAX_FAILURE_FRACTION:.0%})"
        )
    return BootstrapResult(
        roots=roots[~bad],
        source_value=source_value,
        estimate=estimate,
        ci_center=source_value if mode == "current-status" else estimate,
        rate=float(rate),
        B=B,
        failures=failures,
        seed=seed,
        t0=t0,
        scheme=scheme,
    )


# ---------------------------------------------------------------------------
# confidence interval
# ---------------------------------------------------------------------------


def basic_ci(result: BootstrapResult, level: float) -> tuple[float, float]:
    """Root-inversion ("basic") confidence interval for F(t0).

    ``[c - q_{1-a/2}/rate, c - q_{a/2}/rate]`` with ``q`` the type-7 empirical
    quantiles of the roots, ``c`` the result's ``ci_center`` and
    ``a = 1 - level``; endpoints are clamped to [0, 1].  Refuses to work from
    fewer than 20 roots (quantiles too unstable).
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    if result.roots.size < 20:
        raise ValueError(
            f"refusing a CI from {result.roots.size} roots (need at least 20)"
        )
    alpha = 1.0 - level
    qlo, qhi = np.quantile(result.roots, [alpha / 2.0, 1.0 - alpha / 2.0])
    lo = min(max(result.ci_center - qhi / result.rate, 0.0), 1.0)
    hi = min(max(result.ci_center - qlo / result.rate, 0.0), 1.0)
    return float(lo), float(hi)


# ---------------------------------------------------------------------------
# bandwidth selection
# ---------------------------------------------------------------------------


def bmse_curve(
    data: Dataset,
    t0: float,
    source: BootstrapScheme,
    h_grid: ArrayLike,
    B: int,
    seed: int,
    *,
    n_jobs: int | None = None,
) -> list[tuple[float, float]]:
    """Bootstrap MSE of the smoothed estimator at ``t0`` over a bandwidth grid.

    ``BMSE(h) = mean_b (Fsmooth*_{n,h}(t0) - c)^2`` where each replicate
    redraws all responses from the ``source`` scheme's fitted distribution,
    ``Fsmooth*`` is the kernel smooth of the replicate's full NPMLE, and the
    center ``c`` is the source evaluated at ``t0`` (NPMLE value for
    :class:`FromNPMLE`, smoothed value at the pilot bandwidth for
    :class:`FromSMLE`).  The same ``B`` resampled datasets serve every ``h``
    (common random numbers), so curves over ``h`` are directly comparable.
    """
    hs = np.asarray(h_grid, dtype=np.float64)
    if hs.ndim != 1 or hs.size == 0 or np.any(hs <= 0):
        raise ValueError("h_grid must be a nonempty sequence of positive bandwidths")
    if B < 1:
        raise ValueError("B must be >= 1")
    mode = _resolve_mode(data, None)
    if mode != "current-status":
        data = _canonical_subjects(_as_subjects(data))
    base = _base_npmle(data, mode)
    src = _source_from(base, source)
    center = float(np.asarray(src.evaluate(np.float64(t0))))
    n = len(data)
    if mode == "current-status":
        plan = _CurrentStatusPlan(data, src, t0)
    else:
        plan = _MixedPlan(_as_subjects(data), src, t0)

    def one(b: int) -> NDArray[np.float64]:
        for attempt, key in enumerate(((1, b), (1, b, 1))):
            u = stream(seed, *key).random(n)
            try:
                dist = plan.refit_dist(u)
            except (NonConvergenceError, DegenerateSourceError):
                if attempt == 1:
                    return np.full(hs.size, np.nan)
                continue
            if dist.support.size == 0:
                vals = np.zeros(hs.size)
            else:
                u_mat = (t0 - dist.support[None, :]) / hs[:, None]
                vals = kernel_cdf(u_mat) @ dist.masses
            return (vals - center) ** 2
        return np.full(hs.size, np.nan)  # pragma: no cover

    rows = np.asarray(_run_indexed(one, B, _resolve_jobs(n_jobs)))
    bad = np.isnan(rows[:, 0])
    failures = int(bad.sum())
    if failures > MAX_FAILURE_FRACTION * B:
        raise RuntimeError(
            f"{failures}/{B} bootstrap replicates failed (> {MAX_FAILURE_FRACTION:.0%})"
        )
    bmse = rows[~bad].mean(axis=0)
    return [(float(h), float(v)) for h, v in zip(hs, bmse)]


def select_bandwidth(curve: Sequence[tuple[float, float]]) -> float:
    """Bandwidth with minimal BMSE; exact ties break toward the smaller h."""
    if len(curve) == 0:
        raise ValueError("empty BMSE curve")
    best_h, best_v = curve[0]
    for h, v in curve[1:]:
        if v < best_v or (v == best_v and h < best_h):
            best_h, best_v = h, v
    return float(best_h)
