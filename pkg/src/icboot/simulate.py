"""Scenario generators and Monte Carlo experiments.

A :class:`Scenario` couples an event-time law with a censoring design.
``coverage_experiment`` estimates coverage and length of bootstrap confidence
intervals over repeated datasets; the ``figure*`` helpers produce the raw
material for density overlays, quantile trajectories, and bandwidth-selection
curves; ``true_mse_curve`` computes the oracle MSE the bootstrap curves are
judged against.

Stream discipline (master seed ``s``): dataset ``r`` of an experiment uses
``stream(s, 2, r)`` and hands ``child_seed(s, 2, r)`` to its bootstrap run;
the single dataset behind the density overlay uses namespace ``(4, 0)``; the
nested-trajectory draw uses ``(5, 0)`` with bootstrap seeds ``(5, 1+j)``; the
oracle-MSE datasets use ``(6, r)``.  Everything is reproducible from the
master seed alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import special

from .bootstrap import (
    BootstrapScheme,
    FromNPMLE,
    _run_indexed,
    _resolve_jobs,
    basic_ci,
    bootstrap_roots,
    child_seed,
    stream,
)
from .estimators import (
    CurrentStatusSample,
    DegenerateDenominatorError,
    MixedCaseSubject,
    NonConvergenceError,
    icm_one_step,
    kernel_cdf,
    npmle_current_status,
    npmle_interval_censored,
    reduce_to_interval,
)
from .limits import ChernoffConfig, empirical_quantile, kappa_case2, kappa_cs, simulate_chernoff

__all__ = [
    "Case2Design",
    "CoverageReport",
    "CurrentStatusDesign",
    "ExperimentConfig",
    "Exponential",
    "FoldedStandardNormal",
    "MixedCaseDesign",
    "QuantileTrajectory",
    "Scenario",
    "coverage_experiment",
    "figure1_density_data",
    "figure2_quantile_trajectory",
    "sample_scenario",
    "scenario_kappa",
    "true_mse_curve",
]

_NS_DATASET = 2
_NS_FIG1 = 4
_NS_FIG2 = 5
_NS_TRUE_MSE = 6


# ---------------------------------------------------------------------------
# event-time laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Exponential:
    """Exponential event law with the given rate."""

    rate: float = 1.0

    def __post_init__(self) -> None:
        if not self.rate > 0:
            raise ValueError("rate must be positive")

    def cdf(self, t: ArrayLike) -> NDArray[np.float64]:
        tt = np.clip(np.asarray(t, dtype=np.float64), 0.0, None)
        return -np.expm1(-self.rate * tt)

    def pdf(self, t: ArrayLike) -> NDArray[np.float64]:
        tt = np.asarray(t, dtype=np.float64)
        return np.where(tt >= 0.0, self.rate * np.exp(-self.rate * np.clip(tt, 0.0, None)), 0.0)

    def quantile(self, u: ArrayLike) -> NDArray[np.float64]:
        return -np.log1p(-np.asarray(u, dtype=np.float64)) / self.rate

    def evaluate(self, t: ArrayLike) -> NDArray[np.float64]:
        return self.cdf(t)


@dataclass(frozen=True)
class FoldedStandardNormal:
    """Law of |Z| for standard normal Z."""

    def cdf(self, t: ArrayLike) -> NDArray[np.float64]:
        tt = np.clip(np.asarray(t, dtype=np.float64), 0.0, None)
        return special.erf(tt / math.sqrt(2.0))

    def pdf(self, t: ArrayLike) -> NDArray[np.float64]:
        tt = np.asarray(t, dtype=np.float64)
        return np.where(tt >= 0.0, math.sqrt(2.0 / math.pi) * np.exp(-0.5 * tt * tt), 0.0)

    def quantile(self, u: ArrayLike) -> NDArray[np.float64]:
        return math.sqrt(2.0) * special.erfinv(np.asarray(u, dtype=np.float64))

    def evaluate(self, t: ArrayLike) -> NDArray[np.float64]:
        return self.cdf(t)


EventLaw = Union[Exponential, FoldedStandardNormal]


# ---------------------------------------------------------------------------
# censoring designs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CurrentStatusDesign:
    """One examination time per subject, uniform on [0, b]."""

    b: float = 2.0

    def __post_init__(self) -> None:
        if not self.b > 0:
            raise ValueError("b must be positive")


@dataclass(frozen=True)
class Case2Design:
    """Two examination times per subject: order statistics of two U[0, b]."""

    b: float = 2.0

    def __post_init__(self) -> None:
        if not self.b > 0:
            raise ValueError("b must be positive")

    def diagonal_density(self) -> float:
        """Joint density of (T1, T2) on the diagonal (2/b^2 everywhere)."""
        return 2.0 / (self.b * self.b)


@dataclass(frozen=True)
class MixedCaseDesign:
    """K uniform on {1..kmax} examinations: K order statistics of U[0, b]."""

    b: float = 2.0
    kmax: int = 3

    def __post_init__(self) -> None:
        if not self.b > 0:
            raise ValueError("b must be positive")
        if self.kmax < 1:
            raise ValueError("kmax must be >= 1")


Design = Union[CurrentStatusDesign, Case2Design, MixedCaseDesign]


@dataclass(frozen=True)
class Scenario:
    """An event law observed through a censoring design."""

    event: EventLaw
    design: Design


def _natural_mode(design: Design) -> str:
    if isinstance(design, CurrentStatusDesign):
        return "current-status"
    if isinstance(design, Case2Design):
        return "case2"
    return "mixed"


def scenario_kappa(scenario: Scenario, t0: float) -> float:
    """Scale constant of the estimator's limit law for this scenario.

    Mixed-case designs have no known limit; NaN is returned for them.
    """
    f0 = float(scenario.event.pdf(t0))
    design = scenario.design
    if isinstance(design, CurrentStatusDesign):
        return kappa_cs(float(scenario.event.cdf(t0)), f0, 1.0 / design.b)
    if isinstance(design, Case2Design):
        return kappa_case2(f0, design.diagonal_density())
    return math.nan


# ---------------------------------------------------------------------------
# dataset sampling
# ---------------------------------------------------------------------------

_TINY = np.finfo(np.float64).tiny


def sample_scenario(
    scenario: Scenario, n: int, rng: np.random.Generator
) -> Union[CurrentStatusSample, list[MixedCaseSubject]]:
    """Draw ``n`` subjects: latent event times first, then examination times.

    Only the observed quantities are returned (times and categories / current
    status indicators); the latent times are consumed and discarded.  Mixed
    case subjects draw a fixed budget of ``kmax`` uniforms each (the first K
    are used), and exactly tied examination times are deduplicated.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    x = np.asarray(scenario.event.quantile(rng.random(n)), dtype=np.float64)
    design = scenario.design
    if isinstance(design, CurrentStatusDesign):
        t = design.b * rng.random(n)
        return CurrentStatusSample(t, x <= t)
    if isinstance(design, Case2Design):
        t = design.b * np.sort(rng.random((n, 2)), axis=1)
        t = np.maximum(t, _TINY)
        same = t[:, 1] <= t[:, 0]
        t[same, 1] = np.nextafter(t[same, 0], np.inf)
        cat = 1 + (x > t[:, 0]).astype(int) + (x > t[:, 1]).astype(int)
        return [
            MixedCaseSubject((t[i, 0], t[i, 1]), int(cat[i])) for i in range(n)
        ]
    k = rng.integers(1, design.kmax + 1, size=n)
    u = rng.random((n, design.kmax))
    subjects = []
    for i in range(n):
        tm = np.unique(np.maximum(design.b * u[i, : k[i]], _TINY))
        cat = int(np.searchsorted(tm, x[i], side="left")) + 1
        subjects.append(MixedCaseSubject(tuple(tm), cat))
    return subjects


def _prefix(data, n: int):
    if isinstance(data, CurrentStatusSample):
        return CurrentStatusSample(data.times[:n], data.delta[:n])
    return data[:n]


# ---------------------------------------------------------------------------
# coverage experiments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """One coverage experiment: ``reps`` datasets, one bootstrap CI each."""

    scenario: Scenario
    n: int
    t0: float
    level: float = 0.9
    scheme: BootstrapScheme = FromNPMLE()
    B: int = 500
    reps: int = 500
    seed: int = 0
    mode: str | None = None  # None: the design's natural bootstrap mode

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must be in (0, 1)")
        if self.B < 1 or self.reps < 1:
            raise ValueError("B and reps must be >= 1")


@dataclass(frozen=True)
class CoverageReport:
    """Coverage proportion and mean CI length over the successful replications."""

    coverage: float
    mean_length: float
    reps: int
    failures: int
    level: float
    truth: float
    n: int
    t0: float


def _ci_for_dataset(data, cfg: ExperimentConfig, mode: str, bseed: int) -> tuple[float, float]:
    res = bootstrap_roots(data, cfg.t0, cfg.scheme, cfg.B, bseed, mode=mode)
    if mode == "case2":
        # the object under study is the one-step estimator started at the
        # truth (the estimator the limit theory describes); its bootstrap
        # analogue starts at the fitted source, which bootstrap_roots did
        center = icm_one_step(data, cfg.scenario.event).evaluate(cfg.t0)
        res = res.with_center(float(np.asarray(center)))
    return basic_ci(res, cfg.level)


def coverage_experiment(cfg: ExperimentConfig, *, n_jobs: int | None = None) -> CoverageReport:
    """Estimated coverage and mean length of the bootstrap CI at ``cfg.t0``.

    Dataset ``r`` is drawn from ``stream(seed, 2, r)`` and bootstrapped with
    master seed ``child_seed(seed, 2, r)``; a replication whose estimator or
    bootstrap fails is counted in ``failures`` and excluded from the
    proportions.  Deterministic given the config.
    """
    truth = float(np.asarray(cfg.scenario.event.cdf(cfg.t0)))
    mode = cfg.mode if cfg.mode is not None else _natural_mode(cfg.scenario.design)

    def one(r: int) -> tuple[float, float]:
        data = sample_scenario(cfg.scenario, cfg.n, stream(cfg.seed, _NS_DATASET, r))
        try:
            lo, hi = _ci_for_dataset(data, cfg, mode, child_seed(cfg.seed, _NS_DATASET, r))
        except (RuntimeError, ValueError, NonConvergenceError, DegenerateDenominatorError):
            return (math.nan, math.nan)
        return (1.0 if lo <= truth <= hi else 0.0, hi - lo)

    rows = np.asarray(_run_indexed(one, cfg.reps, _resolve_jobs(n_jobs)))
    ok = ~np.isnan(rows[:, 0])
    failures = int((~ok).sum())
    if not ok.any():
        raise RuntimeError("every replication failed; nothing to report")
    return CoverageReport(
        coverage=float(rows[ok, 0].mean()),
        mean_length=float(rows[ok, 1].mean()),
        reps=cfg.reps,
        failures=failures,
        level=cfg.level,
        truth=truth,
        n=cfg.n,
        t0=cfg.t0,
    )


# ---------------------------------------------------------------------------
# figure data
# ---------------------------------------------------------------------------


def _estimate_at(data, mode: str, t0: float, event: EventLaw | None = None) -> float:
    if mode == "current-status":
        return float(np.asarray(npmle_current_status(data).evaluate(np.float64(t0))))
    if mode == "case2":
        # truth-started one-step (the estimator with the known limit law)
        return float(np.asarray(icm_one_step(data, event).evaluate(np.float64(t0))))
    dist = npmle_interval_censored([reduce_to_interval(s) for s in data])
    return float(np.asarray(dist.evaluate(np.float64(t0))))


def _rate(mode: str, n: int) -> float:
    if mode == "case2":
        return (n * math.log(n)) ** (1.0 / 3.0)
    return n ** (1.0 / 3.0)


def figure1_density_data(
    cfg: ExperimentConfig, *, n_jobs: int | None = None
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Raw roots behind the density overlay: Monte Carlo vs bootstrap.

    ``mc_roots`` holds ``reps`` scaled estimation errors from fresh datasets;
    ``boot_roots`` holds the ``B`` bootstrap roots of one further dataset
    (drawn in its own stream namespace) under ``cfg.scheme``.
    """
    truth = float(np.asarray(cfg.scenario.event.cdf(cfg.t0)))
    mode = cfg.mode if cfg.mode is not None else _natural_mode(cfg.scenario.design)
    rate = _rate(mode, cfg.n)

    def one(r: int) -> float:
        data = sample_scenario(cfg.scenario, cfg.n, stream(cfg.seed, _NS_DATASET, r))
        try:
            return rate * (_estimate_at(data, mode, cfg.t0, cfg.scenario.event) - truth)
        except (NonConvergenceError, DegenerateDenominatorError):
            return math.nan

    mc = np.asarray(_run_indexed(one, cfg.reps, _resolve_jobs(n_jobs)))
    mc = mc[~np.isnan(mc)]
    data0 = sample_scenario(cfg.scenario, cfg.n, stream(cfg.seed, _NS_FIG1, 0))
    res = bootstrap_roots(
        data0, cfg.t0, cfg.scheme, cfg.B, child_seed(cfg.seed, _NS_FIG1, 0),
        mode=mode, n_jobs=n_jobs,
    )
    return mc, res.roots


@dataclass(frozen=True)
class QuantileTrajectory:
    """Bootstrap q95 per sample size along one growing data sequence, plus
    the limit-law reference value kappa * q95(C)."""

    points: tuple[tuple[int, float], ...]
    reference: float

    def __len__(self) -> int:
        return len(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def __iter__(self) -> Iterator[tuple[int, float]]:
        return iter(self.points)


@lru_cache(maxsize=8)
def _chernoff_q95(replicates: int = 100_000, seed: int = 0) -> float:
    draws = simulate_chernoff(ChernoffConfig(replicates=replicates, seed=seed))
    return float(empirical_quantile(draws, 0.95))


def figure2_quantile_trajectory(
    scenario: Scenario,
    t0: float,
    scheme: BootstrapScheme,
    n_grid: Sequence[int],
    B: int,
    seed: int,
    *,
    n_jobs: int | None = None,
) -> QuantileTrajectory:
    """0.95 bootstrap-root quantile along one nested data sequence.

    One dataset of size ``max(n_grid)`` is drawn; each grid size uses its
    prefix, so each larger dataset extends the smaller one.  The reference
    is ``kappa * q95(C)`` for the scenario's limit law (NaN for mixed-case
    designs, whose limit is unknown).
    """
    ns = [int(n) for n in n_grid]
    if len(ns) == 0 or any(b <= a for a, b in zip(ns, ns[1:])) or ns[0] < 1:
        raise ValueError("n_grid must be increasing positive sample sizes")
    mode = _natural_mode(scenario.design)
    full = sample_scenario(scenario, ns[-1], stream(seed, _NS_FIG2, 0))
    points = []
    for j, n in enumerate(ns):
        res = bootstrap_roots(
            _prefix(full, n), t0, scheme, B, child_seed(seed, _NS_FIG2, 1 + j),
            mode=mode, n_jobs=n_jobs,
        )
        points.append((n, float(np.quantile(res.roots, 0.95))))
    kappa = scenario_kappa(scenario, t0)
    reference = kappa * _chernoff_q95() if math.isfinite(kappa) else math.nan
    return QuantileTrajectory(points=tuple(points), reference=reference)


def true_mse_curve(
    scenario: Scenario,
    n: int,
    t0: float,
    h_grid: ArrayLike,
    reps: int,
    seed: int,
    *,
    n_jobs: int | None = None,
) -> list[tuple[float, float]]:
    """Oracle MSE of the smoothed estimator at ``t0`` per bandwidth.

    Averages ``(Fsmooth_{n,h}(t0) - F(t0))^2`` over ``reps`` fresh datasets
    (stream namespace ``(6, r)``), sharing each dataset across the whole
    bandwidth grid.
    """
    hs = np.asarray(h_grid, dtype=np.float64)
    if hs.ndim != 1 or hs.size == 0 or np.any(hs <= 0):
        raise ValueError("h_grid must be a nonempty sequence of positive bandwidths")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    truth = float(np.asarray(scenario.event.cdf(t0)))
    mode = _natural_mode(scenario.design)

    def one(r: int) -> NDArray[np.float64]:
        data = sample_scenario(scenario, n, stream(seed, _NS_TRUE_MSE, r))
        if mode == "current-status":
            dist = npmle_current_status(data)
        else:
            dist = npmle_interval_censored([reduce_to_interval(s) for s in data])
        if dist.support.size == 0:
            vals = np.zeros(hs.size)
        else:
            vals = kernel_cdf((t0 - dist.support[None, :]) / hs[:, None]) @ dist.masses
        return (vals - truth) ** 2

    rows = np.asarray(_run_indexed(one, reps, _resolve_jobs(n_jobs)))
    mse = rows.mean(axis=0)
    return [(float(h), float(v)) for h, v in zip(hs, mse)]
