"""Non-normal limit distribution: Chernoff's argmin and its scale constants.

The pointwise limit of the cube-root-rate estimators in this package is
``kappa * C`` where ``C = argmin_h { Z(h) + h^2 }`` for a two-sided standard
Brownian motion ``Z`` started at ``Z(0) = 0``, and ``kappa`` collects the
local parameters of the model.  ``simulate_chernoff`` draws from ``C`` by
discretizing both arms of the motion on a fine grid over ``[-L, L]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .bootstrap import stream

__all__ = [
    "ChernoffConfig",
    "empirical_quantile",
    "kappa_case2",
    "kappa_cs",
    "simulate_chernoff",
]

_NS_CHERNOFF = 3
_MAX_GRID = 10_000_000


def kappa_cs(F0: float, f0: float, g0: float) -> float:
    """Scale constant ``(4 F0 (1-F0) f0 / g0)^{1/3}`` of the current status
    NPMLE limit at a point with value ``F0``, event density ``f0`` and
    observation-time density ``g0``."""
    if not 0.0 < F0 < 1.0:
        raise ValueError("F0 must lie strictly between 0 and 1")
    if not f0 > 0.0:
        raise ValueError("event density f0 must be positive")
    if not g0 > 0.0:
        raise ValueError("observation density g0 must be positive")
    return (4.0 * F0 * (1.0 - F0) * f0 / g0) ** (1.0 / 3.0)


def kappa_case2(f0: float, h0: float) -> float:
    """Scale constant ``((3/4) f0^2 / h0)^{1/3}`` of the one-step estimator's
    ``(n log n)^{1/3}`` limit, with ``h0`` the joint density of the two
    examination times on their diagonal at the point of interest."""
    if not f0 > 0.0:
        raise ValueError("event density f0 must be positive")
    if not h0 > 0.0:
        raise ValueError("diagonal density h0 must be positive")
    return (0.75 * f0 * f0 / h0) ** (1.0 / 3.0)


@dataclass(frozen=True)
class ChernoffConfig:
    """Discretization of the two-sided motion: grid step ``step`` on
    ``[-half_width, half_width]``.  The quadratic drift confines the argmin,
    so ``half_width = 4`` already puts the truncation error far below the
    discretization error."""

    half_width: float = 4.0
    step: float = 1e-3
    replicates: int = 100_000
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.half_width / self.step > _MAX_GRID:
            raise ValueError(
                f"grid would exceed {_MAX_GRID} points per side; "
                "increase step or decrease half_width"
            )


def simulate_chernoff(config: ChernoffConfig) -> NDArray[np.float64]:
    """Monte Carlo draws of ``argmin_h { Z(h) + h^2 }``.

    Each replicate builds the two arms of the motion as cumulative sums of
    ``N(0, step)`` increments on the grid ``step, 2*step, ..., half_width``
    (the right arm first, then the left), adds the drift ``h^2``, and takes
    the grid argmin over both arms and the origin.  Ties at the same depth
    are broken toward smaller ``|h|``, and between ``+h`` and ``-h`` toward
    the nonnegative side.  Replicate ``r`` draws only from
    ``stream(seed, 3, r)``, so any subset of replicates is reproducible.
    """
    m = int(round(config.half_width / config.step))
    grid = config.step * np.arange(1, m + 1)
    drift = grid * grid
    sd = math.sqrt(config.step)
    out = np.empty(config.replicates)
    for r in range(config.replicates):
        rng = stream(config.seed, _NS_CHERNOFF, r)
        right = np.cumsum(rng.normal(0.0, sd, m)) + drift
        left = np.cumsum(rng.normal(0.0, sd, m)) + drift
        ir = int(np.argmin(right))
        il = int(np.argmin(left))
        best_h = 0.0
        best_v = 0.0
        for v, h in ((right[ir], grid[ir]), (left[il], -grid[il])):
            if v < best_v or (v == best_v and abs(h) < abs(best_h)):
                best_h, best_v = h, v
        out[r] = best_h
    return out


def empirical_quantile(draws: ArrayLike, q: ArrayLike) -> NDArray[np.float64] | float:
    """Type-7 (linear interpolation) empirical quantiles of ``draws``."""
    arr = np.asarray(draws, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("draws must be a nonempty 1-d array")
    if not np.all(np.isfinite(arr)):
        raise ValueError("draws must be finite")
    qs = np.asarray(q, dtype=np.float64)
    if np.any((qs < 0) | (qs > 1)):
        raise ValueError("quantile levels must lie in [0, 1]")
    res = np.quantile(arr, qs)
    return float(res) if np.isscalar(q) or qs.ndim == 0 else res
