"""Greatest convex minorant slopes and weighted isotonic regression.

This is the optimization kernel shared by every estimator in the package:
the distribution-function estimators for censored data are all computed as
left derivatives of the greatest convex minorant (GCM) of a cumulative sum
diagram, which is the same thing as a weighted isotonic regression of the
diagram's chord slopes.

All functions here are pure and operate on immutable inputs; they are safe
to call concurrently from any number of threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

__all__ = ["CusumDiagram", "IsotonicFit", "gcm_left_slopes", "isotonic_weighted", "pava"]

#: absolute tolerance for floating-point comparisons on diagram coordinates
ABS_TOL = 1e-12


def _pava_fit(y: NDArray[np.float64], w: NDArray[np.float64]) -> NDArray[np.float64]:
    # Linear-time stack-based pool-adjacent-violators. Blocks are kept on an
    # implicit stack (value / weight / length triples); a new element is pushed
    # and then merged backwards while it undercuts the block below it.
    n = y.shape[0]
    val = np.empty(n)
    wgt = np.empty(n)
    cnt = np.empty(n, dtype=np.int64)
    top = 0
    for i in range(n):
        val[top] = y[i]
        wgt[top] = w[i]
        cnt[top] = 1
        while top > 0 and val[top - 1] > val[top]:
            tw = wgt[top - 1] + wgt[top]
            val[top - 1] = (wgt[top - 1] * val[top - 1] + wgt[top] * val[top]) / tw
            wgt[top - 1] = tw
            cnt[top - 1] += cnt[top]
            top -= 1
        top += 1
    out = np.empty(n)
    pos = 0
    for b in range(top):
        for _ in range(cnt[b]):
            out[pos] = val[b]
            pos += 1
    return out


try:  # pragma: no cover - exercised implicitly whenever numba is installed
    import numba

    _pava_fit = numba.njit("float64[:](float64[:], float64[:])", cache=True)(_pava_fit)
except ImportError:  # pragma: no cover
    pass


def pava(values: ArrayLike, weights: ArrayLike | None = None) -> NDArray[np.float64]:
    """Weighted isotonic regression via pool-adjacent-violators.

    Returns the nondecreasing vector minimizing ``sum(w * (fit - values)**2)``.
    ``weights`` defaults to all ones.
    """
    y = np.ascontiguousarray(values, dtype=np.float64)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("values must be a nonempty 1-d sequence")
    if weights is None:
        w = np.ones_like(y)
    else:
        w = np.ascontiguousarray(weights, dtype=np.float64)
        if w.shape != y.shape:
            raise ValueError(f"weights length {w.size} != values length {y.size}")
        if np.any(w <= 0):
            raise ValueError("all weights must be positive")
    return _pava_fit(y, w)


@dataclass(frozen=True)
class CusumDiagram:
    """A cumulative sum diagram: an origin point followed by points with
    strictly increasing x.

    Parameters
    ----------
    x : array
        Abscissae including the origin, strictly increasing.
    y : array
        Ordinates including the origin, same length as ``x``.
    """

    x: NDArray[np.float64]
    y: NDArray[np.float64]

    def __init__(self, x: ArrayLike, y: ArrayLike) -> None:
        xa = np.asarray(x, dtype=np.float64)
        ya = np.asarray(y, dtype=np.float64)
        if xa.ndim != 1 or xa.shape != ya.shape:
            raise ValueError("x and y must be 1-d arrays of equal length")
        if xa.size < 2:
            raise ValueError("diagram needs the origin plus at least one point")
        if not np.all(np.diff(xa) > ABS_TOL):
            raise ValueError("diagram x coordinates must be strictly increasing")
        if not (np.all(np.isfinite(xa)) and np.all(np.isfinite(ya))):
            raise ValueError("diagram coordinates must be finite")
        object.__setattr__(self, "x", xa)
        object.__setattr__(self, "y", ya)

    @classmethod
    def from_increments(
        cls, dx: ArrayLike, dy: ArrayLike, origin: tuple[float, float] = (0.0, 0.0)
    ) -> "CusumDiagram":
        """Build a diagram from positive x-increments and y-increments."""
        dxa = np.asarray(dx, dtype=np.float64)
        dya = np.asarray(dy, dtype=np.float64)
        x = np.concatenate(([origin[0]], origin[0] + np.cumsum(dxa)))
        y = np.concatenate(([origin[1]], origin[1] + np.cumsum(dya)))
        return cls(x, y)


@dataclass(frozen=True)
class IsotonicFit:
    """Result of a weighted isotonic regression.

    Attributes
    ----------
    values : array
        Fitted nondecreasing values.
    weights : array
        The (positive) weights the fit was computed under.
    """

    values: NDArray[np.float64]
    weights: NDArray[np.float64]


def gcm_left_slopes(diagram: CusumDiagram) -> NDArray[np.float64]:
    """Left derivatives of the greatest convex minorant of a diagram.

    The GCM is the largest convex function lying below all diagram points;
    its left derivative at each non-origin point equals the weighted isotonic
    regression of the chord slopes with the x-increments as weights, which is
    how it is computed here.  The returned slopes are nondecreasing.
    """
    dx = np.diff(diagram.x)
    dy = np.diff(diagram.y)
    return _pava_fit(np.ascontiguousarray(dy / dx), np.ascontiguousarray(dx))


def isotonic_weighted(values: ArrayLike, weights: ArrayLike) -> IsotonicFit:
    """Weighted least-squares isotonic regression.

    Minimizes ``sum(weights * (fit - values)**2)`` over nondecreasing ``fit``.
    Equivalent to :func:`gcm_left_slopes` on the diagram with
    x = cumulative weights and y = cumulative weighted values.
    """
    w = np.ascontiguousarray(weights, dtype=np.float64)
    fitted = pava(values, w)
    return IsotonicFit(values=fitted, weights=w)
