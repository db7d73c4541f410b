"""Distribution-function estimators for interval-censored event times.

Covers the three observation schemes:

- current status (one examination time per subject, status indicator only),
- case 2 (exactly two examination times, three possible categories),
- mixed case (a random number of examination times; reduced to censoring
  intervals and maximized by the iterative convex minorant algorithm).

plus the kernel-smoothed maximum likelihood estimator (SMLE) built on top of
any of the step-function estimates.

All estimators are pure functions of their inputs; callers may parallelize
across replicates freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .gcm import _pava_fit, pava

__all__ = [
    "CensoringInterval",
    "CurrentStatusSample",
    "DegenerateDenominatorError",
    "EvaluableDistribution",
    "MixedCaseSubject",
    "NonConvergenceError",
    "SmoothedDistribution",
    "StepDistribution",
    "check_local_linearity",
    "icm_one_step",
    "kernel_cdf",
    "kernel_density",
    "npmle_current_status",
    "npmle_interval_censored",
    "reduce_to_interval",
    "smle_eval",
    "subject_from_interval",
    "turnbull_support",
]

#: probabilities are clamped to this floor inside likelihoods and one-step
#: denominators to avoid division blowups on degenerate float inputs
PROB_FLOOR = 1e-12


class NonConvergenceError(RuntimeError):
    """Iterative fit did not reach the requested tolerance.

    Carries the last iterate (``last``, a :class:`StepDistribution`), the
    maximum Fenchel violation reached (``violation``) and the iteration count.
    """

    def __init__(self, message: str, last: "StepDistribution", violation: float, iterations: int):
        super().__init__(message)
        self.last = last
        self.violation = violation
        self.iterations = iterations


class DegenerateDenominatorError(ValueError):
    """A one-step weight denominator vanished (e.g. the starting distribution
    puts zero mass where an observed category requires positive mass)."""


@runtime_checkable
class EvaluableDistribution(Protocol):
    """Anything that can be evaluated as a distribution function."""

    def evaluate(self, t: ArrayLike) -> NDArray[np.float64] | float: ...


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------


class CurrentStatusSample:
    """Current status observations ``(T_i, delta_i)``.

    Parameters
    ----------
    times : array of float
        Examination times, finite and nonnegative.
    delta : array of {0, 1}
        ``delta_i = 1`` when the event had already occurred at ``T_i``.
    """

    __slots__ = ("times", "delta")

    def __init__(self, times: ArrayLike, delta: ArrayLike) -> None:
        t = np.asarray(times, dtype=np.float64)
        d = np.asarray(delta)
        if t.ndim != 1 or t.size == 0:
            raise ValueError("times must be a nonempty 1-d sequence")
        if d.shape != t.shape:
            raise ValueError("times and delta must have equal length")
        if not np.all(np.isfinite(t)) or np.any(t < 0):
            raise ValueError("examination times must be finite and >= 0")
        if not np.all((d == 0) | (d == 1)):
            raise ValueError("delta values must be 0 or 1")
        self.times = t
        self.delta = d.astype(np.uint8)

    def __len__(self) -> int:
        return self.times.size


@dataclass(frozen=True)
class MixedCaseSubject:
    """One subject under mixed-case interval censoring.

    ``times`` are the K examination times (strictly increasing, positive);
    ``category`` is the index k* in 1..K+1 of the unique interval
    ``(T_{k-1}, T_k]`` (with T_0 = 0, T_{K+1} = +inf) containing the event.
    """

    times: tuple[float, ...]
    category: int

    def __post_init__(self) -> None:
        if len(self.times) == 0:
            raise ValueError("subject needs at least one examination time")
        ts = np.asarray(self.times, dtype=np.float64)
        if not np.all(np.isfinite(ts)) or ts[0] <= 0:
            raise ValueError("examination times must be finite and positive")
        if np.any(np.diff(ts) <= 0):
            raise ValueError("examination times must be strictly increasing")
        if not 1 <= self.category <= len(self.times) + 1:
            raise ValueError(
                f"category {self.category} outside 1..{len(self.times) + 1}"
            )


@dataclass(frozen=True)
class CensoringInterval:
    """Half-open interval ``(l, r]`` known to contain the event time.

    ``r`` may be ``math.inf`` (event after the last examination).
    """

    l: float
    r: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.l) and self.l >= 0):
            raise ValueError("left endpoint must be finite and >= 0")
        if not self.l < self.r:
            raise ValueError(f"need l < r, got ({self.l}, {self.r})")


class StepDistribution:
    """Nondecreasing right-continuous step function on [0, inf) with values
    in [0, 1].

    Parameters
    ----------
    support : array
        Strictly increasing jump locations (may be empty).
    masses : array
        Positive jump masses; the total may be < 1 (mass assigned beyond the
        largest observation stays unassigned).

    Evaluation at ``t`` returns the sum of masses at locations <= t.
    """

    __slots__ = ("support", "masses", "cumulative")

    def __init__(self, support: ArrayLike, masses: ArrayLike) -> None:
        s = np.asarray(support, dtype=np.float64)
        p = np.asarray(masses, dtype=np.float64)
        if s.shape != p.shape or s.ndim != 1:
            raise ValueError("support and masses must be 1-d arrays of equal length")
        if s.size:
            if np.any(np.diff(s) <= 0):
                raise ValueError("support must be strictly increasing")
            if not np.all(np.isfinite(s)) or s[0] < 0:
                raise ValueError("support points must be finite and >= 0")
            if np.any(p <= 0):
                raise ValueError("all masses must be positive")
        cum = np.cumsum(p)
        if cum.size and cum[-1] > 1.0 + 1e-9:
            raise ValueError(f"total mass {cum[-1]} exceeds 1")
        self.support = s
        self.masses = p
        self.cumulative = np.minimum(cum, 1.0)

    @classmethod
    def from_cdf_values(cls, times: ArrayLike, values: ArrayLike) -> "StepDistribution":
        """Build from nondecreasing cdf values at strictly increasing times;
        zero increments produce no jump."""
        t = np.asarray(times, dtype=np.float64)
        v = np.asarray(values, dtype=np.float64)
        inc = np.diff(v, prepend=0.0)
        keep = inc > 1e-15
        return cls(t[keep], inc[keep])

    @property
    def total_mass(self) -> float:
        return float(self.cumulative[-1]) if self.masses.size else 0.0

    def evaluate(self, t: ArrayLike) -> NDArray[np.float64] | float:
        """Right-continuous cdf value(s) at ``t``."""
        ta = np.asarray(t, dtype=np.float64)
        idx = np.searchsorted(self.support, ta, side="right")
        cum = np.concatenate(([0.0], self.cumulative))
        out = cum[idx]
        return float(out) if ta.ndim == 0 else out


# ---------------------------------------------------------------------------
# biweight kernel
# ---------------------------------------------------------------------------


def kernel_cdf(u: ArrayLike) -> NDArray[np.float64] | float:
    """Integrated biweight kernel.

    0 for u <= -1, 1 for u >= 1, else
    (15/16)(u - 2u^3/3 + u^5/5 + 8/15).
    """
    ua = np.asarray(u, dtype=np.float64)
    c = np.clip(ua, -1.0, 1.0)
    c2 = c * c
    out = 0.9375 * (c * (1.0 - c2 * (2.0 / 3.0 - 0.2 * c2)) + 8.0 / 15.0)
    out = np.clip(out, 0.0, 1.0)  # the polynomial leaves float dust at +-1
    return float(out) if ua.ndim == 0 else out


def kernel_density(u: ArrayLike) -> NDArray[np.float64] | float:
    """Biweight kernel density (15/16)(1 - u^2)^2 on [-1, 1]."""
    ua = np.asarray(u, dtype=np.float64)
    out = np.where(np.abs(ua) <= 1.0, 0.9375 * (1.0 - ua * ua) ** 2, 0.0)
    return float(out) if ua.ndim == 0 else out


class SmoothedDistribution:
    """Kernel-smoothed maximum likelihood estimator.

    The smooth of ``base`` with bandwidth ``h`` evaluates to
    ``sum_j p_j * Kbar((t - s_j) / h)`` over the base jumps ``(s_j, p_j)``.
    """

    __slots__ = ("base", "bandwidth")

    def __init__(self, base: StepDistribution, bandwidth: float) -> None:
        if not bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        self.base = base
        self.bandwidth = float(bandwidth)

    def evaluate(self, t: ArrayLike) -> NDArray[np.float64] | float:
        ta = np.asarray(t, dtype=np.float64)
        s = self.base.support
        if s.size == 0:
            out = np.zeros(ta.shape)
            return float(out) if ta.ndim == 0 else out
        u = (np.atleast_1d(ta)[:, None] - s[None, :]) / self.bandwidth
        out = kernel_cdf(u) @ self.base.masses
        return float(out[0]) if ta.ndim == 0 else out


def smle_eval(dist: SmoothedDistribution, t: ArrayLike) -> NDArray[np.float64] | float:
    """Evaluate a smoothed distribution at ``t`` (exact Stieltjes form)."""
    return dist.evaluate(t)


# ---------------------------------------------------------------------------
# current status NPMLE
# ---------------------------------------------------------------------------


def npmle_current_status(sample: CurrentStatusSample) -> StepDistribution:
    """NPMLE of the event-time distribution from current status data.

    Computed as the left derivative of the greatest convex minorant of the
    cumulative sum diagram (x = count of T <= t, y = count of events with
    T <= t); observations sharing an examination time are merged first.
    Values are clamped to [0, 1]; jumps occur only at observed times.
    """
    order = np.argsort(sample.times, kind="stable")
    t = sample.times[order]
    d = sample.delta[order].astype(np.float64)
    uniq, start = np.unique(t, return_index=True)
    counts = np.diff(np.append(start, t.size)).astype(np.float64)
    dsum = np.add.reduceat(d, start)
    slopes = _pava_fit(np.ascontiguousarray(dsum / counts), np.ascontiguousarray(counts))
    return StepDistribution.from_cdf_values(uniq, np.clip(slopes, 0.0, 1.0))


# ---------------------------------------------------------------------------
# mixed case -> censoring intervals
# ---------------------------------------------------------------------------


def reduce_to_interval(subject: MixedCaseSubject) -> CensoringInterval:
    """The censoring interval ``(T_{k-1}, T_k]`` implied by a subject's
    category (``(T_K, inf)`` for category K+1)."""
    k = subject.category
    left = 0.0 if k == 1 else subject.times[k - 2]
    right = subject.times[k - 1] if k <= len(subject.times) else math.inf
    return CensoringInterval(left, right)


def subject_from_interval(interval: CensoringInterval) -> MixedCaseSubject:
    """Inverse reduction: realize an interval as the smallest subject
    observing it (used to bootstrap interval-format datasets, where the
    recorded endpoints are the examination times)."""
    if interval.l == 0.0:
        if math.isinf(interval.r):
            raise ValueError("interval (0, inf) carries no examination time")
        return MixedCaseSubject(times=(interval.r,), category=1)
    if math.isinf(interval.r):
        return MixedCaseSubject(times=(interval.l,), category=2)
    return MixedCaseSubject(times=(interval.l, interval.r), category=2)


def _interval_arrays(
    intervals: Sequence[CensoringInterval],
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    l = np.array([iv.l for iv in intervals], dtype=np.float64)
    r = np.array([iv.r for iv in intervals], dtype=np.float64)
    return l, r


def _support_scan(
    l: NDArray[np.float64], r: NDArray[np.float64]
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Maximal intersections of the intervals {(l_i, r_i]}.

    An (l, r] pair is maximal iff l immediately precedes r when all distinct
    endpoints are sorted with r-endpoints ordered before l-endpoints at equal
    values (the half-open convention keeps them distinct).
    """
    lu = np.unique(l)
    ru = np.unique(r)
    vals = np.concatenate([lu, ru])
    # code 1 for left endpoints, 0 for right: at equal values r sorts first
    code = np.concatenate([np.ones(lu.size, np.int8), np.zeros(ru.size, np.int8)])
    order = np.lexsort((code, vals))
    v = vals[order]
    c = code[order]
    starts = np.flatnonzero((c[:-1] == 1) & (c[1:] == 0))
    return v[starts], v[starts + 1]


def turnbull_support(intervals: Sequence[CensoringInterval]) -> list[CensoringInterval]:
    """Maximal intersections (the only intervals that can carry NPMLE mass).

    Returns the ordered intervals (l, r] with l a left endpoint, r a right
    endpoint, l < r and no other endpoint strictly inside.
    """
    if len(intervals) == 0:
        raise ValueError("need at least one interval")
    ls, rs = _support_scan(*_interval_arrays(intervals))
    return [CensoringInterval(a, b) for a, b in zip(ls, rs)]


# ---------------------------------------------------------------------------
# interval-censored NPMLE (iterative convex minorant)
# ---------------------------------------------------------------------------


def _fenchel_d(
    a: NDArray[np.intp], b: NDArray[np.intp], inv: NDArray[np.float64], m: int
) -> NDArray[np.float64]:
    # d_j = sum_i 1{a_i <= j <= b_i} / P_i via a difference array
    t = np.zeros(m + 1)
    np.add.at(t, a, inv)
    np.add.at(t, b + 1, -inv)
    return np.cumsum(t)[:m]


def _loglik(yext: NDArray[np.float64], a: NDArray[np.intp], b: NDArray[np.intp]) -> float:
    c = yext[b + 1] - yext[a]
    return float(np.log(np.clip(c, PROB_FLOOR, None)).sum())


def _npmle_lr(
    l: NDArray[np.float64],
    r: NDArray[np.float64],
    tol: float,
    max_iter: int,
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64], float, int]:
    """ICM core on interval endpoint arrays.

    Returns (support lefts, support rights, masses, final violation, iters).
    """
    n = l.size
    ls, rs = _support_scan(l, r)
    m = ls.size
    # observation i covers the contiguous support block a_i .. b_i
    a = np.searchsorted(ls, l, side="left")
    b = np.searchsorted(rs, r, side="right") - 1
    if np.any(a > b):  # cannot happen for supports built from these intervals
        raise AssertionError("observation interval contains no support interval")
    if m == 1:
        return ls, rs, np.ones(1), 0.0, 0

    inner_tol = 0.5 * tol
    p = np.full(m, 1.0 / m)
    y = np.cumsum(p)
    y[-1] = 1.0
    viol = np.inf
    for it in range(1, max_iter + 1):
        yext = np.concatenate(([0.0], y))
        c = np.clip(yext[b + 1] - yext[a], PROB_FLOOR, None)
        inv = 1.0 / c
        d = _fenchel_d(a, b, inv, m)
        viol = float(d.max() - n) / n
        if viol <= inner_tol:
            break

        # quasi-Newton step: isotonic fit of y + grad/hess with hessian weights
        inv2 = inv * inv
        mask = a > 0
        am1 = a[mask] - 1
        grad = np.bincount(b, weights=inv, minlength=m) - np.bincount(
            am1, weights=inv[mask], minlength=m
        )
        hess = np.bincount(b, weights=inv2, minlength=m) + np.bincount(
            am1, weights=inv2[mask], minlength=m
        )
        z = y[: m - 1] + grad[: m - 1] / hess[: m - 1]
        w = np.ascontiguousarray(hess[: m - 1])
        ynew = np.append(np.clip(_pava_fit(np.ascontiguousarray(z), w), 0.0, 1.0), 1.0)

        ll_old = float(np.log(c).sum())
        step = ynew - y
        lam = 1.0
        accepted = False
        for _ in range(31):
            ytry = y + lam * step
            if _loglik(np.concatenate(([0.0], ytry)), a, b) >= ll_old - 1e-12 * (
                1.0 + abs(ll_old)
            ):
                accepted = True
                break
            lam *= 0.5
        if accepted:
            y = ytry
        else:
            # line search stalled: one self-consistency (EM) step, which can
            # never decrease the likelihood
            p = np.diff(y, prepend=0.0)
            p = np.clip(p * d / n, 0.0, None)
            p /= p.sum()
            y = np.cumsum(p)
        y[-1] = 1.0
    else:
        p = np.diff(y, prepend=0.0)
        last = StepDistribution.from_cdf_values(rs[np.isfinite(rs)], np.cumsum(p)[np.isfinite(rs)])
        raise NonConvergenceError(
            f"ICM did not reach tolerance {tol} in {max_iter} iterations "
            f"(violation {viol:.3e})",
            last=last,
            violation=viol,
            iterations=max_iter,
        )

    p = np.diff(y, prepend=0.0)
    p[p <= 1e-15] = 0.0
    return ls, rs, p, viol, it


def npmle_interval_censored(
    intervals: Sequence[CensoringInterval],
    tol: float = 1e-8,
    max_iter: int = 500,
) -> StepDistribution:
    """NPMLE of the event-time distribution from censoring intervals.

    Maximizes ``sum_i log P(l_i < X <= r_i)`` over all distributions; mass
    lives only on the maximal intersections (:func:`turnbull_support`).  The
    optimizer is an iterative convex minorant iteration with step-halving
    line search (at most 30 halvings) and a self-consistency fallback step,
    so the likelihood never decreases.  Optimality is certified by the
    Fenchel conditions: with ``d_j`` the likelihood directional derivative of
    support mass j, termination requires ``max_j (d_j - n)/n <= tol`` (which,
    combined with the identity ``sum_j p_j d_j = n``, pins ``d_j`` to
    ``n (1 +- tol)`` wherever ``p_j > 0``).

    Raises
    ------
    NonConvergenceError
        If the violation is still above ``tol`` after ``max_iter`` rounds;
        the error carries the last iterate and its violation.
    ValueError
        On an empty input or nonpositive ``tol``.
    """
    if len(intervals) == 0:
        raise ValueError("need at least one interval")
    if not tol > 0:
        raise ValueError("tol must be positive")
    l, r = _interval_arrays(intervals)
    ls, rs, p, _, _ = _npmle_lr(l, r, tol, max_iter)
    keep = (p > 0) & np.isfinite(rs)
    return StepDistribution(rs[keep], p[keep])


# ---------------------------------------------------------------------------
# one-step iterative convex minorant estimator (case 2)
# ---------------------------------------------------------------------------


def _case2_arrays(
    sample: Sequence[MixedCaseSubject],
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.intp]]:
    if len(sample) == 0:
        raise ValueError("need at least one subject")
    t1 = np.empty(len(sample))
    t2 = np.empty(len(sample))
    cat = np.empty(len(sample), dtype=np.intp)
    for i, s in enumerate(sample):
        if len(s.times) != 2:
            raise ValueError("one-step estimator requires exactly two examination times per subject")
        t1[i], t2[i] = s.times
        cat[i] = s.category
    return t1, t2, cat


def icm_one_step(
    sample: Sequence[MixedCaseSubject], F0: EvaluableDistribution
) -> StepDistribution:
    """One step of the iterative convex minorant algorithm from ``F0``.

    At the sorted distinct examination times the weight process W2 (inverse
    squared probabilities of the observed categories under ``F0``) and the
    score process W1 (the matching signed inverse first powers) are
    accumulated:

    - category 1 (X <= T1): 1/F0(T1)^2 at T1, score +1/F0(T1);
    - category 2 (T1 < X <= T2): 1/(F0(T2)-F0(T1))^2 at both T1 and T2,
      scores -1/(F0(T2)-F0(T1)) at T1 and +1/(F0(T2)-F0(T1)) at T2;
    - category 3 (X > T2): 1/(1-F0(T2))^2 at T2, score -1/(1-F0(T2)).

    The estimator is the vector of left slopes of the greatest convex
    minorant of the diagram ``{(W2(u_j), V(u_j))}`` with
    ``V(u) = int_0^u F0 dW2 + W1(u)``, clamped to [0, 1].  When ``F0`` is the
    NPMLE of the sample this is a fixed point.

    Raises
    ------
    DegenerateDenominatorError
        If the observed category of some subject has nonpositive probability
        under ``F0`` (e.g. F0 equal at both times with category 2).
    """
    t1, t2, cat = _case2_arrays(sample)
    f1 = np.asarray(F0.evaluate(t1), dtype=np.float64)
    f2 = np.asarray(F0.evaluate(t2), dtype=np.float64)

    q = np.where(cat == 1, f1, np.where(cat == 2, f2 - f1, 1.0 - f2))
    if np.any(q <= PROB_FLOOR):
        i = int(np.argmax(q <= PROB_FLOOR))
        raise DegenerateDenominatorError(
            f"category {cat[i]} of subject {i} has probability {q[i]:.3e} under F0"
        )
    inv = 1.0 / q
    inv2 = inv * inv

    is1 = cat == 1
    is2 = cat == 2
    is3 = cat == 3
    ev_t = np.concatenate([t1[is1], t1[is2], t2[is2], t2[is3]])
    ev_w2 = np.concatenate([inv2[is1], inv2[is2], inv2[is2], inv2[is3]])
    ev_f0 = np.concatenate([f1[is1], f1[is2], f2[is2], f2[is3]])
    ev_w1 = np.concatenate([inv[is1], -inv[is2], inv[is2], -inv[is3]])

    grid, idx = np.unique(ev_t, return_inverse=True)
    dw2 = np.zeros(grid.size)
    dv = np.zeros(grid.size)
    np.add.at(dw2, idx, ev_w2)
    np.add.at(dv, idx, ev_f0 * ev_w2 + ev_w1)

    slopes = _pava_fit(np.ascontiguousarray(dv / dw2), np.ascontiguousarray(dw2))
    return StepDistribution.from_cdf_values(grid, np.clip(slopes, 0.0, 1.0))


# ---------------------------------------------------------------------------
# local linearity diagnostic
# ---------------------------------------------------------------------------


def check_local_linearity(
    dist: EvaluableDistribution, t0: float, f0: float, n: int
) -> float:
    """Empirical local-linearity deviation of ``dist`` around ``t0``.

    Returns ``sup_t n^{1/3} |dist(t0 + n^{-1/3} t) - dist(t0) - f0 n^{-1/3} t|``
    over a 201-point grid of t in [-1, 1].  Smooth estimators drive this to 0
    as n grows; a step function keeps it bounded away from 0 (a jump of size
    p at t0 contributes at least ``n^{1/3} p`` in the limit).
    """
    if not f0 > 0:
        raise ValueError("f0 must be positive")
    tgrid = np.linspace(-1.0, 1.0, 201)
    rate = float(n) ** (1.0 / 3.0)
    vals = np.asarray(dist.evaluate(t0 + tgrid / rate), dtype=np.float64)
    center = float(np.asarray(dist.evaluate(np.float64(t0))))
    return float(np.max(np.abs(rate * (vals - center) - f0 * tgrid)))
