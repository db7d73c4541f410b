"""Slow reference implementations used to cross-check the fast code paths.

Everything here is deliberately naive -- exhaustive enumeration, plain EM
iteration, numerical quadrature -- and shares no code with the package
beyond the input containers.  The tests treat these as ground truth.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import integrate

from icboot.estimators import CensoringInterval


# ---------------------------------------------------------------------------
# isotonic regression by brute force
# ---------------------------------------------------------------------------


def isotonic_bruteforce(values, weights=None):
    """Weighted least-squares isotonic fit by enumerating block partitions.

    The minimizer of sum w_i (f_i - y_i)^2 over nondecreasing f is piecewise
    constant on some partition of 1..m into contiguous blocks, with each
    block at its weighted mean.  Enumerate all 2^(m-1) partitions, keep the
    ones whose block means are nondecreasing, and return the feasible
    candidate with the smallest weighted SSE.
    """
    y = [float(v) for v in values]
    m = len(y)
    w = [1.0] * m if weights is None else [float(v) for v in weights]
    best_sse = math.inf
    best_fit = None
    for mask in range(2 ** (m - 1)):
        # cut after position i when bit i is set
        cuts = [i + 1 for i in range(m - 1) if mask >> i & 1]
        bounds = [0] + cuts + [m]
        fit = []
        means = []
        for a, b in zip(bounds[:-1], bounds[1:]):
            wsum = sum(w[a:b])
            mean = sum(w[i] * y[i] for i in range(a, b)) / wsum
            means.append(mean)
            fit.extend([mean] * (b - a))
        if any(means[i] > means[i + 1] for i in range(len(means) - 1)):
            continue
        sse = sum(w[i] * (fit[i] - y[i]) ** 2 for i in range(m))
        if sse < best_sse - 1e-15:
            best_sse = sse
            best_fit = fit
    return np.asarray(best_fit)


def lower_hull_left_slopes(x, y):
    """Left-derivative slopes of the greatest convex minorant of a point set.

    Builds the lower convex hull of the points (x_0,y_0),...,(x_m,y_m) by a
    sweep that drops any vertex making the slope sequence non-increasing,
    then reads off, for each consecutive point pair, the slope of the hull
    segment spanning it.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    hull = []  # indices into x
    for i in range(x.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            s_ab = (y[b] - y[a]) / (x[b] - x[a])
            s_bi = (y[i] - y[b]) / (x[i] - x[b])
            if s_ab >= s_bi - 1e-15:
                hull.pop()
            else:
                break
        hull.append(i)
    slopes = np.empty(x.size - 1)
    for j in range(1, x.size):
        # hull segment covering (x_{j-1}, x_j]
        for a, b in zip(hull[:-1], hull[1:]):
            if x[a] <= x[j - 1] and x[j] <= x[b] + 1e-12:
                slopes[j - 1] = (y[b] - y[a]) / (x[b] - x[a])
                break
    return slopes


# ---------------------------------------------------------------------------
# interval-censored NPMLE: maximal intersections + plain EM
# ---------------------------------------------------------------------------


def maximal_intersections(intervals):
    """All maximal intersections (p, q] by the O(E^2) definition.

    A candidate is a pair (p, q] with p a left endpoint, q a right endpoint
    (infinity included when some interval is right-censored), p < q, and no
    other endpoint strictly inside (p, q).  The half-open convention means
    touching endpoints do not block a candidate.
    """
    lefts = sorted({iv.l for iv in intervals})
    rights = sorted({iv.r for iv in intervals})
    endpoints = sorted(set(lefts) | set(r for r in rights if math.isfinite(r)))
    out = []
    for p in lefts:
        for q in rights:
            if p >= q:
                continue
            if any(p < e < q for e in endpoints):
                continue
            out.append((p, q))
    return out


def em_npmle(intervals, tol=1e-13, max_iter=100_000):
    """Self-consistency (EM) NPMLE for interval-censored data.

    Returns ``(atoms, probs)`` where atoms are the right endpoints of the
    maximal intersections carrying mass (plus possibly an infinite atom for
    the defect).  Iterates the self-consistency (EM) map from the uniform
    start, accelerated by SQUAREM extrapolation (two EM maps give a step
    direction, a squared extrapolation is projected back onto the simplex and
    stabilized by one more EM map; plain EM is the fallback whenever the
    extrapolated likelihood is worse).  Stops when the iterate's own Fenchel
    condition certifies optimality: normalized violation at most ``tol``.
    """
    spans = maximal_intersections(intervals)
    atoms = [q for _, q in spans]
    n = len(intervals)
    m = len(spans)
    # membership: subject i can sit in clique j iff (p_j, q_j] subset (l_i, r_i]
    A = np.zeros((n, m))
    for i, iv in enumerate(intervals):
        for j, (p, q) in enumerate(spans):
            if iv.l <= p and q <= iv.r:
                A[i, j] = 1.0
    if not np.all(A.sum(axis=1) > 0):
        raise ValueError("some interval contains no maximal intersection")
    def em(p):
        return p * (A.T @ (1.0 / (A @ p))) / n

    def loglik(p):
        return float(np.sum(np.log(A @ p)))

    def violation(p):
        # Fenchel certificate: d_j <= n everywhere, = n wherever p_j > 0
        d = A.T @ (1.0 / (A @ p))
        worst = float(np.max(d) - n)
        active = p > 1e-12
        if np.any(active):
            worst = max(worst, float(np.max(np.abs(d[active] - n))))
        return worst / n

    p = np.full(m, 1.0 / m)
    for _ in range(max_iter):
        if violation(p) <= tol:
            break
        p1 = em(p)
        p2 = em(p1)
        r = p1 - p
        v = (p2 - p1) - r
        vv = float(v @ v)
        if vv == 0.0:
            p = p2
            continue
        alpha = min(-1.0, -math.sqrt(float(r @ r) / vv))
        cand = np.clip(p - 2.0 * alpha * r + alpha * alpha * v, 1e-300, None)
        cand = em(cand / cand.sum())
        p = cand if loglik(cand) >= loglik(p2) else p2
    return atoms, p


def em_cdf(atoms, probs, t):
    """Right-continuous CDF of the EM solution at scalar t."""
    return float(sum(p for a, p in zip(atoms, probs) if a <= t))


# ---------------------------------------------------------------------------
# likelihoods and smoothing
# ---------------------------------------------------------------------------


def current_status_loglik(times, delta, fvals):
    """log-likelihood of a candidate F (given by its values at the
    examination times) for current status data, with 0*log(0) = 0."""
    total = 0.0
    for d, f in zip(delta, fvals):
        if d:
            if f <= 0.0:
                return -math.inf
            total += math.log(f)
        else:
            if f >= 1.0:
                return -math.inf
            total += math.log(1.0 - f)
    return total


def monotone_grid_vectors(m, grid=(0.0, 0.25, 0.5, 0.75, 1.0)):
    """All nondecreasing length-m vectors with entries from ``grid``."""
    return [np.asarray(c) for c in itertools.combinations_with_replacement(sorted(grid), m)]


def biweight_density(u):
    return np.where(np.abs(u) < 1.0, 15.0 / 16.0 * (1.0 - u**2) ** 2, 0.0)


def smoothed_cdf_quad(support, masses, h, t):
    """Kernel-smoothed CDF at t via numerical quadrature of the density."""
    support = np.asarray(support, dtype=float)
    masses = np.asarray(masses, dtype=float)

    def dens(u):
        return float(np.sum(masses * biweight_density((u - support) / h) / h))

    lo = float(np.min(support)) - h
    if t <= lo:
        return 0.0
    pts = [s for s in support if lo < s < t]
    val, _ = integrate.quad(dens, lo, t, points=pts, limit=200)
    return val
