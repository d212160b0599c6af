"""Shared fixtures-in-spirit: random boxes, sampling, finite differences."""

import numpy as np


def random_box(rng, dim, lo_range=(-3.0, 3.0), width_range=(0.2, 4.0)):
    lows = rng.uniform(*lo_range, size=dim)
    widths = rng.uniform(*width_range, size=dim)
    return [(float(lo), float(lo + w)) for lo, w in zip(lows, widths)]


def sample_box(rng, pairs, n):
    lo = np.array([p[0] for p in pairs])
    hi = np.array([p[1] for p in pairs])
    return rng.uniform(lo, hi, size=(n, len(pairs)))


def central_diff(f, X, j, h_scale):
    h = h_scale * np.maximum(1.0, np.abs(X[:, j]))
    Xp = X.copy()
    Xp[:, j] += h
    Xm = X.copy()
    Xm[:, j] -= h
    return (f(Xp) - f(Xm)) / (2.0 * h)


def stable_fd(f, X, j):
    """Central-difference derivative plus a mask of rows where the estimate
    is numerically trustworthy (two step sizes agree tightly).  Rows near
    singularities or protected-division guards fail the mask and should be
    excluded from comparisons."""
    d1 = central_diff(f, X, j, 1e-5)
    d2 = central_diff(f, X, j, 5e-6)
    scale = np.maximum(1.0, np.abs(d2))
    ok = np.isfinite(d1) & np.isfinite(d2) & (np.abs(d1 - d2) <= 2e-6 * scale)
    # Rounding floor: when |f| is huge the perturbation is absorbed by the
    # ulp of f and the difference quotient reads 0 despite a real slope.
    h = 5e-6 * np.maximum(1.0, np.abs(X[:, j]))
    floor = np.finfo(float).eps * np.abs(f(X)) / (2.0 * h)
    ok &= floor <= 1e-6 * scale
    return d2, ok
