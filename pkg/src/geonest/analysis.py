"""Posterior summaries used to check mode recovery on the toy models."""

import itertools
import math

import numpy as np

__all__ = ["quadrant_masses", "weighted_histogram", "petal_recovery", "circular_mean"]


def quadrant_masses(samples, weights, i, j, lo=0.0, hi=2.0 * math.pi):
    """Posterior mass in the four quadrants of the (i, j) coordinate plane.

    Returns a 2x2 array indexed by (lower/upper half of i, lower/upper half
    of j).
    """
    mid = 0.5 * (lo + hi)
    a = samples[:, i] >= mid
    b = samples[:, j] >= mid
    out = np.empty((2, 2))
    for qa, qb in itertools.product((0, 1), repeat=2):
        out[qa, qb] = weights[(a == qa) & (b == qb)].sum()
    return out


def weighted_histogram(values, weights, bins, lo, hi):
    hist, _ = np.histogram(values, bins=bins, range=(lo, hi), weights=weights)
    return hist / hist.sum()


def petal_recovery(phi, weights, n_petals=8, bins=64, window=2):
    """Which of the ``n_petals`` evenly spaced azimuthal petals show up as a
    local maximum of the weighted ``bins``-bin histogram of ``phi``.

    Petal k sits at 2 pi k / n_petals. It counts as recovered when the
    tallest bin within ``window`` bins of that angle is a local maximum of
    the (circular) histogram.
    """
    hist = weighted_histogram(phi, weights, bins, 0.0, 2.0 * math.pi)
    per_petal = bins / n_petals
    found = []
    for k in range(n_petals):
        edge = k * per_petal
        # bins whose centres lie within ``window`` bins of the petal angle
        cand = [int(math.floor(edge + d)) % bins for d in np.arange(-window, window) + 0.5]
        top = max(cand, key=lambda b: hist[b])
        found.append(hist[top] >= hist[top - 1] and hist[top] >= hist[(top + 1) % bins])
    return np.array(found)


def circular_mean(angles, weights):
    """Weighted mean of (cos, sin) embeddings of ``angles``."""
    w = np.asarray(weights, dtype=float)
    return np.array([np.sum(w * np.cos(angles)), np.sum(w * np.sin(angles))]) / w.sum()
