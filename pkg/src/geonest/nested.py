"""The nested sampling loop: livepoints, evidence moments, stopping and
posterior weights."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp

from .distributions import sample_prior
from .sampler import ProposalConfig, evolve_chain

__all__ = [
    "LivePointSet",
    "EvidenceAccumulator",
    "NSResult",
    "LogNormalSummary",
    "init_livepoints",
    "lognormal_report",
    "log_lognormal_report",
    "posterior_weights",
    "run",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LivePointSet:
    points: np.ndarray
    loglikes: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        loglikes = np.asarray(self.loglikes, dtype=float)
        if points.ndim != 2 or loglikes.shape != (len(points),):
            raise ValueError("points must be (n, ndim) with one loglike per point")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "loglikes", loglikes)

    def __len__(self):
        return len(self.loglikes)


def init_livepoints(model, n_live, rng):
    """Draw ``n_live`` independent points from the prior and score them."""
    if n_live < 2:
        raise ValueError("need at least two livepoints")
    points = sample_prior(model.prior, n_live, rng)
    loglikes = model.log_likelihood_many(points)
    return LivePointSet(points, loglikes)


# ---------------------------------------------------------------------------
# Evidence bookkeeping


class LogNormalSummary(NamedTuple):
    logz_mean: float
    logz_var: float
    clamped: bool


def log_lognormal_report(log_m1, log_m2):
    """Mean and variance of log Z, taking Z as log-normal, from log E[Z] and
    log E[Z^2]. A variance that rounding pushed below zero is clamped."""
    var = log_m2 - 2.0 * log_m1
    clamped = var < 0.0
    if clamped:
        var = 0.0
    return LogNormalSummary(2.0 * log_m1 - 0.5 * log_m2, var, clamped)


def lognormal_report(m1, m2):
    """Linear-space front end of :func:`log_lognormal_report`.

    >>> lognormal_report(1.0, math.e)[:2]
    (-0.5, 1.0)
    """
    if not m1 > 0:
        raise ValueError("E[Z] must be positive")
    return log_lognormal_report(math.log(m1), math.log(m2))


class EvidenceAccumulator:
    """Running first and second moments of Z over the random shrinkage factors.

    Each iteration shrinks the volume by t ~ Beta(n_live, 1). The moments
    E[Z], E[Z^2], E[Z X], E[X] and E[X^2] are advanced exactly in
    expectation and held as logarithms.
    """

    def __init__(self, n_live):
        n = float(n_live)
        self.n_live = n_live
        self.log_t = math.log(n / (n + 1.0))
        self.log_t2 = math.log(n / (n + 2.0))
        self.log_1mt = -math.log(n + 1.0)
        self.log_1mt2 = math.log(2.0) - math.log(n + 1.0) - math.log(n + 2.0)
        self.log_t_minus_t2 = math.log(n) - math.log(n + 1.0) - math.log(n + 2.0)
        self.log_z = -math.inf
        self.log_z2 = -math.inf
        self.log_zx = -math.inf
        self.log_x = 0.0
        self.log_x2 = 0.0

    def add(self, loglike):
        """Account for one dead point with log-likelihood ``loglike``."""
        ll = float(loglike)
        new_z = np.logaddexp(self.log_z, self.log_1mt + self.log_x + ll)
        new_z2 = np.logaddexp(
            self.log_z2,
            np.logaddexp(
                math.log(2.0) + self.log_1mt + self.log_zx + ll,
                self.log_1mt2 + self.log_x2 + 2.0 * ll,
            ),
        )
        new_zx = np.logaddexp(
            self.log_t + self.log_zx,
            self.log_t_minus_t2 + self.log_x2 + ll,
        )
        self.log_z, self.log_z2, self.log_zx = float(new_z), float(new_z2), float(new_zx)
        self.log_x += self.log_t
        self.log_x2 += self.log_t2

    def with_remainder(self, live_loglikes):
        """log E[Z] and log E[Z^2] once the livepoints' mean likelihood is
        credited with the remaining volume."""
        live = np.asarray(live_loglikes, dtype=float)
        log_lbar = float(logsumexp(live)) - math.log(len(live))
        log_z = float(np.logaddexp(self.log_z, log_lbar + self.log_x))
        log_z2 = float(logsumexp([
            self.log_z2,
            math.log(2.0) + log_lbar + self.log_zx,
            2.0 * log_lbar + self.log_x2,
        ]))
        return log_z, log_z2


def _log_volume_slab(i, n_live):
    """log(X_{i-1} - X_i) for X_i = exp(-i / n_live), i >= 1."""
    return -(i - 1) / n_live + math.log(-math.expm1(-1.0 / n_live))


def posterior_weights(dead_loglikes, live_loglikes, n_live):
    """Normalised posterior weights of the dead points followed by the final
    livepoints.

    Dead point i (1-based) carries L_i (X_{i-1} - X_i) with X_i =
    exp(-i / n_live); the final livepoints split the remaining volume
    X_{n_dead} equally. Normalising by the sum of these terms makes the
    weights add to one.
    """
    dead = np.asarray(dead_loglikes, dtype=float)
    live = np.asarray(live_loglikes, dtype=float)
    n_dead = len(dead)
    i = np.arange(1, n_dead + 1)
    log_dx = -(i - 1) / n_live + math.log(-math.expm1(-1.0 / n_live))
    log_w = np.concatenate([dead + log_dx, live - n_dead / n_live - math.log(len(live))])
    log_w -= logsumexp(log_w)
    return np.exp(log_w)


# ---------------------------------------------------------------------------
# Driver


@dataclass(frozen=True)
class NSResult:
    """Outcome of a nested sampling run.

    ``samples``, ``loglikes`` and ``weights`` list the dead points in
    iteration order followed by the final livepoints.
    """

    logz_mean: float
    logz_err: float
    logz_quadrature: float
    n_iterations: int
    n_live: int
    dead_points: np.ndarray
    dead_loglikes: np.ndarray
    final_points: np.ndarray
    final_loglikes: np.ndarray
    weights: np.ndarray
    acceptance: np.ndarray
    restarts: np.ndarray
    variance_clamped: bool = False

    @property
    def samples(self):
        return np.concatenate([self.dead_points, self.final_points])

    @property
    def loglikes(self):
        return np.concatenate([self.dead_loglikes, self.final_loglikes])

    @property
    def log_volumes(self):
        """log X_i of the dead points, i = 1 .. n_iterations."""
        return -np.arange(1, self.n_iterations + 1) / self.n_live

    @property
    def mean_acceptance(self):
        return float(np.mean(self.acceptance)) if len(self.acceptance) else float("nan")

    def summary(self):
        return {
            "logz_mean": self.logz_mean,
            "logz_err": self.logz_err,
            "n_iterations": self.n_iterations,
            "n_live": self.n_live,
            "mean_acceptance": self.mean_acceptance,
        }


def run(model, n_live, cfg=None, epsilon=0.01, rng=None, max_iterations=None, callback=None):
    """Nested sampling on ``model`` with ``n_live`` livepoints.

    Iterates until the livepoints' estimated remaining evidence, mean
    likelihood times the current volume, is below ``epsilon`` of the running
    total. The run also stops if every livepoint shares one likelihood,
    since no replacement can then beat the threshold.

    Parameters
    ----------
    model : Model
    n_live : int
    cfg : ProposalConfig, optional
    epsilon : float
        Stopping tolerance in (0, 1).
    rng : numpy.random.Generator, optional
    max_iterations : int, optional
        Hard cap on the number of dead points.
    callback : callable, optional
        Called as ``callback(info)`` after each iteration, with ``info`` a
        dict holding ``it``, ``logl`` and ``logz``.

    Returns
    -------
    NSResult
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    cfg = cfg or ProposalConfig()
    rng = rng if rng is not None else np.random.default_rng()
    live = init_livepoints(model, n_live, rng)
    points = live.points.copy()
    loglikes = live.loglikes.copy()
    bad = ~np.isfinite(loglikes)
    if np.any(bad):
        j = int(np.argmax(bad))
        raise ValueError(f"non-finite log-likelihood {loglikes[j]} at {points[j].tolist()}")

    acc = EvidenceAccumulator(n_live)
    log_eps = math.log(epsilon)
    log_n = math.log(n_live)
    logz_quad = -math.inf
    dead_pts, dead_ll, acceptance, restarts = [], [], [], []
    sigma_scale = 1.0
    it = 0
    while max_iterations is None or it < max_iterations:
        lmax = loglikes.max()
        if lmax == loglikes.min():
            log.debug("all livepoints share one likelihood; stopping at iteration %d", it)
            break
        log_zf = float(logsumexp(loglikes)) - log_n - it / n_live
        if log_zf - np.logaddexp(log_zf, logz_quad) < log_eps:
            break

        worst = int(np.argmin(loglikes))
        lstar = float(loglikes[worst])
        it += 1
        dead_pts.append(points[worst].copy())
        dead_ll.append(lstar)
        logz_quad = float(np.logaddexp(logz_quad, lstar + _log_volume_slab(it, n_live)))
        acc.add(lstar)

        above = loglikes > lstar
        survivors = LivePointSet(points[above], loglikes[above])
        out = evolve_chain(survivors, lstar, model, cfg, rng, sigma_scale)
        sigma_scale = out.sigma_scale
        points[worst] = out.new_point
        loglikes[worst] = out.new_loglike
        acceptance.append(out.acceptance_rate)
        restarts.append(out.n_restarts)

        if callback is not None:
            callback({"it": it, "logl": lstar, "logz": logz_quad})
        if it % 1000 == 0:
            log.debug("it=%d logl*=%.4f logz=%.4f", it, lstar, logz_quad)

    log_m1, log_m2 = acc.with_remainder(loglikes)
    report = log_lognormal_report(log_m1, log_m2)
    dead_ll = np.array(dead_ll, dtype=float)
    ndim = model.ndim
    return NSResult(
        logz_mean=report.logz_mean,
        logz_err=math.sqrt(report.logz_var),
        logz_quadrature=float(np.logaddexp(logz_quad, logsumexp(loglikes) - log_n - it / n_live)),
        n_iterations=it,
        n_live=n_live,
        dead_points=np.array(dead_pts, dtype=float).reshape(-1, ndim),
        dead_loglikes=dead_ll,
        final_points=points,
        final_loglikes=loglikes,
        weights=posterior_weights(dead_ll, loglikes, n_live),
        acceptance=np.array(acceptance, dtype=float),
        restarts=np.array(restarts, dtype=int),
        variance_clamped=report.clamped,
    )
