"""Likelihood-constrained Metropolis chains with wrapped and spherical moves.

Two proposal modes are supported:

``vanilla``
    an isotropic Gaussian step in the raw coordinates; anything that leaves
    the prior support is rejected.
``geometric``
    linear coordinates take a Gaussian step, circular coordinates take a
    Gaussian step that is wrapped back onto the circle, and each sphere
    pair is moved by a 3-D Gaussian step in Cartesian space followed by a
    radial projection back onto the unit sphere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .distributions import Sinusoidal, log_prior_density
from .geometry import SphereZenith, TWO_PI, DegeneratePointError

__all__ = [
    "ProposalConfig",
    "ChainOutcome",
    "SamplerStall",
    "NonFiniteLikelihood",
    "trial_sigma_per_dim",
    "arc_spread",
    "propose",
    "constrained_accept_log_ratio",
    "reference_prior",
    "adapt_sigma_scale",
    "metropolis_walk",
    "evolve_chain",
]

MODES = ("vanilla", "geometric")
_DEGENERATE_RANGE_FRACTION = 1e-3


@dataclass(frozen=True)
class ProposalConfig:
    """Settings for the constrained Metropolis chain.

    The chain length is ``nt_multiplier * ndim`` trial steps. Sphere pairs in
    geometric mode use a fixed Cartesian step variance ``sigma_cart2`` per
    axis; every other coordinate uses ``linear_sigma_scale`` times the spread
    of the livepoints in that coordinate. With ``circular_spread="arc"`` the
    spread of a circular coordinate is the shortest arc holding all the
    livepoints, so a mode straddling the seam is not mistaken for one
    spanning the whole circle; ``"linear"`` uses plain max - min.
    """

    mode: str = "geometric"
    nt_multiplier: int = 20
    sigma_cart2: float = 0.04
    linear_sigma_scale: float = 0.1
    adapt_vanilla_sigma: bool = True
    circular_spread: str = "arc"
    max_restarts: int = 50
    max_degenerate_retries: int = 100

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if int(self.nt_multiplier) != self.nt_multiplier or self.nt_multiplier < 1:
            raise ValueError("nt_multiplier must be a positive integer")
        if not self.sigma_cart2 > 0:
            raise ValueError("sigma_cart2 must be positive")
        if not self.linear_sigma_scale > 0:
            raise ValueError("linear_sigma_scale must be positive")
        if self.circular_spread not in ("arc", "linear"):
            raise ValueError("circular_spread must be 'arc' or 'linear'")


@dataclass(frozen=True)
class ChainOutcome:
    new_point: np.ndarray
    new_loglike: float
    n_accepted: int
    n_rejected: int
    n_restarts: int = 0
    sigma_scale: float = 1.0

    @property
    def acceptance_rate(self):
        return self.n_accepted / (self.n_accepted + self.n_rejected)


class SamplerStall(RuntimeError):
    """No trial point was accepted in any chain restart."""

    def __init__(self, message, *, threshold, n_restarts, n_trials, sigmas):
        super().__init__(message)
        self.threshold = threshold
        self.n_restarts = n_restarts
        self.n_trials = n_trials
        self.sigmas = sigmas


class NonFiniteLikelihood(ValueError):
    def __init__(self, theta, value):
        super().__init__(f"log-likelihood {value!r} at {np.asarray(theta).tolist()}")
        self.theta = np.asarray(theta)
        self.value = value


# ---------------------------------------------------------------------------
# Trial step sizes


def trial_sigma_per_dim(live, space, cfg):
    """Per-coordinate standard deviation of the Gaussian trial step.

    Non-sphere coordinates (and, in vanilla mode, sphere angles too) get
    ``linear_sigma_scale * (max - min)`` over the livepoints; a coordinate
    whose livepoints all coincide falls back to 1e-3 of its prior width.
    In geometric mode both entries of a sphere pair hold the fixed Cartesian
    step ``sqrt(sigma_cart2)``.
    """
    points = np.asarray(live.points, dtype=float)
    if points.ndim != 2 or len(points) == 0:
        raise ValueError("need a non-empty livepoint set")
    spread = np.abs(points.max(axis=0) - points.min(axis=0))
    if cfg.mode == "geometric" and cfg.circular_spread == "arc" and len(space.circular_idx):
        idx = space.circular_idx
        spread[idx] = arc_spread(points[:, idx], space.lower[idx], space.upper[idx])
    sigmas = cfg.linear_sigma_scale * spread
    flat = spread == 0.0
    sigmas[flat] = _DEGENERATE_RANGE_FRACTION * (space.upper - space.lower)[flat]
    if cfg.mode == "geometric" and space.n_spheres:
        sigmas[space.sphere_mask] = math.sqrt(cfg.sigma_cart2)
    return sigmas


def arc_spread(values, lo, hi):
    """Length of the shortest arc of the circle [lo, hi) covering every value,
    column by column: the circumference minus the widest gap between
    neighbouring points."""
    values = np.sort(np.asarray(values, dtype=float), axis=0)
    width = np.asarray(hi, dtype=float) - np.asarray(lo, dtype=float)
    gaps = np.diff(values, axis=0)
    seam = values[0] + width - values[-1]
    widest = np.maximum(gaps.max(axis=0, initial=0.0), seam)
    return width - widest


# ---------------------------------------------------------------------------
# Proposals


class _Proposer:
    """Applies one trial move given pre-drawn standard normal noise.

    The noise vector has ``ndim + 3 * n_spheres`` entries: one per coordinate
    followed by three Cartesian components per sphere pair. Leading batch
    axes are supported.
    """

    def __init__(self, space, mode):
        self.space = space
        self.geometric = mode == "geometric"
        self.ndim = space.ndim
        self.n_spheres = space.n_spheres if self.geometric else 0
        self.n_noise = self.ndim + 3 * self.n_spheres
        if self.geometric:
            self.step_idx = space.linear_idx
            self.circ_idx = space.circular_idx
            self.circ_lo = space.lower[self.circ_idx]
            self.circ_hi = space.upper[self.circ_idx]
            self.circ_width = self.circ_hi - self.circ_lo
            self.az = space.azimuth_idx
            self.zen = space.zenith_idx
        else:
            self.step_idx = np.arange(self.ndim)
            self.circ_idx = self.az = self.zen = np.array([], dtype=int)

    def __call__(self, current, sigmas, noise, rng=None, max_retries=100):
        new = np.array(current, dtype=float, copy=True)
        z = noise[..., : self.ndim]
        if len(self.step_idx):
            idx = self.step_idx
            new[..., idx] = current[..., idx] + sigmas[idx] * z[..., idx]
        if len(self.circ_idx):
            idx = self.circ_idx
            v = current[..., idx] + sigmas[idx] * z[..., idx]
            w = self.circ_lo + np.mod(v - self.circ_lo, self.circ_width)
            new[..., idx] = np.where(w >= self.circ_hi, self.circ_lo, w)
        if self.n_spheres:
            self._move_spheres(current, new, sigmas, noise, rng, max_retries)
        return new

    def _move_spheres(self, current, new, sigmas, noise, rng, max_retries):
        phi = current[..., self.az]
        theta = current[..., self.zen]
        st = np.sin(theta)
        x = np.stack([np.cos(phi) * st, np.sin(phi) * st, np.cos(theta)], axis=-1)
        step = noise[..., self.ndim:].reshape(noise.shape[:-1] + (self.n_spheres, 3))
        x = x + sigmas[self.az][:, None] * step
        rho = np.hypot(x[..., 0], x[..., 1])
        bad = (rho == 0.0) & (x[..., 2] == 0.0)
        tries = 0
        while np.any(bad):
            # the origin has no direction: redraw just those pairs
            if rng is None or tries >= max_retries:
                raise DegeneratePointError("sphere proposal kept landing on the origin")
            tries += 1
            centre = np.stack([np.cos(phi) * st, np.sin(phi) * st, np.cos(theta)], axis=-1)
            redraw = centre + sigmas[self.az][:, None] * rng.standard_normal(x.shape)
            x = np.where(bad[..., None], redraw, x)
            rho = np.hypot(x[..., 0], x[..., 1])
            bad = (rho == 0.0) & (x[..., 2] == 0.0)
        new_phi = np.mod(np.arctan2(x[..., 1], x[..., 0]), TWO_PI)
        new[..., self.az] = np.where(new_phi >= TWO_PI, 0.0, new_phi)
        new[..., self.zen] = np.arctan2(rho, x[..., 2])


@lru_cache(maxsize=64)
def _proposer(space, mode):
    return _Proposer(space, mode)


def propose(current, sigmas, space, rng, mode="geometric", max_retries=100):
    """Draw a trial point (or a batch, for ``current`` of shape (M, N)).

    Linear coordinates take a Gaussian step; circular coordinates take a
    Gaussian step and are wrapped onto ``[lo, hi)``; each sphere pair is
    moved jointly by a Cartesian Gaussian step of standard deviation
    ``sigmas[azimuth]`` and projected back onto the sphere. In vanilla mode
    every coordinate takes an unwrapped Gaussian step.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    current = np.asarray(current, dtype=float)
    sigmas = np.asarray(sigmas, dtype=float)
    prop = _proposer(space, mode)
    noise = rng.standard_normal(current.shape[:-1] + (prop.n_noise,))
    return prop(current, sigmas, noise, rng, max_retries)


# ---------------------------------------------------------------------------
# Acceptance


class _SphereZenithReference:
    """Zenith prior measured against surface area rather than d(theta).

    The Cartesian sphere move is symmetric with respect to area on the
    sphere, whose coordinate density already carries the sin(theta) factor
    of the sinusoidal prior. Against that reference the prior is flat.
    """

    lo, hi = 0.0, math.pi

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= 0.0) & (x <= math.pi), -math.log(math.pi), -np.inf)


def reference_prior(prior, space, mode):
    """The prior as the acceptance ratio must see it for a given proposal mode.

    In geometric mode the zenith prior of each sphere pair is replaced by its
    density relative to surface area; everything else is unchanged.
    """
    prior = list(prior)
    if mode == "geometric":
        for i, d in enumerate(space.dims):
            if isinstance(d, SphereZenith) and isinstance(prior[i], Sinusoidal):
                prior[i] = _SphereZenithReference()
    return tuple(prior)


def constrained_accept_log_ratio(theta_t, theta_l, loglike_t, loglike_threshold, prior):
    """log of the constrained Metropolis acceptance probability.

    ``-inf`` unless ``loglike_t`` strictly exceeds the threshold, otherwise
    ``min(log pi(theta_t) - log pi(theta_l), 0)``.
    """
    if not loglike_t > loglike_threshold:
        return -math.inf
    lp_t = log_prior_density(prior, theta_t)
    if lp_t == -math.inf:
        return -math.inf
    return min(lp_t - log_prior_density(prior, theta_l), 0.0)


class _FastLogPrior:
    """Same value as ``log_prior_density`` up to an additive constant, for the
    chain's inner loop."""

    def __init__(self, prior):
        self.lo = np.array([p.lo for p in prior])
        self.hi = np.array([p.hi for p in prior])
        sin_dims = [i for i, p in enumerate(prior) if isinstance(p, Sinusoidal)]
        self.sin_idx = np.array(sin_dims, dtype=int)
        self.sin_lo = self.lo[self.sin_idx]
        self.sin_scale = np.pi / (self.hi - self.lo)[self.sin_idx]

    def __call__(self, theta):
        if not np.all((theta >= self.lo) & (theta <= self.hi)):
            return -math.inf
        if len(self.sin_idx):
            s = np.sin((theta[self.sin_idx] - self.sin_lo) * self.sin_scale)
            if np.any(s <= 0.0):
                return -math.inf
            return float(np.sum(np.log(s)))
        return 0.0


def adapt_sigma_scale(scale, n_accepted, n_rejected):
    """Multiplicative step-size update from one chain's accept/reject counts."""
    if n_accepted > n_rejected:
        return scale * math.exp(1.0 / n_accepted)
    return scale * math.exp(-1.0 / n_rejected)


# ---------------------------------------------------------------------------
# Chains


def _walk(prop, log_prior, loglike, current, current_ll, sigmas, threshold,
          n_steps, rng, max_retries, thin=0):
    current_lp = log_prior(current)
    noise = rng.standard_normal((n_steps, prop.n_noise))
    log_u = np.log(rng.random(n_steps))
    trace = [] if thin else None
    n_acc = 0
    for step in range(n_steps):
        trial = prop(current, sigmas, noise[step], rng, max_retries)
        lp = log_prior(trial)
        if lp != -math.inf:
            ll = loglike(trial)
            if not math.isfinite(ll):
                raise NonFiniteLikelihood(trial, ll)
            if ll > threshold and (lp >= current_lp or log_u[step] < lp - current_lp):
                current, current_ll, current_lp = trial, ll, lp
                n_acc += 1
        if thin and (step + 1) % thin == 0:
            trace.append(current)
    return current, current_ll, n_acc, trace


def metropolis_walk(start, model, sigmas, n_steps, rng, cfg=None,
                    threshold_loglike=-math.inf, thin=0):
    """Run one constrained Metropolis chain of ``n_steps`` trial moves.

    Returns ``(point, loglike, n_accepted, trace)`` where ``trace`` stacks
    the state after every ``thin``-th step (``None`` when ``thin`` is 0).
    """
    cfg = cfg or ProposalConfig()
    start = np.asarray(start, dtype=float)
    prop = _proposer(model.space, cfg.mode)
    log_prior = _FastLogPrior(reference_prior(model.prior, model.space, cfg.mode))
    point, ll, n_acc, trace = _walk(
        prop, log_prior, model.log_likelihood, start, model.log_likelihood(start),
        np.asarray(sigmas, dtype=float), threshold_loglike, n_steps, rng,
        cfg.max_degenerate_retries, thin,
    )
    return point, ll, n_acc, (np.array(trace) if thin else None)


def evolve_chain(live, threshold_loglike, model, cfg, rng, sigma_scale=1.0):
    """Evolve a constrained Metropolis chain from a random livepoint.

    Runs exactly ``cfg.nt_multiplier * ndim`` trial steps, accepted and
    rejected alike, and returns the final state. A chain with no acceptance
    is thrown away and restarted from another random livepoint, at most
    ``cfg.max_restarts`` times.

    ``live`` is only read. Every point in it must lie strictly above
    ``threshold_loglike``. ``sigma_scale`` multiplies the trial widths in
    vanilla mode; the adapted value is returned on the outcome.
    """
    points = np.asarray(live.points, dtype=float)
    n_live, ndim = points.shape
    n_trials = cfg.nt_multiplier * ndim
    space = model.space
    sigmas = trial_sigma_per_dim(live, space, cfg)
    vanilla = cfg.mode == "vanilla"
    if vanilla:
        sigmas = sigmas * sigma_scale
    prop = _proposer(space, cfg.mode)
    log_prior = _FastLogPrior(reference_prior(model.prior, space, cfg.mode))

    for attempt in range(cfg.max_restarts + 1):
        start = int(rng.integers(n_live))
        current, current_ll, n_acc, _ = _walk(
            prop, log_prior, model.log_likelihood, points[start].copy(),
            float(live.loglikes[start]), sigmas, threshold_loglike, n_trials,
            rng, cfg.max_degenerate_retries,
        )
        if n_acc:
            break
    else:
        raise SamplerStall(
            f"no trial accepted above log-likelihood {threshold_loglike:.6g} "
            f"in {cfg.max_restarts + 1} chains of {n_trials} steps",
            threshold=threshold_loglike,
            n_restarts=cfg.max_restarts,
            n_trials=n_trials,
            sigmas=sigmas,
        )

    n_rej = n_trials - n_acc
    if vanilla and cfg.adapt_vanilla_sigma:
        sigma_scale = adapt_sigma_scale(sigma_scale, n_acc, n_rej)
    return ChainOutcome(
        new_point=current,
        new_loglike=current_ll,
        n_accepted=n_acc,
        n_rejected=n_rej,
        n_restarts=attempt,
        sigma_scale=sigma_scale,
    )
