"""Priors, the directional toy-model likelihoods and a grid-quadrature
evidence oracle.

All densities are returned as logarithms. Likelihood functions broadcast
over leading axes so that one call can score a whole grid of points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from .geometry import ParameterSpace, SphereZenith, sph_to_cart
from .special import log_bessel_i, log_i0

__all__ = [
    "Uniform",
    "Sinusoidal",
    "log_prior_density",
    "sample_prior",
    "VonMisesParams",
    "log_von_mises",
    "log_torus",
    "KentParams",
    "kent_log_norm",
    "log_kent",
    "log_flower",
    "FLOWER_ORIENTATIONS",
    "flower_components",
    "Model",
    "grid_log_evidence",
]

LOG_2PI = math.log(2.0 * math.pi)


# ---------------------------------------------------------------------------
# Priors


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got ({self.lo}, {self.hi})")

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x <= self.hi)
        return np.where(inside, -math.log(self.hi - self.lo), -np.inf)

    def ppf(self, u):
        return self.lo + (self.hi - self.lo) * np.asarray(u, dtype=float)


@dataclass(frozen=True)
class Sinusoidal:
    """Density proportional to sin(pi (x - lo) / (hi - lo)) on [lo, hi].

    On [0, pi] this is sin(x) / 2, the zenith-angle marginal of a uniform
    distribution over the sphere.
    """

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got ({self.lo}, {self.hi})")

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        w = self.hi - self.lo
        inside = (x >= self.lo) & (x <= self.hi)
        s = np.sin(np.pi * (np.clip(x, self.lo, self.hi) - self.lo) / w)
        with np.errstate(divide="ignore"):
            val = np.log(np.pi / (2.0 * w)) + np.log(np.maximum(s, 0.0))
        return np.where(inside, val, -np.inf)

    def ppf(self, u):
        # CDF is (1 - cos(pi (x - lo) / w)) / 2
        u = np.asarray(u, dtype=float)
        return self.lo + (self.hi - self.lo) / np.pi * np.arccos(1.0 - 2.0 * u)


def log_prior_density(prior, theta):
    """Sum of per-dimension log densities; ``-inf`` outside the support.

    ``theta`` may carry leading batch axes; its last axis must match
    ``len(prior)``.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1:] != (len(prior),):
        raise ValueError(f"expected {len(prior)} parameters, got shape {theta.shape}")
    total = 0.0
    for i, p in enumerate(prior):
        total = total + p.logpdf(theta[..., i])
    if np.ndim(total) == 0:
        return float(total)
    return total


def sample_prior(prior, n, rng):
    """``n`` independent prior draws by per-dimension inverse CDF."""
    u = rng.random((n, len(prior)))
    out = np.empty_like(u)
    for i, p in enumerate(prior):
        out[:, i] = p.ppf(u[:, i])
    return out


# ---------------------------------------------------------------------------
# Circular toy model


@dataclass(frozen=True)
class VonMisesParams:
    """Location ``mu`` and variance-like ``sigma2`` (inverse concentration)."""

    mu: float
    sigma2: float

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")

    @property
    def log_norm(self):
        return LOG_2PI + log_i0(1.0 / self.sigma2)


def log_von_mises(phi, p):
    """log of exp(cos(phi - pi - mu) / sigma2) / (2 pi I0(1 / sigma2)).

    Note the pi offset: the density peaks at ``phi = mu + pi`` (mod 2 pi).
    """
    phi = np.asarray(phi, dtype=float)
    val = np.cos(phi - np.pi - p.mu) / p.sigma2 - p.log_norm
    if val.ndim == 0:
        return float(val)
    return val


def log_torus(theta, params):
    """Product of independent von Mises factors, one per angle."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1:] != (len(params),):
        raise ValueError(f"expected {len(params)} angles, got shape {theta.shape}")
    mu = np.array([p.mu for p in params])
    inv_s2 = np.array([1.0 / p.sigma2 for p in params])
    norm = sum(p.log_norm for p in params)
    val = np.sum(np.cos(theta - np.pi - mu) * inv_s2, axis=-1) - norm
    if val.ndim == 0:
        return float(val)
    return val


# ---------------------------------------------------------------------------
# Spherical toy model

_KENT_RTOL = 1e-15
_KENT_MAX_TERMS = 200


def kent_log_norm(kappa, beta):
    """log c(kappa, beta), the Kent normalising constant, from its Bessel series

        c = 2 pi sum_i Gamma(i + 1/2) / Gamma(i + 1) beta^(2i)
                   (kappa / 2)^(-2i - 1/2) I_(2i + 1/2)(kappa).

    With 2 beta <= kappa the terms decrease monotonically, so the sum is cut
    once a term drops below 1e-15 of the running total.
    """
    kappa = float(kappa)
    beta = float(beta)
    if not kappa > 0 or beta < 0 or 2.0 * beta > kappa:
        raise ValueError(f"need kappa > 0 and 0 <= 2 beta <= kappa, got ({kappa}, {beta})")
    log_half_k = math.log(0.5 * kappa)
    log_beta = math.log(beta) if beta > 0 else -math.inf
    total = -math.inf
    for i in range(_KENT_MAX_TERMS):
        if i > 0 and beta == 0.0:
            break
        nu = 2 * i + 0.5
        t = (
            math.lgamma(i + 0.5)
            - math.lgamma(i + 1.0)
            + (2 * i * log_beta if i else 0.0)
            - nu * log_half_k
            + log_bessel_i(nu, kappa)
        )
        total = np.logaddexp(total, t)
        if t < total + math.log(_KENT_RTOL):
            break
    else:
        raise ArithmeticError(f"Kent series did not converge for kappa={kappa}, beta={beta}")
    return LOG_2PI + float(total)


@dataclass(frozen=True)
class KentParams:
    """Concentration, ellipticity and orientation frame of a Kent density.

    Columns of ``G`` are gamma_1 (mean direction), gamma_2 (major axis) and
    gamma_3 (minor axis).
    """

    kappa: float
    beta: float
    G: np.ndarray = field(repr=False)
    log_norm: float = field(init=False, repr=False)

    def __post_init__(self):
        G = np.array(self.G, dtype=float)
        if G.shape != (3, 3):
            raise ValueError("G must be 3x3")
        if not np.allclose(G.T @ G, np.eye(3), atol=1e-12, rtol=0):
            raise ValueError("G must be orthogonal")
        G.setflags(write=False)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "log_norm", kent_log_norm(self.kappa, self.beta))


def log_kent(x, p):
    """Kent log density at unit vector(s) ``x`` (shape (..., 3))."""
    d = np.asarray(x, dtype=float) @ p.G
    val = p.kappa * d[..., 0] + p.beta * (d[..., 1] ** 2 - d[..., 2] ** 2) - p.log_norm
    if val.ndim == 0:
        return float(val)
    return val


_R2 = 1.0 / math.sqrt(2.0)
FLOWER_ORIENTATIONS = tuple(
    np.array(g, dtype=float)
    for g in (
        [[0, 0, 1], [0, 1, 0], [1, 0, 0]],
        [[0, 1, 0], [0, 0, 1], [1, 0, 0]],
        [[0, -_R2, _R2], [0, _R2, _R2], [1, 0, 0]],
        [[0, _R2, -_R2], [0, _R2, _R2], [1, 0, 0]],
    )
)


def flower_components(kappa=100.0, beta=50.0):
    """The four Kent components of the flower density, all centred on the
    north pole with major axes 45 degrees apart."""
    return tuple(KentParams(kappa, beta, G) for G in FLOWER_ORIENTATIONS)


def log_flower(phi, theta, components):
    """log of the sum of the component Kent densities at (phi, theta)."""
    x = sph_to_cart(phi, theta)
    stacked = np.stack([log_kent(x, c) for c in components], axis=0)
    val = logsumexp(stacked, axis=0)
    if np.ndim(val) == 0:
        return float(val)
    return val


# ---------------------------------------------------------------------------
# Models


@dataclass(frozen=True)
class Model:
    """A prior and a log-likelihood over a parameter space.

    ``log_likelihood`` maps a parameter vector to a float. When
    ``vectorized`` is set it must also accept an ``(M, N)`` array and return
    ``M`` values, which the grid oracle uses.
    """

    space: ParameterSpace
    prior: tuple
    log_likelihood: Callable
    name: str = "model"
    param_names: tuple = ()
    param_labels: tuple = ()
    vectorized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "prior", tuple(self.prior))
        if len(self.prior) != self.space.ndim:
            raise ValueError("one prior per dimension is required")
        for i, (p, d) in enumerate(zip(self.prior, self.space.dims)):
            if isinstance(p, Sinusoidal) and not isinstance(d, SphereZenith):
                raise ValueError(f"dimension {i}: sinusoidal prior only applies to zenith angles")
            lo, hi = d.bounds
            if not (math.isclose(p.lo, lo) and math.isclose(p.hi, hi)):
                raise ValueError(f"dimension {i}: prior support must match the dimension bounds")
        if not self.param_names:
            object.__setattr__(self, "param_names", tuple(f"p{i + 1}" for i in range(self.ndim)))
        if not self.param_labels:
            object.__setattr__(self, "param_labels", self.param_names)

    @property
    def ndim(self):
        return self.space.ndim

    def log_prior(self, theta):
        return log_prior_density(self.prior, theta)

    def log_likelihood_many(self, thetas):
        thetas = np.asarray(thetas, dtype=float)
        if self.vectorized:
            return np.asarray(self.log_likelihood(thetas), dtype=float)
        return np.array([self.log_likelihood(t) for t in thetas], dtype=float)


_GRID_MAX_DIM = 3
_GRID_CHUNK = 1 << 20


def grid_log_evidence(model, resolution):
    """log of the integral of likelihood times prior by the midpoint rule.

    ``resolution`` is the number of cells per dimension, either one integer
    for all dimensions or a sequence. Only spaces of up to three dimensions
    are accepted; the cell count grows as ``resolution ** ndim``.
    """
    n = model.ndim
    if n > _GRID_MAX_DIM:
        raise ValueError(f"grid quadrature limited to {_GRID_MAX_DIM} dimensions, got {n}")
    if np.isscalar(resolution):
        resolution = (int(resolution),) * n
    resolution = tuple(int(r) for r in resolution)
    if len(resolution) != n or min(resolution) < 1:
        raise ValueError("need one positive resolution per dimension")
    lo, hi = model.space.lower, model.space.upper
    axes = [lo[i] + (np.arange(r) + 0.5) * (hi[i] - lo[i]) / r for i, r in enumerate(resolution)]
    log_cell = float(np.sum(np.log((hi - lo) / np.array(resolution))))

    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    parts = []
    for start in range(0, len(pts), _GRID_CHUNK):
        chunk = pts[start:start + _GRID_CHUNK]
        vals = model.log_likelihood_many(chunk) + model.log_prior(chunk)
        parts.append(logsumexp(vals))
    return float(logsumexp(parts)) + log_cell
