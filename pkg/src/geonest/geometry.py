"""Parameter-space geometry: dimension kinds, circular wrapping and the
sphere <-> Cartesian maps used by the geometric proposals."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np

TWO_PI = 2.0 * np.pi

__all__ = [
    "Linear",
    "Circular",
    "SphereAzimuth",
    "SphereZenith",
    "ParameterSpace",
    "DomainError",
    "DegeneratePointError",
    "wrap",
    "sph_to_cart",
    "cart_to_sph",
    "circular_distance",
]


class DomainError(ValueError):
    """Raised for non-finite input or an empty interval."""


class DegeneratePointError(ValueError):
    """Raised when a Cartesian point has no spherical direction (the origin)."""


@dataclass(frozen=True)
class Linear:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError(f"need lo < hi, got ({self.lo}, {self.hi})")

    @property
    def bounds(self):
        return (self.lo, self.hi)


@dataclass(frozen=True)
class Circular:
    """A coordinate whose endpoints ``lo`` and ``hi`` are the same point."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError(f"need lo < hi, got ({self.lo}, {self.hi})")

    @property
    def bounds(self):
        return (self.lo, self.hi)


@dataclass(frozen=True)
class SphereAzimuth:
    """Azimuthal angle on [0, 2pi]; ``partner`` indexes its zenith angle."""

    partner: int

    @property
    def bounds(self):
        return (0.0, TWO_PI)


@dataclass(frozen=True)
class SphereZenith:
    """Zenith angle on [0, pi]; ``partner`` indexes its azimuthal angle."""

    partner: int

    @property
    def bounds(self):
        return (0.0, np.pi)


DimensionKind = Union[Linear, Circular, SphereAzimuth, SphereZenith]


@dataclass(frozen=True)
class ParameterSpace:
    """Ordered per-dimension geometry tags.

    The index arrays exposed as properties are what the proposal engine
    works from: which coordinates take plain Gaussian steps, which are
    wrapped, and which pairs are moved on the sphere.
    """

    dims: tuple

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(self.dims))
        if len(self.dims) < 1:
            raise ValueError("a parameter space needs at least one dimension")
        for i, d in enumerate(self.dims):
            if isinstance(d, (SphereAzimuth, SphereZenith)):
                j = d.partner
                if not 0 <= j < len(self.dims) or j == i:
                    raise ValueError(f"dimension {i}: bad sphere partner {j}")
                other = self.dims[j]
                want = SphereZenith if isinstance(d, SphereAzimuth) else SphereAzimuth
                if not isinstance(other, want) or other.partner != i:
                    raise ValueError(f"dimension {i}: incomplete sphere pair")
            elif not isinstance(d, (Linear, Circular)):
                raise TypeError(f"dimension {i}: unknown kind {d!r}")

    @classmethod
    def circles(cls, n, lo=0.0, hi=TWO_PI):
        return cls(tuple(Circular(lo, hi) for _ in range(n)))

    @classmethod
    def spheres(cls, m):
        """``m`` spheres laid out as (phi_1, theta_1, ..., phi_m, theta_m)."""
        dims = []
        for k in range(m):
            dims += [SphereAzimuth(2 * k + 1), SphereZenith(2 * k)]
        return cls(tuple(dims))

    @property
    def ndim(self):
        return len(self.dims)

    def __len__(self):
        return len(self.dims)

    @cached_property
    def lower(self):
        return np.array([d.bounds[0] for d in self.dims], dtype=float)

    @cached_property
    def upper(self):
        return np.array([d.bounds[1] for d in self.dims], dtype=float)

    @cached_property
    def linear_idx(self):
        return np.array([i for i, d in enumerate(self.dims) if isinstance(d, Linear)], dtype=int)

    @cached_property
    def circular_idx(self):
        return np.array([i for i, d in enumerate(self.dims) if isinstance(d, Circular)], dtype=int)

    @cached_property
    def azimuth_idx(self):
        return np.array([i for i, d in enumerate(self.dims) if isinstance(d, SphereAzimuth)], dtype=int)

    @cached_property
    def zenith_idx(self):
        """Zenith index of each sphere pair, aligned with ``azimuth_idx``."""
        return np.array([self.dims[i].partner for i in self.azimuth_idx], dtype=int)

    @cached_property
    def sphere_mask(self):
        mask = np.zeros(self.ndim, dtype=bool)
        mask[self.azimuth_idx] = True
        mask[self.zenith_idx] = True
        return mask

    @property
    def n_spheres(self):
        return len(self.azimuth_idx)

    def contains(self, theta):
        theta = np.asarray(theta, dtype=float)
        return bool(np.all((theta >= self.lower) & (theta <= self.upper)))


def _check_interval(lo, hi):
    if not (np.isfinite(lo) and np.isfinite(hi)) or not lo < hi:
        raise DomainError(f"need finite lo < hi, got ({lo}, {hi})")


def wrap(value, lo, hi):
    """Map ``value`` onto the circle ``[lo, hi)`` by translation.

    Works elementwise on arrays. Values already in range come back unchanged.

    >>> round(wrap(-0.1, 0.0, 1.0), 12)
    0.9
    """
    _check_interval(lo, hi)
    v = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(v)):
        raise DomainError("cannot wrap a non-finite value")
    width = hi - lo
    out = lo + np.mod(v - lo, width)
    # np.mod can round up to exactly ``width`` for tiny negative offsets
    out = np.where(out >= hi, lo, out)
    inside = (v >= lo) & (v < hi)
    out = np.where(inside, v, out)
    if out.ndim == 0:
        return float(out)
    return out


def circular_distance(a, b, period=TWO_PI):
    """Shortest separation of ``a`` and ``b`` on a circle of the given period."""
    d = np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), period)
    return np.minimum(d, period - d)


def sph_to_cart(phi, theta):
    """Unit vector(s) for azimuth ``phi`` and zenith ``theta``; shape (..., 3)."""
    phi, theta = np.broadcast_arrays(np.asarray(phi, dtype=float), np.asarray(theta, dtype=float))
    st = np.sin(theta)
    return np.stack([np.cos(phi) * st, np.sin(phi) * st, np.cos(theta)], axis=-1)


def cart_to_sph(v):
    """Direction angles of the Cartesian point(s) ``v`` (shape (..., 3)).

    The radius is discarded, so off-sphere points are projected radially onto
    the unit sphere. Returns ``(phi, theta)`` with ``phi`` in [0, 2pi) and
    ``theta`` in [0, pi]. On the z axis ``phi`` is 0.
    """
    v = np.asarray(v, dtype=float)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    rho = np.hypot(x, y)
    if np.any((rho == 0.0) & (z == 0.0)):
        raise DegeneratePointError("the origin has no direction")
    # arctan2 form of arccos(z / r): same angle, accurate near the poles
    theta = np.arctan2(rho, z)
    phi = np.arctan2(y, x)
    phi = np.where(phi < 0.0, phi + TWO_PI, phi)
    phi = np.where(phi >= TWO_PI, 0.0, phi) + 0.0
    if phi.ndim == 0:
        return float(phi), float(theta)
    return phi, theta
