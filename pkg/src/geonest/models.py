"""Registry of the toy models: a circle, n-tori and products of flower spheres.

Keys are ``"circle"``, ``"torus<n>"`` (n >= 2) and ``"sphere<m>"`` (m >= 1
spheres, 2m parameters ordered phi_1, theta_1, ..., phi_m, theta_m).
"""

import math
import re

import numpy as np

from .distributions import (
    Model,
    Sinusoidal,
    Uniform,
    VonMisesParams,
    flower_components,
)
from .geometry import ParameterSpace

__all__ = ["CANONICAL_VON_MISES", "circle_model", "torus_model", "sphere_model", "get_model", "MODEL_KEYS"]

TWO_PI = 2.0 * math.pi

# mu = pi puts the peak at phi = 0 = 2 pi, split across the domain edges
CANONICAL_VON_MISES = VonMisesParams(mu=math.pi, sigma2=0.25)

MODEL_KEYS = ("circle", "torus<n>", "sphere<m>")


def _torus_loglike(params):
    mu = np.array([p.mu for p in params])
    inv_s2 = np.array([1.0 / p.sigma2 for p in params])
    shift = np.pi + mu
    norm = sum(p.log_norm for p in params)

    def log_likelihood(theta):
        theta = np.asarray(theta, dtype=float)
        val = np.cos(theta - shift) @ inv_s2 - norm
        return float(val) if val.ndim == 0 else val

    return log_likelihood


def circle_model(params=CANONICAL_VON_MISES):
    return Model(
        space=ParameterSpace.circles(1),
        prior=(Uniform(0.0, TWO_PI),),
        log_likelihood=_torus_loglike([params]),
        name="circle",
        param_names=("phi",),
        param_labels=(r"\phi",),
        vectorized=True,
    )


def torus_model(n, params=CANONICAL_VON_MISES):
    if n < 1:
        raise ValueError("a torus needs at least one angle")
    if isinstance(params, VonMisesParams):
        params = [params] * n
    if len(params) != n:
        raise ValueError("need one von Mises factor per angle")
    return Model(
        space=ParameterSpace.circles(n),
        prior=tuple(Uniform(0.0, TWO_PI) for _ in range(n)),
        log_likelihood=_torus_loglike(params),
        name=f"torus{n}",
        param_names=tuple(f"theta{i + 1}" for i in range(n)),
        param_labels=tuple(rf"\theta_{{{i + 1}}}" for i in range(n)),
        vectorized=True,
    )


def _flower_loglike(components):
    kappa = np.array([c.kappa for c in components])
    beta = np.array([c.beta for c in components])
    log_norm = np.array([c.log_norm for c in components])
    n_comp = len(components)
    # columns grouped per component: (3, 3 * n_comp)
    frames = np.concatenate([c.G for c in components], axis=1)

    def log_likelihood(theta):
        theta = np.asarray(theta, dtype=float)
        phi = theta[..., 0::2]
        zen = theta[..., 1::2]
        st = np.sin(zen)
        x = np.stack([np.cos(phi) * st, np.sin(phi) * st, np.cos(zen)], axis=-1)
        d = (x @ frames).reshape(x.shape[:-1] + (n_comp, 3))
        logs = kappa * d[..., 0] + beta * (d[..., 1] ** 2 - d[..., 2] ** 2) - log_norm
        top = logs.max(axis=-1)
        per_sphere = top + np.log(np.exp(logs - top[..., None]).sum(axis=-1))
        val = per_sphere.sum(axis=-1)
        return float(val) if val.ndim == 0 else val

    return log_likelihood


def sphere_model(m, components=None):
    if m < 1:
        raise ValueError("need at least one sphere")
    if components is None:
        components = flower_components()
    names, labels, prior = [], [], []
    for k in range(1, m + 1):
        names += [f"phi{k}", f"theta{k}"]
        labels += [rf"\phi_{{{k}}}", rf"\theta_{{{k}}}"]
        prior += [Uniform(0.0, TWO_PI), Sinusoidal(0.0, math.pi)]
    return Model(
        space=ParameterSpace.spheres(m),
        prior=tuple(prior),
        log_likelihood=_flower_loglike(components),
        name=f"sphere{m}",
        param_names=tuple(names),
        param_labels=tuple(labels),
        vectorized=True,
    )


_KEY = re.compile(r"^(circle|torus(\d+)|sphere(\d+))$")


def get_model(key):
    """Build the canonical model registered under ``key``."""
    m = _KEY.match(key)
    if m is None:
        raise KeyError(f"unknown model {key!r}; expected one of {', '.join(MODEL_KEYS)}")
    if m.group(1) == "circle":
        return circle_model()
    if m.group(2) is not None:
        n = int(m.group(2))
        if n < 2:
            raise KeyError("torus models need n >= 2; use 'circle' for one angle")
        return torus_model(n)
    n = int(m.group(3))
    if n < 1:
        raise KeyError("sphere models need m >= 1")
    return sphere_model(n)
