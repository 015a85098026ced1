"""Modified Bessel functions of the first kind, in log space.

Only the ranges the toy models need are covered: real order >= 0 and
arguments up to a few hundred, where the ascending power series has
all-positive terms and no cancellation.
"""

import math

__all__ = ["log_bessel_i", "log_i0"]

_SERIES_RTOL = 1e-17
_MAX_TERMS = 2000


def log_bessel_i(nu, x):
    """log I_nu(x) for real ``nu >= 0`` and ``x >= 0`` from the power series

        I_nu(x) = sum_k (x/2)^(2k+nu) / (k! Gamma(k+nu+1)).

    Terms are summed in log space, shifted by the running maximum, so large
    arguments such as x = 100 do not overflow.
    """
    nu = float(nu)
    x = float(x)
    if nu < 0 or x < 0:
        raise ValueError("log_bessel_i needs nu >= 0 and x >= 0")
    if x == 0.0:
        return 0.0 if nu == 0.0 else -math.inf
    log_half = math.log(0.5 * x)
    # terms rise until k ~ x/2 and then fall factorially
    peak = 0
    logs = []
    for k in range(_MAX_TERMS):
        t = (2 * k + nu) * log_half - math.lgamma(k + 1) - math.lgamma(k + nu + 1)
        logs.append(t)
        if t > logs[peak]:
            peak = k
        elif k > peak and t < logs[peak] + math.log(_SERIES_RTOL):
            break
    else:
        raise ArithmeticError(f"Bessel series for nu={nu}, x={x} did not converge")
    top = logs[peak]
    return top + math.log(math.fsum(math.exp(t - top) for t in logs))


def log_i0(x):
    return log_bessel_i(0.0, x)
