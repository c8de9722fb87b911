"""Error function approximations and Gaussian interval masses."""
import math

import numpy as np
from scipy import special as _sp

from ._accel import njit

# Four-term rational approximation, max abs error 5e-4 on x >= 0.
ERF_A1 = 0.278393
ERF_A2 = 0.230389
ERF_A3 = 0.000972
ERF_A4 = 0.078108
ERF_COEFFICIENTS = (ERF_A1, ERF_A2, ERF_A3, ERF_A4)

SQRT2 = math.sqrt(2.0)


@njit
def erf_poly_scalar(x):
    ax = abs(x)
    d = 1.0 + ax * (ERF_A1 + ax * (ERF_A2 + ax * (ERF_A3 + ax * ERF_A4)))
    d2 = d * d
    y = 1.0 - 1.0 / (d2 * d2)
    return y if x >= 0.0 else -y


def erf_approx(x):
    """Polynomial erf, extended to negative arguments by odd symmetry.

    Accepts a scalar or an array; returns the same shape.
    """
    ax = np.abs(np.asarray(x, dtype=float))
    d = 1.0 + ax * (ERF_A1 + ax * (ERF_A2 + ax * (ERF_A3 + ax * ERF_A4)))
    y = np.copysign(1.0 - 1.0 / d**4, x)
    if np.ndim(y) == 0:
        return float(y)
    return y


def erf(x):
    """Platform-precision erf (scipy), scalar or array."""
    y = _sp.erf(x)
    if np.ndim(y) == 0:
        return float(y)
    return y


def gaussian_mass(mu, sigma, a, b, method="erf"):
    """Probability mass of N(mu, sigma^2) on ``[a, b]``.

    ``method`` selects the erf flavour: ``"erf"`` (platform precision) or
    ``"erf-poly"`` (the four-coefficient polynomial). The result is clipped
    into [0, 1]; the polynomial can otherwise yield tiny negative values.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if a > b:
        raise ValueError(f"need a <= b, got a={a}, b={b}")
    scale = sigma * SQRT2
    hi = (b - mu) / scale
    lo = (a - mu) / scale
    if method == "erf":
        if lo > 0.0:
            g = 0.5 * (math.erfc(lo) - math.erfc(hi))
        elif hi < 0.0:
            g = 0.5 * (math.erfc(-hi) - math.erfc(-lo))
        else:
            g = 0.5 * (math.erf(hi) - math.erf(lo))
    elif method == "erf-poly":
        g = 0.5 * (erf_poly_scalar(hi) - erf_poly_scalar(lo))
    else:
        raise ValueError(f"unknown erf method {method!r}")
    return min(max(g, 0.0), 1.0)
