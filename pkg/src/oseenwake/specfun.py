r"""Exponentially scaled modified Bessel functions of order 0 and 1.

Only the scaled values :math:`e^x K_0(x)`, :math:`e^x K_1(x)` and
:math:`e^x (K_1(x) - K_0(x))` are exposed.  Callers carry the exponential
factors separately so nothing overflows for large radii.
"""

import math

import numpy as np
from scipy import special

# above this point the difference K1 - K0 is summed from its own asymptotic
# series; below it plain subtraction loses at most ~2x ulps
DIFF_CROSSOVER = 20.0

_DIFF_TERMS = 40


def _check_domain(x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError("modified Bessel K is only defined for x > 0")
    return x


def k0_scaled(x):
    """Return e^x K0(x) for x > 0."""
    x = _check_domain(x)
    return special.k0e(x)


def k1_scaled(x):
    """Return e^x K1(x) for x > 0."""
    x = _check_domain(x)
    return special.k1e(x)


def _asymptotic_coeffs(order, n):
    # a_k(nu) = prod_{j=1..k} (4 nu^2 - (2j-1)^2) / (k! 8^k)
    mu = 4.0 * order * order
    c = [1.0]
    for k in range(1, n):
        c.append(c[-1] * (mu - (2 * k - 1) ** 2) / (k * 8.0))
    return np.array(c)


_DIFF_COEFFS = _asymptotic_coeffs(1, _DIFF_TERMS) - _asymptotic_coeffs(0, _DIFF_TERMS)


def _k1m0_asymptotic(x):
    # sqrt(pi/2x) * sum_k (a_k(1) - a_k(0)) x^-k, truncated at the smallest term
    inv = 1.0 / x
    total = np.zeros_like(x)
    prev = np.full_like(x, np.inf)
    active = np.ones(x.shape, dtype=bool)
    power = np.ones_like(x)
    for k in range(1, _DIFF_TERMS):
        power = power * inv
        term = _DIFF_COEFFS[k] * power
        mag = np.abs(term)
        active &= mag < prev
        total = np.where(active, total + term, total)
        prev = mag
    return np.sqrt(math.pi / 2.0 * inv) * total


def k1m0_scaled(x):
    """Return e^x (K1(x) - K0(x)) without cancellation at large x."""
    x = _check_domain(x)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)
    small = x <= DIFF_CROSSOVER
    out[small] = special.k1e(x[small]) - special.k0e(x[small])
    out[~small] = _k1m0_asymptotic(x[~small])
    return out[0] if scalar else out


def scaled_bessel(x):
    """Return the triple (k0s, k1s, k1m0s) at x, with k1s assembled from the other two."""
    k0s = k0_scaled(x)
    k1m0s = k1m0_scaled(x)
    return k0s, k0s + k1m0s, k1m0s
