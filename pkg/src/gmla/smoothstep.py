"""Smooth step profile built from exp(-1/t) and its derivatives of any order.

S(t) = f(t) / (f(t) + f(1 - t)),  f(t) = exp(-1/t) for t > 0, else 0.

S vanishes for t <= 0, equals 1 for t >= 1 and is C-infinity.  Derivatives are
obtained exactly through truncated Taylor series arithmetic, so symbolic
differentiation of cutoff symbols only needs to bump an integer order.
"""

from functools import lru_cache
from math import factorial

import numpy as np

# below this argument exp(-1/t) * t**(-2k) is smaller than 1e-150 for k <= 16
_T_MIN = 2e-3


@lru_cache(maxsize=None)
def _f_derivative_polys(kmax):
    """Polynomials P_k with f^(k)(t) = P_k(1/t) exp(-1/t)."""
    polys = [np.array([1.0])]
    for _ in range(kmax):
        p = polys[-1]
        dp = np.polynomial.polynomial.polyder(p) if p.size > 1 else np.zeros(1)
        diff = np.zeros(max(p.size, dp.size))
        diff[: p.size] += p
        diff[: dp.size] -= dp
        polys.append(np.concatenate([np.zeros(2), diff]))
    return tuple(polys)


def _f_taylor(t, kmax):
    """Taylor coefficients f^(k)(t)/k!, k = 0..kmax, shape (kmax+1,) + t.shape."""
    t = np.asarray(t, dtype=float)
    out = np.zeros((kmax + 1,) + t.shape)
    live = t > _T_MIN
    if not np.any(live):
        return out
    tl = t[live]
    u = 1.0 / tl
    e = np.exp(-u)
    for k, p in enumerate(_f_derivative_polys(kmax)):
        out[k, live] = np.polynomial.polynomial.polyval(u, p) * e / factorial(k)
    return out


def step_derivative(t, k, kmax=None):
    """Return S^(k)(t) for an array t."""
    kmax = k if kmax is None else kmax
    return step_jet(t, kmax)[k]


def step_jet(t, kmax):
    """All derivatives S^(j)(t), j = 0..kmax, stacked along axis 0."""
    t = np.asarray(t, dtype=float)
    a = _f_taylor(t, kmax)
    b = _f_taylor(1.0 - t, kmax)
    # coefficients of f(1 - t - h) in powers of h flip sign with odd order
    signs = (-1.0) ** np.arange(kmax + 1)
    b = b * signs.reshape((-1,) + (1,) * t.ndim)
    den = a + b
    q = np.zeros_like(a)
    for k in range(kmax + 1):
        acc = a[k].copy()
        for j in range(1, k + 1):
            acc -= den[j] * q[k - j]
        q[k] = acc / den[0]
    fact = np.array([factorial(k) for k in range(kmax + 1)], dtype=float)
    return q * fact.reshape((-1,) + (1,) * t.ndim)
