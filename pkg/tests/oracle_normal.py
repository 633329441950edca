"""High-precision normal CDF/quantile oracle via numerical integration.

Integrates the standard normal density with mpmath quadrature (30 decimal
digits) and inverts it by bisection; independent of scipy.
"""

import mpmath as mp

mp.mp.dps = 30

_NORM = 1 / mp.sqrt(2 * mp.pi)


def normal_cdf(z) -> mp.mpf:
    z = mp.mpf(z)
    return mp.mpf("0.5") + mp.quad(lambda t: _NORM * mp.exp(-t * t / 2), [0, z])


def normal_quantile(level, tol="1e-12") -> mp.mpf:
    level = mp.mpf(level)
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    lo, hi = mp.mpf(-10), mp.mpf(10)
    tol = mp.mpf(tol)
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if normal_cdf(mid) < level:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2
