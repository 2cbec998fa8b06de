"""Log-log least squares used by all decay-exponent estimators."""

from dataclasses import dataclass

import numpy as np

R2_MIN = 0.9
SLOPE_SE_TOL = 0.05


@dataclass(frozen=True)
class PowerFit:
    slope: float
    intercept: float
    r2: float
    slope_se: float = 0.0

    @property
    def decay(self):
        return -self.slope

    @property
    def good(self):
        """R^2 above threshold, or a tightly determined slope.

        Flat profiles have no variance for R^2 to explain, so their R^2 is
        noise; the slope standard error still certifies the decay rate.
        """
        return self.r2 >= R2_MIN or self.slope_se <= SLOPE_SE_TOL


def fit_loglog(r, g):
    """Fit log g = slope * log r + intercept; g must be positive.

    A flat response (zero total variance) is a perfect fit with R^2 = 1.
    """
    lr = np.log(np.asarray(r, dtype=float))
    lg = np.log(np.asarray(g, dtype=float))
    A = np.vstack([lr, np.ones_like(lr)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, lg, rcond=None)
    resid = lg - (slope * lr + icpt)
    ss_tot = float(np.sum((lg - lg.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    if ss_tot <= 1e-24 * max(1.0, float(np.sum(lg**2))):
        r2 = 1.0
    else:
        r2 = max(0.0, 1.0 - ss_res / ss_tot)
    sxx = float(np.sum((lr - lr.mean()) ** 2))
    se = np.sqrt(ss_res / max(len(lg) - 2, 1) / sxx) if sxx > 0 else np.inf
    return PowerFit(float(slope), float(icpt), r2, float(se))


def log_radii(r_min, r_max, n):
    return np.exp(np.linspace(np.log(r_min), np.log(r_max), n))
