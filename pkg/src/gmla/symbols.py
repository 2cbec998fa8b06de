"""Shubin symbol calculus on expression trees (d = 1).

Derivatives are exact (tree differentiation); sup-type constants are estimated
on polar lattices of an annulus and decay rates by log-log fits along rays.
"""

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from gmla import expr as E
from gmla.fitting import fit_loglog, log_radii
from gmla.parser import Symbol

DEFAULT_K = 6
DEFAULT_ANNULUS = (5.0, 0.8 * 16.0)
TAU_LOW = 1e-3
TAU_RATIO = 1e3
ABS_FLOOR = 1e-300
N_DIRECTIONS = 360


class DerivativeOrderError(ValueError):
    pass


class ParametrixError(ValueError):
    pass


def _node(a):
    return a.expr if isinstance(a, Symbol) else a


def _bracket(x, xi):
    return np.sqrt(1.0 + x * x + xi * xi)


def eval_symbol_deriv(a, x, xi, alpha=(0, 0), K=DEFAULT_K):
    """Exact value of d_x^alpha[0] d_xi^alpha[1] a at (x, xi)."""
    if min(alpha) < 0:
        raise DerivativeOrderError("multi-index entries must be >= 0")
    if sum(alpha) > K:
        raise DerivativeOrderError(f"|alpha| = {sum(alpha)} exceeds derivative closure order {K}")
    return E.evaluate(E.diff_multi(_node(a), tuple(alpha)), x, xi)


def _all_alphas(K):
    return [al for k in range(K + 1) for al in E.multi_indices(k)]


def polar_points(annulus, n_r=48, n_theta=360):
    r = log_radii(annulus[0], annulus[1], n_r)
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    R, T = np.meshgrid(r, th, indexing="ij")
    return R * np.cos(T), R * np.sin(T)


# --- seminorms -----------------------------------------------------------------------


@dataclass(frozen=True)
class SeminormTable:
    """Estimated C_alpha = sup <z>^(|alpha| - m) |d^alpha a| over an annulus."""

    m: float
    annulus: tuple
    K: int
    entries: dict
    passed: bool
    changes: dict = field(default_factory=dict)

    def to_record(self):
        return {
            "m": self.m,
            "annulus": list(self.annulus),
            "K": self.K,
            "passed": self.passed,
            "entries": [{"alpha": list(al), "C": c, "relative_change": self.changes.get(al, 0.0)}
                        for al, c in self.entries.items()],
        }


def _seminorm_constants(a, m, annulus, K):
    x, xi = polar_points(annulus)
    br = _bracket(x, xi)
    out = {}
    for al in _all_alphas(K):
        v = np.abs(E.evaluate(E.diff_multi(a, al), x, xi))
        out[al] = float(np.max(br ** (sum(al) - m) * v))
    return out


def seminorm_screen(a, m, annulus=(5.0, 50.0), K=2, rtol=0.1):
    """Grid-sup seminorm estimates; PASS iff finite and stable when the outer radius moves by 20%."""
    a = _node(a)
    base = _seminorm_constants(a, m, annulus, K)
    lo = _seminorm_constants(a, m, (annulus[0], 0.8 * annulus[1]), K)
    hi = _seminorm_constants(a, m, (annulus[0], 1.2 * annulus[1]), K)
    ok = True
    changes = {}
    for al, c in base.items():
        d = max(abs(lo[al] - c), abs(hi[al] - c))
        changes[al] = d / c if c > 0 else 0.0
        if not (np.isfinite(c) and np.isfinite(lo[al]) and np.isfinite(hi[al])):
            ok = False
        elif d > rtol * c + 1e-12:
            ok = False
    return SeminormTable(float(m), tuple(annulus), K, base, ok, changes)


# --- Weyl product ----------------------------------------------------------------------


def weyl_product_truncated(a, b, n, K=DEFAULT_K):
    """Partial sum over j + k < n of the Weyl product expansion of a # b.

    Term (j, k): (-1)^k / (j! k!) 2^-(j+k) D_x^k d_xi^j a * D_x^j d_xi^k b, D_x = -i d_x.
    """
    a, b = _node(a), _node(b)
    if n < 1:
        raise ValueError("n must be >= 1")
    if n - 1 > K:
        raise DerivativeOrderError(f"truncation n = {n} needs derivatives beyond order {K}")
    terms = []
    for j in range(n):
        for k in range(n - j):
            c = (-1) ** k / (factorial(j) * factorial(k)) * 2.0 ** -(j + k) * (-1j) ** (j + k)
            da = E.diff_multi(a, (k, j))
            db = E.diff_multi(b, (j, k))
            terms.append(E.mul(E.Const(c), da, db))
    return E.add(*terms)


# --- Wick smoothing ----------------------------------------------------------------------


@dataclass(frozen=True)
class WickCoefficients:
    """c_alpha = (1/alpha!) pi^-1 int (-w)^alpha exp(-|w|^2) dw."""

    K: int
    coeffs: dict

    def __getitem__(self, alpha):
        return self.coeffs[tuple(alpha)]


def _gauss_moment(n):
    # int (-w)^n exp(-w^2) dw, exact by Gauss-Hermite for degree < 2 * nodes
    w, wt = np.polynomial.hermite.hermgauss(n // 2 + 2)
    return float(np.sum(wt * (-w) ** n))


def wick_coefficients(K):
    if K < 0:
        raise ValueError("K must be >= 0")
    mom = [_gauss_moment(n) for n in range(K + 1)]
    out = {}
    for al in _all_alphas(K):
        a, b = al
        if (a % 2) or (b % 2):
            out[al] = 0.0
        else:
            out[al] = mom[a] * mom[b] / (factorial(a) * factorial(b) * np.pi)
    out[(0, 0)] = 1.0
    return WickCoefficients(K, out)


WICK_RADIUS = 6.0
WICK_STEP = 0.5


def _wick_nodes(radius=WICK_RADIUS, h=WICK_STEP):
    t = h * np.arange(-int(radius / h), int(radius / h) + 1)
    W1, W2 = np.meshgrid(t, t, indexing="ij")
    keep = W1**2 + W2**2 <= radius**2 + 1e-12
    w1, w2 = W1[keep], W2[keep]
    wt = h * h / np.pi * np.exp(-(w1**2 + w2**2))
    return w1, w2, wt


@dataclass(frozen=True, eq=False)
class WickSmoothed:
    """b = pi^-1 exp(-|.|^2) * a sampled at points, plus an exact tree for polynomial a."""

    values: np.ndarray
    expr: object
    truncation_bound: float


def wick_expansion(a):
    """sum_alpha c_alpha d^alpha a, exact when a is a polynomial; None otherwise."""
    a = _node(a)
    p = E.as_polynomial(a)
    if p is None:
        return None
    deg = E.polynomial_degree(p)
    c = wick_coefficients(deg)
    terms = [E.mul(E.Const(c[al]), E.diff_multi(a, al)) for al in _all_alphas(deg) if c[al] != 0]
    out = E.polynomial_to_node(E.as_polynomial(E.add(*terms)))
    return out


def wick_smooth(a, x, xi, radius=WICK_RADIUS, h=WICK_STEP):
    """Gaussian smoothing by direct quadrature over the disc |w| <= radius.

    The symbol tree is evaluated at the shifted points, so no grid padding is
    involved.  The neglected kernel mass is exp(-radius^2).
    """
    a = _node(a)
    x, xi = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(xi, dtype=float))
    w1, w2, wt = _wick_nodes(radius, h)
    out = np.zeros(x.shape, dtype=complex)
    flat_x, flat_xi = x.ravel(), xi.ravel()
    acc = np.zeros(flat_x.shape, dtype=complex)
    for s1, s2, c in zip(w1, w2, wt):
        acc += c * E.evaluate(a, flat_x - s1, flat_xi - s2)
    out = acc.reshape(x.shape)
    return WickSmoothed(out, wick_expansion(a), float(np.exp(-radius * radius)))


# --- direction-resolved estimates ---------------------------------------------------------


def direction_angles(D=N_DIRECTIONS):
    return 2 * np.pi * np.arange(D) / D


def _ray_family(thetas, annulus, n_r, neighbourhood, D):
    """Points on rays theta + j*step, |j| <= neighbourhood; shape (len(thetas), 2n+1, n_r)."""
    step = 2 * np.pi / D
    r = log_radii(annulus[0], annulus[1], n_r)
    offs = step * np.arange(-neighbourhood, neighbourhood + 1)
    T = np.asarray(thetas)[:, None, None] + offs[None, :, None]
    return r, r[None, None, :] * np.cos(T), r[None, None, :] * np.sin(T)


@dataclass(frozen=True, eq=False)
class CharSetEstimate:
    """Per-direction hypoellipticity constants of order m'."""

    m_prime: float
    thetas: np.ndarray
    lower: np.ndarray
    ratio: np.ndarray
    flags: np.ndarray  # True: non-hypercharacteristic
    annulus: tuple
    K: int

    def characteristic(self):
        """Angles (radians) flagged hypercharacteristic."""
        return self.thetas[~self.flags]

    def is_empty(self):
        return bool(np.all(self.flags))

    def to_record(self):
        return {
            "m_prime": self.m_prime,
            "annulus": list(self.annulus),
            "K": self.K,
            "directions": [
                {"theta_deg": float(np.degrees(t)), "lower": float(lo), "ratio": float(ra), "non_hypercharacteristic": bool(f)}
                for t, lo, ra, f in zip(self.thetas, self.lower, self.ratio, self.flags)
            ],
        }


def estimate_char_set(a, m_prime, thetas=None, annulus=DEFAULT_ANNULUS, K=3, tau_low=TAU_LOW,
                      tau_ratio=TAU_RATIO, neighbourhood=1, n_r=24, D=N_DIRECTIONS):
    a = _node(a)
    thetas = direction_angles(D) if thetas is None else np.asarray(thetas, dtype=float)
    _, x, xi = _ray_family(thetas, annulus, n_r, neighbourhood, D)
    br = _bracket(x, xi)
    mag = np.abs(E.evaluate(a, x, xi))
    tiny = mag < ABS_FLOOR
    safe = np.where(tiny, 1.0, mag)
    lower = np.min(np.where(tiny, 0.0, mag * br ** (-m_prime)), axis=(1, 2))
    ratio = np.ones(len(thetas))
    for al in _all_alphas(K)[1:]:
        d = np.abs(E.evaluate(E.diff_multi(a, al), x, xi))
        q = np.where(tiny, np.inf, d * br ** sum(al) / safe)
        ratio = np.maximum(ratio, np.max(q, axis=(1, 2)))
    lower = np.where(np.any(tiny, axis=(1, 2)), 0.0, lower)
    flags = (lower >= tau_low) & (ratio <= tau_ratio)
    return CharSetEstimate(float(m_prime), thetas, lower, ratio, flags, tuple(annulus), K)


@dataclass(frozen=True, eq=False)
class MicrosupportEstimate:
    thetas: np.ndarray
    decay: np.ndarray
    r2: np.ndarray
    verdict: np.ndarray  # "in", "out" or "inconclusive"
    n_max: float
    annulus: tuple

    def directions_in(self):
        return self.thetas[self.verdict == "in"]

    def is_empty(self):
        return not np.any(self.verdict == "in")

    def to_record(self):
        return {
            "n_max": self.n_max,
            "annulus": list(self.annulus),
            "directions": [
                {"theta_deg": float(np.degrees(t)), "decay": float(g), "r2": float(q), "verdict": str(v)}
                for t, g, q, v in zip(self.thetas, self.decay, self.r2, self.verdict)
            ],
        }


def _decay_verdicts(r, g, cap):
    """Classify decay of g (rows: directions) along radii r."""
    n = g.shape[0]
    decay = np.zeros(n)
    r2 = np.ones(n)
    verdict = np.empty(n, dtype=object)
    for i in range(n):
        if g[i, -1] <= ABS_FLOOR or not np.all(g[i] > 0):
            decay[i], verdict[i] = np.inf, "out"
            continue
        fit = fit_loglog(r, g[i])
        decay[i], r2[i] = fit.decay, fit.r2
        if fit.decay > cap and fit.good:
            verdict[i] = "out"
        elif not fit.good:
            verdict[i] = "inconclusive"
        else:
            verdict[i] = "in"
    return decay, r2, verdict.astype(str)


def estimate_microsupport(a, thetas=None, annulus=DEFAULT_ANNULUS, K=3, n_max=8.0, n_r=24,
                          neighbourhood=1, D=N_DIRECTIONS):
    """A direction leaves the microsupport when max_{|alpha|<=K} |d^alpha a| decays faster than r^-n_max."""
    a = _node(a)
    thetas = direction_angles(D) if thetas is None else np.asarray(thetas, dtype=float)
    r, x, xi = _ray_family(thetas, annulus, n_r, neighbourhood, D)
    g = np.zeros(x.shape)
    for al in _all_alphas(K):
        g = np.maximum(g, np.abs(E.evaluate(E.diff_multi(a, al), x, xi)))
    g = g.max(axis=1)
    decay, r2, verdict = _decay_verdicts(r, g, n_max)
    return MicrosupportEstimate(thetas, decay, r2, verdict, float(n_max), tuple(annulus))


# --- parametrix -----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ParametrixResult:
    b: object
    terms: tuple
    remainder: object
    thetas: np.ndarray
    radii: np.ndarray
    samples: np.ndarray  # |remainder| on (direction, radius)
    decay: np.ndarray
    r2: np.ndarray

    def min_decay(self):
        finite = self.decay[np.isfinite(self.decay)]
        return float(finite.min()) if finite.size else np.inf


def parametrix_truncated(a, chi, m_prime, n_terms, annulus=(20.0, 2000.0), n_r=24, D=N_DIRECTIONS,
                         n_product=None):
    """b = b_0 + ... + b_{n-1} with b_0 = chi/a, b_{j+1} = -r_j/a, r_j = (b_0+...+b_j) # a - chi."""
    a, chi = _node(a), _node(chi)
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    thetas = direction_angles(D)
    r = log_radii(annulus[0], annulus[1], n_r)
    X = r[None, :] * np.cos(thetas)[:, None]
    XI = r[None, :] * np.sin(thetas)[:, None]
    chi_vals = np.abs(E.evaluate(chi, X, XI))
    on = np.any(chi_vals > 0, axis=1)
    if not np.any(on):
        raise ParametrixError("cutoff vanishes on the whole annulus")
    cs = estimate_char_set(a, m_prime, thetas[on], annulus, K=3, D=D)
    if not cs.is_empty():
        bad = np.degrees(cs.characteristic())
        raise ParametrixError(f"symbol is hypercharacteristic of order {m_prime} at {bad.min():.1f}..{bad.max():.1f} deg "
                              "inside the cutoff support")
    if n_product is None:
        n_product = max(3, n_terms + 1)
    inv = E.power(a, -1)
    terms = [E.mul(chi, inv)]
    b = terms[0]
    rem = E.add(weyl_product_truncated(b, a, n_product), E.mul(E.Const(-1.0), chi))
    for _ in range(1, n_terms):
        nxt = E.mul(E.Const(-1.0), rem, inv)
        terms.append(nxt)
        b = E.add(b, nxt)
        rem = E.add(weyl_product_truncated(b, a, n_product), E.mul(E.Const(-1.0), chi))
    samples = np.abs(E.evaluate(rem, X, XI))
    decay = np.full(D, np.inf)
    r2 = np.ones(D)
    sub = samples[on]
    dec, q, _ = _decay_verdicts(r, sub, np.inf)
    decay[on], r2[on] = dec, q
    return ParametrixResult(b, tuple(terms), rem, thetas, r, samples, decay, r2)
