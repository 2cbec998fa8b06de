"""Analytic STFTs for signals built from Gaussian-type terms and point masses.

Every oracle-supported signal is a finite sum of

* ``GTerm``: P(y) exp(-alpha y^2/2 + beta y + gamma), P a polynomial and
  Re(alpha) >= 0 (alpha = 0 requires a purely imaginary beta), and
* ``DTerm``: sum_k c_k delta^(k)(y - y0).

The family is closed under multiplication by y, differentiation and the
Fourier transform, so polynomial Weyl operators and the Fourier transform act
exactly.  Against Gaussian or Hermite windows the STFT reduces to complex
Gaussian moment integrals, which is what ``stft_terms`` evaluates.
"""

from dataclasses import dataclass
from math import comb, factorial

import numpy as np

from gmla import expr as E

PI_M14 = np.pi**-0.25


class UnsupportedSignal(ValueError):
    pass


@dataclass(frozen=True)
class GTerm:
    poly: tuple  # ascending complex coefficients
    alpha: complex
    beta: complex
    gamma: complex

    def key(self):
        return (self.alpha, self.beta, self.gamma)


@dataclass(frozen=True)
class DTerm:
    coeffs: tuple  # c_k multiplies delta^(k)(y - y0)
    y0: float


def _trim(p):
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return tuple(complex(c) for c in p)


def _padd(p, q):
    n = max(len(p), len(q))
    out = [0j] * n
    for i, c in enumerate(p):
        out[i] += c
    for i, c in enumerate(q):
        out[i] += c
    return _trim(out)


def _pmul(p, q):
    return _trim(np.convolve(np.asarray(p, dtype=complex), np.asarray(q, dtype=complex)))


def _pder(p):
    if len(p) == 1:
        return (0j,)
    return _trim([k * p[k] for k in range(1, len(p))])


def simplify(terms):
    """Merge terms with equal exponents / equal support points; drop zeros."""
    g = {}
    d = {}
    for t in terms:
        if isinstance(t, GTerm):
            g[t.key()] = _padd(g.get(t.key(), (0j,)), t.poly)
        else:
            d[t.y0] = _padd(d.get(t.y0, (0j,)), t.coeffs)
    out = [GTerm(p, *k) for k, p in g.items() if any(c != 0 for c in p)]
    out += [DTerm(c, y0) for y0, c in d.items() if any(v != 0 for v in c)]
    return out


# --- building from expression trees -----------------------------------------------


def _hermite_poly(k):
    h = np.polynomial.hermite.herm2poly([0] * k + [1])
    return tuple(complex(c) for c in h * (2.0**k * factorial(k) * np.sqrt(np.pi)) ** -0.5)


def terms_of(node):
    """Decompose a signal tree into Gaussian-type terms and point masses."""
    if isinstance(node, E.Const):
        return [GTerm((complex(node.value),), 0j, 0j, 0j)]
    if isinstance(node, E.Gauss):
        return [GTerm((PI_M14 + 0j,), 1 + 0j, complex(node.x0, node.xi0), complex(-0.5 * node.x0**2))]
    if isinstance(node, E.Chirp):
        return [GTerm((1 + 0j,), complex(0, -node.c), 0j, 0j)]
    if isinstance(node, E.PlaneWave):
        return [GTerm((1 + 0j,), 0j, complex(0, node.xi0), 0j)]
    if isinstance(node, E.DeltaApprox):
        e = node.eps
        return [GTerm(((2 * np.pi * e * e) ** -0.5 + 0j,), complex(1 / e**2), 0j, 0j)]
    if isinstance(node, E.Delta):
        return [DTerm((1 + 0j,), 0.0)]
    if isinstance(node, E.Hermite):
        return [GTerm(_hermite_poly(node.k), 1 + 0j, 0j, 0j)]
    if isinstance(node, E.Sum):
        return simplify([t for child in node.terms for t in terms_of(child)])
    if isinstance(node, E.Prod):
        acc = terms_of(node.factors[0])
        for f in node.factors[1:]:
            acc = multiply(acc, terms_of(f))
        return acc
    if isinstance(node, E.Pow):
        base = terms_of(node.base)
        acc = [GTerm((1 + 0j,), 0j, 0j, 0j)]
        for _ in range(node.n):
            acc = multiply(acc, base)
        return acc
    raise UnsupportedSignal(f"{E.to_text(node)} has no closed-form STFT")


def supports(node):
    try:
        terms_of(node)
    except (UnsupportedSignal, TypeError):
        return False
    return True


def multiply(a, b):
    out = []
    for s in a:
        for t in b:
            out.extend(_mul_terms(s, t))
    return simplify(out)


def _mul_terms(s, t):
    if isinstance(s, GTerm) and isinstance(t, GTerm):
        return [GTerm(_pmul(s.poly, t.poly), s.alpha + t.alpha, s.beta + t.beta, s.gamma + t.gamma)]
    if isinstance(s, DTerm) and isinstance(t, DTerm):
        raise UnsupportedSignal("products of point masses are undefined")
    if isinstance(s, DTerm):
        s, t = t, s
    # f(y) delta^(k)(y - y0) = sum_j (-1)^j C(k, j) f^(j)(y0) delta^(k-j)(y - y0)
    out = (0j,)
    for k, c in enumerate(t.coeffs):
        if c == 0:
            continue
        f = [s]
        for _ in range(k):
            f = derivative(f)
        new = [0j] * (k + 1)
        for j in range(k + 1):
            val = evaluate_terms(f if j == 0 else _nth_derivative([s], j), np.array([t.y0]))[0]
            new[k - j] += (-1) ** j * comb(k, j) * val * c
        out = _padd(out, new)
    return [DTerm(out, t.y0)]


def _nth_derivative(terms, n):
    for _ in range(n):
        terms = derivative(terms)
    return terms


# --- elementary operations -----------------------------------------------------------


def scale(terms, c):
    return simplify([GTerm(tuple(c * v for v in t.poly), t.alpha, t.beta, t.gamma) if isinstance(t, GTerm)
                     else DTerm(tuple(c * v for v in t.coeffs), t.y0) for t in terms])


def mul_y(terms):
    out = []
    for t in terms:
        if isinstance(t, GTerm):
            out.append(GTerm(_trim((0j,) + t.poly), t.alpha, t.beta, t.gamma))
        else:
            # y delta^(k)(y - y0) = y0 delta^(k) - k delta^(k-1)
            c = [t.y0 * v for v in t.coeffs]
            for k in range(1, len(t.coeffs)):
                c[k - 1] -= k * t.coeffs[k]
            out.append(DTerm(_trim(c), t.y0))
    return simplify(out)


def derivative(terms):
    out = []
    for t in terms:
        if isinstance(t, GTerm):
            # (P' + P (beta - alpha y)) e^{...}
            p = _padd(_pder(t.poly), _pmul(t.poly, (t.beta, -t.alpha)))
            out.append(GTerm(p, t.alpha, t.beta, t.gamma))
        else:
            out.append(DTerm((0j,) + t.coeffs, t.y0))
    return simplify(out)


def apply_weyl_polynomial(coeffs, terms):
    """Apply the Weyl quantization of sum c[a, b] x^a xi^b.

    (x^a xi^b)^w = 2^-a sum_k C(a, k) x^k D^b x^(a-k) with D = -i d/dy.
    """
    out = []
    for a in range(coeffs.shape[0]):
        for b in range(coeffs.shape[1]):
            c = coeffs[a, b]
            if c == 0:
                continue
            for k in range(a + 1):
                t = terms
                for _ in range(a - k):
                    t = mul_y(t)
                for _ in range(b):
                    t = scale(derivative(t), -1j)
                for _ in range(k):
                    t = mul_y(t)
                out.extend(scale(t, c * comb(a, k) * 2.0**-a))
    return simplify(out)


def fourier(terms):
    """Fourier transform F f(xi) = int f(y) exp(-i y xi) dy, as terms in xi."""
    out = []
    for t in terms:
        if isinstance(t, DTerm):
            for k, c in enumerate(t.coeffs):
                poly = (0j,) * k + (c * 1j**k,)
                out.append(GTerm(poly, 0j, complex(0, -t.y0), 0j))
        elif t.alpha == 0:
            if abs(t.beta.real) > 0:
                raise UnsupportedSignal("exponentially growing term has no Fourier transform")
            coeffs = tuple(2 * np.pi * 1j**n * p * np.exp(t.gamma) for n, p in enumerate(t.poly))
            out.append(DTerm(coeffs, float(t.beta.imag)))
        else:
            a, b = t.alpha, t.beta
            # moments of y under exp(-a y^2/2 + (b - i xi) y): mu = (b - i xi)/a is linear in xi
            mu = (b / a, -1j / a)
            moments = [(1 + 0j,), mu]
            for n in range(2, len(t.poly)):
                moments.append(_padd(_pmul(mu, moments[n - 1]), tuple((n - 1) / a * c for c in moments[n - 2])))
            poly = (0j,)
            for n, p in enumerate(t.poly):
                poly = _padd(poly, tuple(p * c for c in moments[n]))
            pref = np.sqrt(2 * np.pi / a)
            out.append(GTerm(tuple(pref * c for c in poly), 1 / a, -1j * b / a, t.gamma + b * b / (2 * a)))
    return simplify(out)


def evaluate_terms(terms, y):
    y = np.asarray(y, dtype=float)
    out = np.zeros(y.shape, dtype=complex)
    for t in terms:
        if isinstance(t, DTerm):
            raise ValueError("point masses have no pointwise value")
        out += np.polynomial.polynomial.polyval(y, np.asarray(t.poly)) * np.exp(
            -0.5 * t.alpha * y * y + t.beta * y + t.gamma)
    return out


def sample_terms(terms, grid):
    """Grid samples; point masses become (derivatives of) the discrete delta."""
    out = np.zeros(grid.N, dtype=complex)
    for t in terms:
        if isinstance(t, GTerm):
            out += evaluate_terms([t], grid.x)
        else:
            if any(c != 0 for c in t.coeffs[1:]):
                raise ValueError("derivatives of point masses cannot be sampled")
            j = int(round((t.y0 + grid.L) / grid.hx))
            out[j] += t.coeffs[0] / grid.hx
    return out


# --- windows and the STFT --------------------------------------------------------------


def window_terms(kind="gaussian", k=0):
    """Gaussian or Hermite windows as a single GTerm with alpha = 1."""
    if kind == "gaussian":
        k = 0
    elif kind != "hermite":
        raise UnsupportedSignal(f"no closed form for window {kind!r}")
    return GTerm(_hermite_poly(k), 1 + 0j, 0j, 0j)


def window_from_text(spec):
    spec = spec.strip()
    if spec == "gaussian":
        return window_terms("gaussian")
    if spec.startswith("hermite(") and spec.endswith(")"):
        return window_terms("hermite", int(spec[8:-1]))
    raise UnsupportedSignal(f"no closed form for window {spec!r}")


def _shifted_window_poly(w, x):
    """Coefficients (in y) of conj(W)(y - x), as a list of arrays."""
    wc = [np.conj(c) for c in w.poly]
    deg = len(wc) - 1
    out = []
    for m in range(deg + 1):
        acc = np.zeros_like(x, dtype=complex)
        for j in range(m, deg + 1):
            acc = acc + wc[j] * comb(j, m) * (-x) ** (j - m)
        out.append(acc)
    return out


def _gterm_stft(t, w, x, xi):
    p = t.alpha + 1
    q = t.beta + x - 1j * xi
    wpoly = _shifted_window_poly(w, x)
    # Q(y) = P(y) * conj(W)(y - x)
    Q = [np.zeros_like(q) for _ in range(len(t.poly) + len(wpoly) - 1)]
    for i, pc in enumerate(t.poly):
        if pc == 0:
            continue
        for j, wc in enumerate(wpoly):
            Q[i + j] = Q[i + j] + pc * wc
    mu = q / p
    total = Q[0].copy()
    m_prev, m_cur = np.ones_like(q), mu
    for n in range(1, len(Q)):
        if n > 1:
            m_prev, m_cur = m_cur, mu * m_cur + (n - 1) / p * m_prev
        total = total + Q[n] * m_cur
    expo = q * q / (2 * p) + t.gamma - 0.5 * x * x
    return np.sqrt(2 * np.pi / p) * np.exp(expo) * total


def _dterm_stft(t, w, x, xi):
    # (-1)^k d^k/dy^k [conj(W)(y - x) exp(h(y))] at y0, h(y) = -(y - x)^2/2 - i y xi
    g = _shifted_window_poly(w, x)
    hp = [x - 1j * xi, -np.ones_like(x, dtype=complex)]  # h'(y) = (x - i xi) - y
    y0 = t.y0
    total = np.zeros(np.broadcast(x, xi).shape, dtype=complex)
    for k, c in enumerate(t.coeffs):
        if k > 0:
            gd = [g[i] * i for i in range(1, len(g))] or [np.zeros_like(g[0])]
            prod = [np.zeros_like(hp[0]) for _ in range(len(g) + 1)]
            for i, gc in enumerate(g):
                prod[i] = prod[i] + gc * hp[0]
                prod[i + 1] = prod[i + 1] + gc * hp[1]
            g = [prod[i] + (gd[i] if i < len(gd) else 0) for i in range(len(prod))]
        if c == 0:
            continue
        val = sum(gc * y0**i for i, gc in enumerate(g))
        total = total + c * (-1) ** k * val
    h0 = -0.5 * (y0 - x) ** 2 - 1j * y0 * xi
    return total * np.exp(h0)


def stft_terms(terms, window, x, xi):
    """Exact V_psi u at points (x, xi) for u given as terms and a closed-form window."""
    x, xi = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(xi, dtype=float))
    out = np.zeros(x.shape, dtype=complex)
    for t in terms:
        if isinstance(t, GTerm):
            if t.alpha.real < 0:
                raise UnsupportedSignal("growing Gaussian term")
            out += _gterm_stft(t, window, x, xi)
        else:
            out += _dterm_stft(t, window, x, xi)
    return out


def closed_form_stft(node, z, window="gaussian"):
    """V_psi u(z) for a signal tree and z = (x, xi) arrays."""
    w = window_from_text(window) if isinstance(window, str) else window
    x, xi = z
    return stft_terms(terms_of(node), w, x, xi)
