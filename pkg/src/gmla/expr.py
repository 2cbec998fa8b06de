"""Expression trees for signals u(y) and phase-space symbols a(x, xi).

Nodes are immutable and hashable.  The constructors ``add``, ``mul`` and
``power`` keep trees in a canonical form (constants folded, nested sums and
products flattened) so that printing and re-parsing reproduces the same tree.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from gmla.smoothstep import step_derivative


class Node:
    """Base class; caches the structural hash."""

    __slots__ = ()

    def __hash__(self):
        try:
            return self._h
        except AttributeError:
            h = hash((type(self).__name__,) + tuple(getattr(self, f) for f in self.__dataclass_fields__))
            object.__setattr__(self, "_h", h)
            return h

    def __str__(self):
        return to_text(self)

    def __add__(self, other):
        return add(self, _lift(other))

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, _lift(other))

    __rmul__ = __mul__

    def __neg__(self):
        return mul(Const(-1.0), self)

    def __sub__(self, other):
        return add(self, -_lift(other))

    def __pow__(self, n):
        return power(self, n)


def _node(cls):
    cls = dataclass(frozen=True)(cls)
    return cls


@_node
class Const(Node):
    value: complex


@_node
class Sum(Node):
    terms: tuple


@_node
class Prod(Node):
    factors: tuple


@_node
class Pow(Node):
    base: Node
    n: int


# --- symbol primitives -------------------------------------------------------


@_node
class Var(Node):
    name: str  # "x" or "xi"


@_node
class Bracket(Node):
    """<z>^m = (1 + x^2 + xi^2)^(m/2)."""

    m: float


@_node
class GaussZ(Node):
    """exp(-|z|^2)."""


@_node
class Norm(Node):
    """|z|^p."""

    p: float


@_node
class RStep(Node):
    """S^(k)(sign * (|z| - anchor) / width)."""

    k: int
    anchor: float
    width: float
    sign: float


@_node
class AStep(Node):
    """S^(k)(sign * (phi - anchor) / width) with phi = wrap(angle(z) - mid) in (-pi, pi]."""

    k: int
    mid: float
    anchor: float
    width: float
    sign: float


# --- signal primitives -------------------------------------------------------


@_node
class Gauss(Node):
    """Time-frequency shifted standard Gaussian exp(i y xi0) psi0(y - x0)."""

    x0: float
    xi0: float


@_node
class Chirp(Node):
    c: float


@_node
class PlaneWave(Node):
    xi0: float


@_node
class DeltaApprox(Node):
    eps: float


@_node
class Delta(Node):
    """Dirac delta at the origin."""


@_node
class Hermite(Node):
    k: int


@_node
class File(Node):
    path: str


X = Var("x")
XI = Var("xi")
ZERO = Const(0.0)
ONE = Const(1.0)

SYMBOL_PRIMITIVES = (Var, Bracket, GaussZ, Norm, RStep, AStep)
SIGNAL_PRIMITIVES = (Gauss, Chirp, PlaneWave, DeltaApprox, Delta, Hermite, File)


def _lift(v):
    if isinstance(v, Node):
        return v
    return Const(complex(v))


# --- canonical constructors ---------------------------------------------------


def _is_const(n, value=None):
    return isinstance(n, Const) and (value is None or n.value == value)


def add(*terms):
    flat = []
    c = 0j
    has_c = False
    for t in terms:
        parts = t.terms if isinstance(t, Sum) else (t,)
        for p in parts:
            if isinstance(p, Const):
                c += p.value
                has_c = True
            else:
                flat.append(p)
    if has_c and (c != 0 or not flat):
        flat.insert(0, Const(complex(c)))
    if not flat:
        return Const(0j)
    if len(flat) == 1:
        return flat[0]
    return Sum(tuple(flat))


def mul(*factors):
    flat = []
    c = 1 + 0j
    has_c = False
    for f in factors:
        parts = f.factors if isinstance(f, Prod) else (f,)
        for p in parts:
            if isinstance(p, Const):
                c *= p.value
                has_c = True
            else:
                flat.append(p)
    if c == 0:
        return Const(0j)
    if has_c and (c != 1 or not flat):
        flat.insert(0, Const(complex(c)))
    if not flat:
        return Const(1 + 0j)
    if len(flat) == 1:
        return flat[0]
    return Prod(tuple(flat))


def power(base, n):
    n = int(n)
    if isinstance(base, Const):
        return Const(complex(base.value**n))
    if n == 0:
        return Const(1 + 0j)
    if n == 1:
        return base
    return Pow(base, n)


# --- printing ----------------------------------------------------------------


def _num(v):
    return repr(float(v))


def _const_text(c):
    c = complex(c)
    if c.imag == 0:
        return _num(c.real)
    return "(" + _num(c.real) + " + " + _num(c.imag) + "*i)"


def to_text(n):
    """Render a node in the expression grammar; parse(to_text(n)) == n."""
    if isinstance(n, Const):
        return _const_text(n.value)
    if isinstance(n, Sum):
        return " + ".join(_wrap(t, Sum) for t in n.terms)
    if isinstance(n, Prod):
        return "*".join(_wrap(f, Prod) for f in n.factors)
    if isinstance(n, Pow):
        base = to_text(n.base)
        if not isinstance(n.base, (Var, Bracket, GaussZ, Norm, RStep, AStep, Gauss, Chirp,
                                   PlaneWave, DeltaApprox, Delta, Hermite, File)):
            base = "(" + base + ")"
        return f"{base}^{n.n}" if n.n >= 0 else f"{base}^({n.n})"
    if isinstance(n, Var):
        return n.name
    if isinstance(n, Bracket):
        return f"bracket({_num(n.m)})"
    if isinstance(n, GaussZ):
        return "gaussz"
    if isinstance(n, Norm):
        return f"norm({_num(n.p)})"
    if isinstance(n, RStep):
        return f"rstep({n.k}, {_num(n.anchor)}, {_num(n.width)}, {_num(n.sign)})"
    if isinstance(n, AStep):
        return f"astep({n.k}, {_num(n.mid)}, {_num(n.anchor)}, {_num(n.width)}, {_num(n.sign)})"
    if isinstance(n, Gauss):
        return f"gauss({_num(n.x0)}, {_num(n.xi0)})"
    if isinstance(n, Chirp):
        return f"chirp({_num(n.c)})"
    if isinstance(n, PlaneWave):
        return f"planewave({_num(n.xi0)})"
    if isinstance(n, DeltaApprox):
        return f"deltaApprox({_num(n.eps)})"
    if isinstance(n, Delta):
        return "delta"
    if isinstance(n, Hermite):
        return f"hermite({n.k})"
    if isinstance(n, File):
        return 'file("' + n.path.replace("\\", "\\\\").replace('"', '\\"') + '")'
    raise TypeError(f"unknown node {n!r}")


def _wrap(child, parent):
    s = to_text(child)
    if isinstance(child, Sum) or (parent is Prod and isinstance(child, Prod)):
        return "(" + s + ")"
    if parent is Prod and isinstance(child, Const) and complex(child.value).imag == 0 and s.startswith("-"):
        return s
    return s


# --- order inference -----------------------------------------------------------


def infer_order(n):
    """Grammar order rule: bracket(m) -> m, products add, sums take the max."""
    if isinstance(n, Const):
        return 0.0
    if isinstance(n, Var):
        return 1.0
    if isinstance(n, Bracket):
        return float(n.m)
    if isinstance(n, Norm):
        return float(n.p)
    if isinstance(n, (GaussZ, RStep, AStep)):
        return 0.0
    if isinstance(n, Sum):
        return max(infer_order(t) for t in n.terms)
    if isinstance(n, Prod):
        return float(sum(infer_order(f) for f in n.factors))
    if isinstance(n, Pow):
        return n.n * infer_order(n.base)
    raise TypeError(f"order undefined for {type(n).__name__}")


def is_symbol(n):
    if isinstance(n, (Const,) + SYMBOL_PRIMITIVES):
        return True
    if isinstance(n, Sum):
        return all(is_symbol(t) for t in n.terms)
    if isinstance(n, Prod):
        return all(is_symbol(f) for f in n.factors)
    if isinstance(n, Pow):
        return is_symbol(n.base)
    return False


def walk(n):
    yield n
    for child in getattr(n, "terms", ()) + getattr(n, "factors", ()):
        yield from walk(child)
    if isinstance(n, Pow):
        yield from walk(n.base)


# --- symbol evaluation -----------------------------------------------------------

_R_FLOOR = 1e-150


def evaluate(n, x, xi, cache=None):
    """Evaluate a symbol tree at arrays x, xi (broadcast); returns complex array."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    shape = np.broadcast(x, xi).shape
    if cache is None:
        cache = {}
    geo = {}
    out = _eval(n, x, xi, cache, geo)
    return np.broadcast_to(out, shape).astype(complex)


def _geo(geo, key, x, xi):
    if key not in geo:
        if key == "r2":
            geo[key] = x * x + xi * xi
        elif key == "r":
            geo[key] = np.sqrt(_geo(geo, "r2", x, xi))
        elif key == "theta":
            geo[key] = np.arctan2(xi, x)
    return geo[key]


def _eval(n, x, xi, cache, geo):
    if n in cache:
        return cache[n]
    if isinstance(n, Const):
        v = np.asarray(n.value, dtype=complex)
    elif isinstance(n, Var):
        v = x if n.name == "x" else xi
    elif isinstance(n, Bracket):
        v = (1.0 + _geo(geo, "r2", x, xi)) ** (0.5 * n.m)
    elif isinstance(n, GaussZ):
        v = np.exp(-_geo(geo, "r2", x, xi))
    elif isinstance(n, Norm):
        r = np.maximum(_geo(geo, "r", x, xi), _R_FLOOR)
        v = r**n.p
    elif isinstance(n, RStep):
        t = n.sign * (_geo(geo, "r", x, xi) - n.anchor) / n.width
        v = step_derivative(t, n.k)
    elif isinstance(n, AStep):
        phi = wrap_angle(_geo(geo, "theta", x, xi) - n.mid)
        t = n.sign * (phi - n.anchor) / n.width
        v = step_derivative(t, n.k)
    elif isinstance(n, Sum):
        v = 0
        for t in n.terms:
            v = v + _eval(t, x, xi, cache, geo)
    elif isinstance(n, Prod):
        v = 1
        for f in n.factors:
            v = v * _eval(f, x, xi, cache, geo)
    elif isinstance(n, Pow):
        b = _eval(n.base, x, xi, cache, geo)
        v = b**n.n if n.n >= 0 else 1.0 / b ** (-n.n)
    else:
        raise TypeError(f"{type(n).__name__} is not a symbol node")
    cache[n] = v
    return v


def wrap_angle(phi):
    """Map angles to (-pi, pi]."""
    return np.pi - np.mod(np.pi - phi, 2 * np.pi)


# --- symbolic differentiation ---------------------------------------------------


@lru_cache(maxsize=200_000)
def diff(n, var):
    """Exact partial derivative of a symbol tree; var is "x" or "xi"."""
    other = XI if var == "x" else X
    coord = X if var == "x" else XI
    if isinstance(n, Const):
        return ZERO
    if isinstance(n, Var):
        return ONE if n.name == var else ZERO
    if isinstance(n, Bracket):
        if n.m == 0:
            return ZERO
        return mul(Const(n.m), coord, Bracket(n.m - 2))
    if isinstance(n, GaussZ):
        return mul(Const(-2.0), coord, n)
    if isinstance(n, Norm):
        if n.p == 0:
            return ZERO
        return mul(Const(n.p), coord, Norm(n.p - 2))
    if isinstance(n, RStep):
        nxt = RStep(n.k + 1, n.anchor, n.width, n.sign)
        return mul(Const(n.sign / n.width), nxt, coord, Norm(-1.0))
    if isinstance(n, AStep):
        nxt = AStep(n.k + 1, n.mid, n.anchor, n.width, n.sign)
        # d(phi)/dx = -xi/|z|^2, d(phi)/dxi = x/|z|^2
        s = -1.0 if var == "x" else 1.0
        return mul(Const(s * n.sign / n.width), nxt, other, Norm(-2.0))
    if isinstance(n, Sum):
        return add(*(diff(t, var) for t in n.terms))
    if isinstance(n, Prod):
        parts = []
        fs = n.factors
        for i, f in enumerate(fs):
            d = diff(f, var)
            if _is_const(d, 0):
                continue
            parts.append(mul(*(fs[:i] + (d,) + fs[i + 1 :])))
        return add(*parts)
    if isinstance(n, Pow):
        d = diff(n.base, var)
        if _is_const(d, 0):
            return ZERO
        return mul(Const(float(n.n)), power(n.base, n.n - 1), d)
    raise TypeError(f"{type(n).__name__} is not differentiable as a symbol")


def diff_multi(n, alpha):
    """Mixed derivative d_x^alpha[0] d_xi^alpha[1]."""
    a, b = alpha
    for _ in range(a):
        n = diff(n, "x")
    for _ in range(b):
        n = diff(n, "xi")
    return n


def multi_indices(total):
    """All (a, b) with a + b == total."""
    return [(a, total - a) for a in range(total + 1)]


# --- polynomial symbols ------------------------------------------------------------


def as_polynomial(n):
    """Coefficient array c[a, b] of x^a xi^b if the tree is a polynomial, else None."""
    if isinstance(n, Const):
        return np.array([[complex(n.value)]])
    if isinstance(n, Var):
        return np.array([[0, 1], [0, 0]], dtype=complex) if n.name == "xi" else np.array([[0, 0], [1, 0]], dtype=complex)
    if isinstance(n, Bracket):
        if n.m < 0 or n.m % 2:
            return None
        base = np.zeros((3, 3), dtype=complex)
        base[0, 0] = base[2, 0] = base[0, 2] = 1
        return _poly_pow(base, int(n.m // 2))
    if isinstance(n, Sum):
        parts = [as_polynomial(t) for t in n.terms]
        if any(p is None for p in parts):
            return None
        out = np.zeros((max(p.shape[0] for p in parts), max(p.shape[1] for p in parts)), dtype=complex)
        for p in parts:
            out[: p.shape[0], : p.shape[1]] += p
        return out
    if isinstance(n, Prod):
        out = np.array([[1 + 0j]])
        for f in n.factors:
            p = as_polynomial(f)
            if p is None:
                return None
            out = _poly_mul(out, p)
        return out
    if isinstance(n, Pow):
        if n.n < 0:
            return None
        p = as_polynomial(n.base)
        return None if p is None else _poly_pow(p, n.n)
    return None


def _poly_mul(p, q):
    out = np.zeros((p.shape[0] + q.shape[0] - 1, p.shape[1] + q.shape[1] - 1), dtype=complex)
    for a in range(p.shape[0]):
        for b in range(p.shape[1]):
            if p[a, b] != 0:
                out[a : a + q.shape[0], b : b + q.shape[1]] += p[a, b] * q
    return out


def _poly_pow(p, n):
    out = np.array([[1 + 0j]])
    for _ in range(n):
        out = _poly_mul(out, p)
    return out


def polynomial_degree(coeffs):
    nz = np.argwhere(np.abs(coeffs) > 0)
    return int(nz.sum(axis=1).max()) if nz.size else 0


def polynomial_to_node(coeffs):
    terms = []
    for a in range(coeffs.shape[0]):
        for b in range(coeffs.shape[1]):
            c = coeffs[a, b]
            if c != 0:
                terms.append(mul(Const(complex(c)), power(X, a), power(XI, b)))
    return add(*terms)


def binomial(n, k):
    return comb(n, k)
