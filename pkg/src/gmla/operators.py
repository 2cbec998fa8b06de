"""Weyl and anti-Wick operators as dense matrices, and Shubin-Sobolev norms.

Matrices act on sample vectors with the quadrature weight hx folded in, so
``M @ u.values`` is the sampled output signal.
"""

import logging
from dataclasses import dataclass

import numpy as np

from gmla import expr as E
from gmla.grid import SampledSignal, check_same_grid, make_grid
from gmla.parser import Symbol
from gmla.stft import make_window, stft, stft_adjoint

log = logging.getLogger(__name__)

Q_METHODS = ("stft-weighted", "locop", "weyl-elliptic")
POWER_ITERATIONS = 200
POWER_SEED = 0
CENTRAL_FRACTION = 0.25


@dataclass(frozen=True, eq=False)
class OperatorRep:
    grid: object
    matrix: np.ndarray
    symbol: str = ""
    quantization: str = "weyl"
    order: float = 0.0

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.grid.N, self.grid.N):
            raise ValueError(f"operator matrix must be {self.grid.N}x{self.grid.N}")
        if not np.all(np.isfinite(m)):
            raise ValueError("operator matrix has non-finite entries")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __matmul__(self, other):
        check_same_grid(self.grid, other.grid)
        return OperatorRep(self.grid, self.matrix @ other.matrix, f"({self.symbol})o({other.symbol})",
                           "composition", self.order + other.order)

    def __sub__(self, other):
        check_same_grid(self.grid, other.grid)
        return OperatorRep(self.grid, self.matrix - other.matrix, f"({self.symbol})-({other.symbol})",
                           "difference", max(self.order, other.order))

    def hermitian_defect(self):
        m = self.matrix
        return float(np.max(np.abs(m - m.conj().T)) / max(np.max(np.abs(m)), 1e-300))


def _symbol_parts(a):
    if isinstance(a, Symbol):
        return a.expr, a.order
    return a, E.infer_order(a)


def weyl_quantize(a, grid):
    """Weyl kernel hx*K(x_j, y_k), one inverse FFT over xi per midpoint.

    With midpoint index s = j + k and xi in FFT order, the entry is
    ifft_l[a(-L + s*hx/2, xi_l)] at frequency index (j - k) mod N.
    """
    node, order = _symbol_parts(a)
    g = grid.with_oversample(1)
    N = g.N
    s = np.arange(2 * N - 1)
    mid = -g.L + 0.5 * g.hx * s
    xi = np.fft.ifftshift(g.xi)
    A = E.evaluate(node, mid[:, None], xi[None, :])
    G = np.fft.ifft(A, axis=1)
    j = np.arange(N)
    J, K = np.meshgrid(j, j, indexing="ij")
    M = G[J + K, (J - K) % N]
    return OperatorRep(grid, M, E.to_text(node), "weyl", order)


def antiwick_apply(a, u, grid=None, window=None):
    """A_a u = (2 pi)^-1 V* (a V u) with the Gaussian window."""
    grid = u.grid if grid is None else grid
    check_same_grid(u.grid, grid)
    node, _ = _symbol_parts(a)
    psi = make_window("gaussian", grid) if window is None else window
    V = stft(u, psi, grid)
    X, XI = V.mesh()
    F = V.__class__(grid, V.values * E.evaluate(node, X, XI), V.window, V.provenance)
    out = stft_adjoint(F, psi, grid).values / (2 * np.pi)
    return SampledSignal(grid, out, f"A[{E.to_text(node)}]({u.provenance})")


def antiwick_quantize(a, grid):
    """Matrix of the localization operator, assembled column by column."""
    node, order = _symbol_parts(a)
    eye = np.eye(grid.N, dtype=complex) / grid.hx
    psi = make_window("gaussian", grid)
    cols = [antiwick_apply(node, SampledSignal(grid, eye[:, k]), grid, psi).values for k in range(grid.N)]
    return OperatorRep(grid, np.array(cols).T * grid.hx, E.to_text(node), "antiwick", order)


def apply_operator(op, u):
    check_same_grid(op.grid, u.grid)
    return SampledSignal(u.grid, op.matrix @ u.values, f"{op.quantization}[{op.symbol}]({u.provenance})")


def central_band(grid, fraction=CENTRAL_FRACTION):
    """Orthonormal basis of the lowest harmonic-oscillator modes on the grid."""
    H = weyl_quantize(E.add(E.power(E.X, 2), E.power(E.XI, 2)), grid).matrix
    w, v = np.linalg.eigh(0.5 * (H + H.conj().T))
    order = np.argsort(np.abs(w))
    return v[:, order[: max(1, int(fraction * grid.N))]]


def operator_norm(M, basis=None, iterations=POWER_ITERATIONS, seed=POWER_SEED):
    """Power-iteration estimate of ||M|| (restricted to span(basis) if given)."""
    B = M if basis is None else basis.conj().T @ M @ basis
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(B.shape[1]) + 1j * rng.standard_normal(B.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iterations):
        w = B.conj().T @ (B @ v)
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        est = np.sqrt(nw)
        v = w / nw
    return float(est)


def band_eigenvalues(op, fraction=CENTRAL_FRACTION):
    """Eigenvalues of a Hermitian operator, lowest fraction by magnitude, ascending."""
    m = op.matrix
    w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    w = w[np.argsort(np.abs(w))][: max(1, int(fraction * len(w)))]
    return np.sort(w)


# --- Q^s norms --------------------------------------------------------------------------


@dataclass(frozen=True)
class QNormReport:
    s: float
    value: float
    method: str
    window: str
    grid: dict

    def to_record(self):
        return {"s": self.s, "value": self.value, "method": self.method, "window": self.window, "grid": self.grid}


def weight_symbol(s):
    return E.Bracket(float(s))


def q_norm(u, s, method="stft-weighted", window=None, grid=None):
    grid = u.grid if grid is None else grid
    if method not in Q_METHODS:
        raise ValueError(f"unknown Q^s method {method!r}; expected one of {', '.join(Q_METHODS)}")
    psi = make_window("gaussian", grid) if window is None else window
    if method == "stft-weighted":
        V = stft(u, psi, grid)
        X, XI = V.mesh()
        w = (1.0 + X * X + XI * XI) ** (0.5 * s)
        val = np.sqrt(grid.hx * grid.dxi) * np.linalg.norm(w * V.values)
    elif method == "locop":
        val = antiwick_apply(weight_symbol(s), u, grid, psi).norm()
    else:
        val = apply_operator(weyl_quantize(weight_symbol(s), grid), u).norm()
    return QNormReport(float(s), float(val), method, psi.provenance, grid.describe())


def q_equivalence_constant(signals, s, methods=Q_METHODS):
    """Smallest C with every pairwise method ratio in [1/C, C] over the signals."""
    C = 1.0
    table = []
    for u in signals:
        vals = {m: q_norm(u, s, m).value for m in methods}
        table.append(vals)
        for m1 in methods:
            for m2 in methods:
                r = vals[m1] / vals[m2]
                C = max(C, r, 1.0 / r)
    return C, table


@dataclass(frozen=True)
class BoundednessReport:
    symbol: str
    m: float
    s: float
    ratios: dict  # N -> sup ratio
    passed: bool
    excluded: bool = False
    reason: str = ""

    def to_record(self):
        return {"symbol": self.symbol, "m": self.m, "s": self.s, "passed": self.passed, "excluded": self.excluded,
                "reason": self.reason, "ratios": {str(k): v for k, v in self.ratios.items()}}


def q_boundedness_check(a, s, test_set, L=16.0, sizes=(256, 512), method="stft-weighted", rtol=0.2):
    """sup_u ||a^w u||_{Q^(s-m)} / ||u||_{Q^s}, stable under doubling N.

    ``test_set`` holds signal trees; they are resampled at each grid size.
    """
    from gmla.signals import sample_signal
    from gmla.symbols import seminorm_screen

    node, m = _symbol_parts(a)
    text = E.to_text(node)
    screen = seminorm_screen(node, m)
    if not screen.passed:
        return BoundednessReport(text, m, float(s), {}, False, True, f"not a symbol of order {m:g}")
    ratios = {}
    for N in sizes:
        g = make_grid(L=L, N=N)
        op = weyl_quantize(node, g)
        sup = 0.0
        for t in test_set:
            u = sample_signal(t, g)
            num = q_norm(apply_operator(op, u), s - m, method).value
            sup = max(sup, num / q_norm(u, s, method).value)
        ratios[N] = sup
    vals = list(ratios.values())
    ok = all(np.isfinite(vals)) and abs(vals[-1] - vals[0]) < rtol * vals[0]
    return BoundednessReport(text, float(m), float(s), ratios, bool(ok))
