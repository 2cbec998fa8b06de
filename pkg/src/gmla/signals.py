"""Pointwise evaluation and grid sampling of signal expressions."""

import csv
import logging
import warnings

import numpy as np

from gmla import expr as E
from gmla.grid import SampledSignal

log = logging.getLogger(__name__)

PI_M14 = np.pi**-0.25
BOUNDARY_RTOL = 1e-8


class BoundaryDecayWarning(UserWarning):
    pass


def hermite_functions(y, kmax):
    """L2-normalized Hermite functions h_0..h_kmax at y, shape (kmax+1, len(y))."""
    y = np.asarray(y, dtype=float)
    h = np.zeros((kmax + 1,) + y.shape)
    h[0] = PI_M14 * np.exp(-0.5 * y * y)
    if kmax >= 1:
        h[1] = np.sqrt(2.0) * y * h[0]
    for n in range(1, kmax):
        h[n + 1] = np.sqrt(2.0 / (n + 1)) * y * h[n] - np.sqrt(n / (n + 1.0)) * h[n - 1]
    return h


def gaussian(y):
    """The standard window pi^(-1/4) exp(-y^2/2)."""
    y = np.asarray(y, dtype=float)
    return PI_M14 * np.exp(-0.5 * y * y)


def evaluate_signal(node, y):
    """Evaluate a signal tree at points y; delta and file nodes have no pointwise value."""
    y = np.asarray(y, dtype=float)
    if isinstance(node, E.Const):
        return np.full(y.shape, node.value, dtype=complex)
    if isinstance(node, E.Gauss):
        return np.exp(1j * node.xi0 * y) * gaussian(y - node.x0)
    if isinstance(node, E.Chirp):
        return np.exp(0.5j * node.c * y * y)
    if isinstance(node, E.PlaneWave):
        return np.exp(1j * node.xi0 * y)
    if isinstance(node, E.DeltaApprox):
        e = node.eps
        return (2 * np.pi * e * e) ** -0.5 * np.exp(-0.5 * (y / e) ** 2) + 0j
    if isinstance(node, E.Hermite):
        return hermite_functions(y, node.k)[node.k] + 0j
    if isinstance(node, E.Sum):
        return sum(evaluate_signal(t, y) for t in node.terms)
    if isinstance(node, E.Prod):
        out = np.ones(y.shape, dtype=complex)
        for f in node.factors:
            out = out * evaluate_signal(f, y)
        return out
    if isinstance(node, E.Pow):
        return evaluate_signal(node.base, y) ** node.n
    if isinstance(node, (E.Delta, E.File)):
        raise ValueError(f"{E.to_text(node)} has no pointwise value; sample it on a grid")
    raise TypeError(f"{type(node).__name__} is not a signal node")


def _sample(node, grid):
    if isinstance(node, E.Delta):
        v = np.zeros(grid.N, dtype=complex)
        v[grid.N // 2] = 1.0 / grid.hx
        return v
    if isinstance(node, E.File):
        return read_signal_csv(node.path, grid.N)
    if isinstance(node, E.Sum):
        return sum(_sample(t, grid) for t in node.terms)
    if isinstance(node, E.Prod):
        out = np.ones(grid.N, dtype=complex)
        for f in node.factors:
            out = out * _sample(f, grid)
        return out
    if isinstance(node, E.Pow):
        return _sample(node.base, grid) ** node.n
    return evaluate_signal(node, grid.x)


def _decays(node):
    # plane waves and chirps are admitted without boundary decay
    return not any(isinstance(n, (E.PlaneWave, E.Chirp, E.File)) for n in E.walk(node))


def sample_signal(node, grid, warn=True):
    """Sample a signal tree at the grid nodes.

    The discrete delta is 1/hx at x = 0, which makes its discrete STFT equal to
    the exact one on the lattice.
    """
    s = SampledSignal(grid, _sample(node, grid), E.to_text(node))
    if warn and _decays(node) and s.boundary_max > BOUNDARY_RTOL * s.interior_max:
        msg = (f"{s.provenance}: boundary max {s.boundary_max:.3e} exceeds "
               f"{BOUNDARY_RTOL:g} x interior max {s.interior_max:.3e}")
        warnings.warn(msg, BoundaryDecayWarning, stacklevel=2)
    return s


def read_signal_csv(path, n):
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            rows.append(complex(float(row[0]), float(row[1])))
    if len(rows) != n:
        raise ValueError(f"{path}: expected {n} rows, found {len(rows)}")
    return np.array(rows, dtype=complex)


def write_signal_csv(path, signal):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for v in signal.values:
            w.writerow([repr(float(v.real)), repr(float(v.imag))])
