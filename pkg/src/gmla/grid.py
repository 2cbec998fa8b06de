"""Discretization of the phase plane and containers for sampled data."""

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class PhaseGrid:
    """Spatial axis x_j = -L + j*hx (j < N) and its DFT-dual frequency axis.

    The frequency axis is ascending, spans [-pi/hx, pi/hx) and has N*oversample
    points with spacing 2*pi/(N*oversample*hx).
    """

    L: float = 16.0
    N: int = 256
    oversample: int = 1
    d: int = 1

    def __post_init__(self):
        if self.N < 16 or self.N & (self.N - 1):
            raise GridError(f"N must be a power of two >= 16, got {self.N}")
        if not self.L > 0:
            raise GridError("L must be positive")
        if int(self.oversample) != self.oversample or self.oversample < 1:
            raise GridError("oversample must be an integer >= 1")
        if self.d != 1:
            raise GridError("numerical routines support d = 1 only")

    @property
    def hx(self):
        return 2.0 * self.L / self.N

    @property
    def x(self):
        return -self.L + self.hx * np.arange(self.N)

    @property
    def n_freq(self):
        return self.N * self.oversample

    @property
    def dxi(self):
        return 2.0 * np.pi / (self.n_freq * self.hx)

    @property
    def xi(self):
        return self.dxi * (np.arange(self.n_freq) - self.n_freq // 2)

    @property
    def radial_reach(self):
        """Radius of the largest origin-centred disc inside the phase lattice."""
        return min(self.L, np.pi / self.hx)

    def with_oversample(self, oversample):
        return PhaseGrid(self.L, self.N, oversample, self.d)

    def refined(self):
        """Same L, doubled N."""
        return PhaseGrid(self.L, 2 * self.N, self.oversample, self.d)

    def describe(self):
        return {"d": self.d, "L": self.L, "N": self.N, "oversample": self.oversample,
                "hx": self.hx, "dxi": self.dxi}


def make_grid(d=1, L=16.0, N=256, oversample=1):
    return PhaseGrid(float(L), int(N), int(oversample), int(d))


def fourier_dual_grid(N=256):
    """Grid whose unitary DFT maps it onto itself (hx * dxi * N = 2*pi with hx = dxi)."""
    return make_grid(L=np.sqrt(np.pi * N / 2.0), N=N)


@dataclass(frozen=True, eq=False)
class SampledSignal:
    grid: PhaseGrid
    values: np.ndarray
    provenance: str = ""
    boundary_max: float = field(init=False)
    interior_max: float = field(init=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.N,):
            raise GridError(f"expected {self.grid.N} samples, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        edge = max(1, int(np.ceil(0.05 * self.grid.N)))
        mag = np.abs(v)
        object.__setattr__(self, "boundary_max", float(max(mag[:edge].max(), mag[-edge:].max())))
        object.__setattr__(self, "interior_max", float(mag[edge:-edge].max()) if self.grid.N > 2 * edge else 0.0)

    def norm(self):
        return float(np.sqrt(self.grid.hx) * np.linalg.norm(self.values))

    def inner(self, other):
        """(self, other), conjugate-linear in the second slot."""
        check_same_grid(self.grid, other.grid)
        return complex(self.grid.hx * np.vdot(other.values, self.values))

    def replace(self, values, provenance=None):
        return SampledSignal(self.grid, values, self.provenance if provenance is None else provenance)

    def __add__(self, other):
        check_same_grid(self.grid, other.grid)
        return self.replace(self.values + other.values, f"({self.provenance})+({other.provenance})")

    def __rmul__(self, c):
        return self.replace(c * self.values)

    def decay_ratio(self):
        return self.boundary_max / self.interior_max if self.interior_max > 0 else 0.0


@dataclass(frozen=True, eq=False)
class PhaseField:
    """Complex samples on the lattice (x_n, xi_k), array shape (N, N*oversample)."""

    grid: PhaseGrid
    values: np.ndarray
    window: str = ""
    provenance: str = ""

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != (self.grid.N, self.grid.n_freq):
            raise GridError(f"phase field shape {v.shape} does not match grid")
        if not np.all(np.isfinite(v)):
            raise GridError("phase field has non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def mesh(self):
        return np.meshgrid(self.grid.x, self.grid.xi, indexing="ij")

    def norm(self):
        """L2 norm with quadrature weight hx*dxi."""
        return float(np.sqrt(self.grid.hx * self.grid.dxi) * np.linalg.norm(self.values))

    def inner(self, other):
        check_same_grid(self.grid, other.grid)
        return complex(self.grid.hx * self.grid.dxi * np.vdot(other.values, self.values))


def check_same_grid(a, b):
    if a != b:
        raise GridError(f"grid mismatch: {a} vs {b}")
