"""Discrete short-time Fourier transform on a PhaseGrid.

Convention: V_psi u(x, xi) = int u(y) conj(psi(y - x)) exp(-i y xi) dy, i.e. the
pairing (u, M_xi T_x psi).  Integrals are Riemann sums with weight hx; the
window is shifted circularly by whole grid steps.
"""

import csv
import json

import numpy as np

from gmla.grid import GridError, PhaseField, SampledSignal, check_same_grid
from gmla.signals import hermite_functions


def make_window(kind, grid, k=0):
    """Discretely L2-normalized window samples: "gaussian" or "hermite" (order k)."""
    if kind == "gaussian":
        k = 0
    elif kind != "hermite":
        raise ValueError(f"unknown window kind {kind!r}")
    if k < 0:
        raise ValueError("hermite window order must be >= 0")
    v = hermite_functions(grid.x, k)[k]
    v = v / (np.sqrt(grid.hx) * np.linalg.norm(v))
    name = "gaussian" if k == 0 else f"hermite({k})"
    return SampledSignal(grid, v.astype(complex), name)


def parse_window(spec, grid):
    """Window from text such as "gaussian" or "hermite(1)"."""
    spec = spec.strip()
    if spec == "gaussian":
        return make_window("gaussian", grid)
    if spec.startswith("hermite(") and spec.endswith(")"):
        return make_window("hermite", grid, int(spec[8:-1]))
    raise ValueError(f"unknown window {spec!r}")


def _shift_index(grid):
    n = np.arange(grid.N)
    # psi(y_j - x_n) sits at window index j - n + N/2
    return (n[None, :] - n[:, None] + grid.N // 2) % grid.N


def stft(u, psi, grid=None):
    """Phase field V_psi u on the lattice (x_n, xi_k)."""
    grid = u.grid if grid is None else grid
    check_same_grid(u.grid, grid)
    check_same_grid(psi.grid, grid)
    idx = _shift_index(grid)
    sign = (-1.0) ** np.arange(grid.N)
    f = u.values[None, :] * np.conj(psi.values)[idx] * sign[None, :]
    spec = np.fft.fft(f, n=grid.n_freq, axis=1)
    phase = np.exp(1j * grid.L * grid.xi)
    v = grid.hx * spec * phase[None, :]
    return PhaseField(grid, v, psi.provenance, u.provenance)


def stft_adjoint(F, psi, grid=None):
    """V_psi^* F = int F(z) Pi(z) psi dz as a Riemann sum with weight hx*dxi."""
    grid = F.grid if grid is None else grid
    check_same_grid(F.grid, grid)
    check_same_grid(psi.grid, grid)
    phase = np.exp(-1j * grid.L * grid.xi)
    g = np.fft.ifft(F.values * phase[None, :], axis=1)[:, : grid.N] * grid.n_freq
    sign = (-1.0) ** np.arange(grid.N)
    idx = _shift_index(grid)
    out = grid.hx * grid.dxi * sign * np.sum(psi.values[idx] * g, axis=0)
    return SampledSignal(grid, out, f"V*[{F.provenance}]")


def grid_dft(u):
    """Unitary Fourier transform of u sampled at the frequency nodes.

    On a self-dual grid (hx = dxi, see fourier_dual_grid) the nodes coincide
    with the spatial nodes, so the result is again a signal on the same grid.
    """
    g = u.grid
    if g.oversample != 1 or not np.isclose(g.hx, g.dxi, rtol=1e-12):
        raise GridError("grid_dft needs a self-dual grid with oversample 1")
    sign = (-1.0) ** np.arange(g.N)
    vals = g.hx / np.sqrt(2 * np.pi) * np.exp(1j * g.L * g.xi) * np.fft.fft(u.values * sign)
    return SampledSignal(g, vals, f"F[{u.provenance}]")


def moyal_residual(u, psi, grid=None):
    """Return (inversion residual, energy residual), both relative to |u|."""
    grid = u.grid if grid is None else grid
    nu = u.norm()
    if nu == 0:
        raise ValueError("Moyal residual undefined for the zero signal")
    V = stft(u, psi, grid)
    back = stft_adjoint(V, psi, grid).values / (2 * np.pi)
    inv = np.sqrt(grid.hx) * np.linalg.norm(back - u.values) / nu
    energy = abs(V.norm() ** 2 / (2 * np.pi) - nu**2) / nu**2
    return float(inv), float(energy)


def phase_field_csv(F, path):
    """Write rows x, xi, re, im."""
    X, XI = F.mesh()
    with open(path, "w", newline="") as fh:
        fh.write("# x,xi,re,im\n")
        w = csv.writer(fh)
        for x, xi, v in zip(X.ravel(), XI.ravel(), F.values.ravel()):
            w.writerow([format(x, ".17g"), format(xi, ".17g"), format(v.real, ".17g"), format(v.imag, ".17g")])


def phase_field_record(F):
    """JSON-ready dict; the array is stored as nested [re, im] decimal pairs."""
    return {
        "grid": F.grid.describe(),
        "window": F.window,
        "provenance": F.provenance,
        "x": F.grid.x.tolist(),
        "xi": F.grid.xi.tolist(),
        "values": [[[float(v.real), float(v.imag)] for v in row] for row in F.values],
    }


def phase_field_from_record(rec):
    from gmla.grid import make_grid

    g = rec["grid"]
    grid = make_grid(g["d"], g["L"], g["N"], g["oversample"])
    vals = np.array([[complex(re, im) for re, im in row] for row in rec["values"]])
    return PhaseField(grid, vals, rec.get("window", ""), rec.get("provenance", ""))


def dump_phase_field_json(F, path):
    with open(path, "w") as fh:
        json.dump(phase_field_record(F), fh)


__all__ = [
    "GridError",
    "make_window",
    "parse_window",
    "stft",
    "stft_adjoint",
    "moyal_residual",
    "phase_field_csv",
    "phase_field_record",
    "phase_field_from_record",
]
