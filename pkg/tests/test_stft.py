import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gmla import closedform as CF
from gmla.grid import GridError, PhaseField, SampledSignal, make_grid
from gmla.parser import parse_signal
from gmla.signals import BoundaryDecayWarning, read_signal_csv, sample_signal, write_signal_csv
from gmla.stft import make_window, moyal_residual, parse_window, phase_field_from_record, phase_field_record, stft

from conftest import rel_err


def test_grid_geometry(grid):
    assert grid.hx == 2 * grid.L / grid.N
    assert np.isclose(grid.x[0], -grid.L) and np.isclose(grid.x[-1], grid.L - grid.hx)
    assert np.isclose(grid.xi[0], -np.pi / grid.hx)
    assert np.all(np.diff(grid.xi) > 0)
    assert grid.radial_reach == min(grid.L, np.pi / grid.hx)


@pytest.mark.parametrize("kw", [dict(N=100), dict(N=8), dict(L=-1.0), dict(oversample=0), dict(d=2)])
def test_grid_rejects_bad_parameters(kw):
    with pytest.raises(GridError):
        make_grid(**kw)


def test_sampled_signal_shape_check(grid):
    with pytest.raises(GridError):
        SampledSignal(grid, np.zeros(grid.N + 1))


@given(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_sampling_is_linear(a, b):
    g = make_grid(L=8.0, N=64)
    u, v = parse_signal("gauss(1,2)"), parse_signal("hermite(3)")
    combo = sample_signal(parse_signal(f"{a.real}*gauss(1,2)+{a.imag}*i*gauss(1,2)+{b.real}*hermite(3)+{b.imag}*i*hermite(3)"), g, warn=False)
    direct = a * sample_signal(u, g, False).values + b * sample_signal(v, g, False).values
    assert np.allclose(combo.values, direct, rtol=1e-14, atol=1e-14)


def test_boundary_warning(grid):
    with pytest.warns(BoundaryDecayWarning):
        sample_signal(parse_signal("gauss(14,0)"), grid)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        sample_signal(parse_signal("planewave(5)"), grid)
        sample_signal(parse_signal("hermite(6)"), grid)


def test_signal_csv_round_trip(tmp_path, grid):
    u = sample_signal(parse_signal("gauss(1,3)"), grid)
    p = tmp_path / "u.csv"
    write_signal_csv(p, u)
    assert np.array_equal(read_signal_csv(p, grid.N), u.values)
    v = sample_signal(parse_signal(f'file("{p}")'), grid)
    assert np.array_equal(v.values, u.values)


def test_window_normalization(grid):
    for spec in ["gaussian", "hermite(1)", "hermite(4)"]:
        assert np.isclose(parse_window(spec, grid).norm(), 1.0, rtol=1e-14)
    with pytest.raises(ValueError):
        parse_window("hann", grid)


@pytest.mark.parametrize("text", ["gauss(0,0)", "gauss(1.5,-2)", "hermite(2)", "hermite(6)"])
@pytest.mark.parametrize("window", ["gaussian", "hermite(1)"])
def test_moyal(grid, text, window):
    u = sample_signal(parse_signal(text), grid)
    inv, energy = moyal_residual(u, parse_window(window, grid))
    assert inv < 1e-6 and energy < 1e-6


@pytest.mark.parametrize("k", [1, 5, 17])
def test_covariance_under_grid_shifts(grid, k):
    u = sample_signal(parse_signal("hermite(2)"), grid)
    psi = make_window("gaussian", grid)
    shifted = SampledSignal(grid, np.roll(u.values, k))
    A = np.abs(stft(u, psi).values)
    B = np.abs(stft(shifted, psi).values)
    inner = slice(40, grid.N - 40)
    assert np.max(np.abs(np.roll(A, k, axis=0)[inner] - B[inner])) < 1e-10


@pytest.mark.parametrize("text", ["gauss(0,0)", "gauss(2,-3)", "hermite(3)", "planewave(5)", "chirp(2)", "delta",
                                  "2*gauss(1,1)+hermite(1)"])
@pytest.mark.parametrize("window", ["gaussian", "hermite(1)", "hermite(2)"])
def test_closed_form_matches_grid(grid, text, window):
    node = parse_signal(text)
    F = stft(sample_signal(node, grid, warn=False), parse_window(window, grid))
    X, XI = F.mesh()
    sel = np.hypot(X, XI) <= 8
    exact = CF.closed_form_stft(node, (X[sel], XI[sel]), window)
    assert rel_err(F.values[sel], exact) < 1e-6


def test_closed_form_fourier_of_gaussian():
    terms = CF.terms_of(parse_signal("gauss(0,0)"))
    xi = np.linspace(-4, 4, 9)
    got = CF.evaluate_terms(CF.fourier(terms), xi)
    want = np.sqrt(2 * np.pi) * np.pi**-0.25 * np.exp(-xi**2 / 2)
    assert np.allclose(got, want, rtol=1e-12)


def test_closed_form_unsupported():
    assert CF.supports(parse_signal("deltaApprox(0.1)+chirp(1)^3"))
    assert not CF.supports(parse_signal('file("u.csv")'))
    assert not CF.supports(parse_signal("delta*delta"))
    with pytest.raises(CF.UnsupportedSignal):
        CF.terms_of(parse_signal("delta*delta"))
    with pytest.raises(CF.UnsupportedSignal):
        CF.window_from_text("hann")


def test_phase_field_record_round_trip(small_grid):
    u = sample_signal(parse_signal("gauss(0,1)"), small_grid)
    F = stft(u, make_window("gaussian", small_grid))
    G = phase_field_from_record(phase_field_record(F))
    assert isinstance(G, PhaseField)
    assert np.array_equal(G.values, F.values)


def test_phase_field_rejects_nan(small_grid):
    v = np.zeros((small_grid.N, small_grid.n_freq), dtype=complex)
    v[0, 0] = np.nan
    with pytest.raises(GridError):
        PhaseField(small_grid, v)
