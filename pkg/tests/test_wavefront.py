import numpy as np
import pytest

from gmla import closedform as CF
from gmla import wavefront as W
from gmla.cones import Cone, ConeError
from gmla.fitting import fit_loglog, log_radii
from gmla.grid import GridError, fourier_dual_grid, make_grid
from gmla.operators import antiwick_apply
from gmla.parser import parse_signal, parse_symbol
from gmla.signals import sample_signal
from gmla.stft import grid_dft, make_window, stft
from gmla.symbols import estimate_char_set

from conftest import CORPUS, SINGULAR

EXPECTED_DEG = {"planewave(5)": (0, 180), "delta": (90, 270), "chirp(2)": (63.43494882292201, 243.43494882292201)}
D = 360


def closed(text, **kw):
    return W.wavefront_closed_form(parse_signal(text), **kw)


def test_fit_loglog_exact_power():
    r = log_radii(1, 100, 10)
    f = fit_loglog(r, 3 * r**-2.5)
    assert np.isclose(f.decay, 2.5) and f.r2 > 0.999999 and f.good


def test_fit_loglog_flat_profile_is_good():
    r = log_radii(1, 100, 10)
    f = fit_loglog(r, np.full(10, 0.7))
    assert f.r2 == 1.0 and abs(f.slope) < 1e-12 and f.good


@pytest.mark.parametrize("text", SINGULAR)
def test_singular_directions(text):
    est = closed(text)
    got = est.gabor_indices()
    want = np.array(EXPECTED_DEG[text])
    # every estimated direction sits within half-width + 1 steps of an expected one
    d = W.circular_distance(got, np.round(want).astype(int), D).min(axis=1)
    assert got.size and np.all(d <= est.half_width + 1)
    for w in want:
        assert np.min(W.circular_distance([int(round(w))], got, D)) <= 1
    assert not np.any(est.gabor == "inconclusive")


@pytest.mark.parametrize("text", ["gauss(0,0)", "hermite(1)", "hermite(4)", "gauss(2,-1)"])
def test_schwartz_signals_have_empty_wavefront(text):
    est = closed(text)
    assert est.gabor_indices().size == 0
    assert np.all(est.sobolev == "inf")


def test_delta_sobolev_threshold():
    est = closed("delta")
    for deg in (90, 270):
        assert abs(est.s_star[deg] - (-0.5)) <= 0.1


def test_sobolev_membership():
    est = closed("delta")
    inside, _ = est.qs_membership(-1.0)
    assert not np.any(inside)
    inside, _ = est.qs_membership(0.0)
    assert inside[90] and inside[270] and not inside[0]


@pytest.mark.parametrize("text", CORPUS)
def test_union_equality(text):
    ok, union, gab = W.union_equality(closed(text))
    assert ok


@pytest.mark.parametrize("text", CORPUS)
def test_window_invariance(text):
    a, b = closed(text), closed(text, window="hermite(1)")
    assert W.sets_agree(a.gabor_indices(), b.gabor_indices(), D)
    assert W.sets_agree(a.singular_indices(), b.singular_indices(), D)


@pytest.mark.parametrize("text", SINGULAR)
def test_fourier_rotation_closed_form(text):
    a, f = closed(text), closed(text, fourier=True)
    assert W.sets_agree(f.gabor_indices(), W.rotate_indices(a.gabor_indices(), -D // 4, D), D)


@pytest.mark.parametrize("text", ["hermite(3)", "gauss(1,2)", "delta", "planewave(3)", "chirp(1)"])
def test_grid_dft_rotates_phase_space(text):
    g = fourier_dual_grid(256)
    psi = make_window("gaussian", g)
    u = sample_signal(parse_signal(text), g, warn=False)
    A = np.abs(stft(u, psi).values)
    B = np.abs(stft(grid_dft(u), psi).values)
    neg = (g.N - np.arange(g.N)) % g.N
    # |V(Fu)(x, xi)| = |Vu(-xi, x)|
    assert np.max(np.abs(B - A[neg, :].T)) <= 1e-10 * A.max()


def test_grid_dft_needs_self_dual_grid(grid):
    with pytest.raises(GridError):
        grid_dft(sample_signal(parse_signal("hermite(0)"), grid))


def test_grid_path_matches_closed_form_for_delta(grid):
    est = W.wavefront_grid(sample_signal(parse_signal("delta"), grid))
    ref = closed("delta")
    # the lattice path resolves only radii up to 0.7 L, so it finds a wider cone around the same axis
    got = np.degrees(est.thetas[est.gabor_indices()])
    assert got.size and set(ref.gabor_indices()) <= set(est.gabor_indices())
    assert np.all(np.minimum(np.abs(got - 90), np.abs(got - 270)) <= 30)


def test_lattice_window_and_errors(grid):
    assert W.lattice_fit_window(grid) == (4.0, 0.7 * grid.radial_reach)
    assert W.lattice_fit_window(grid, 0.2)[1] == 2.5
    F = stft(sample_signal(parse_signal("hermite(0)"), grid), make_window("gaussian", grid))
    with pytest.raises(ValueError):
        W.lattice_profile(F, fit_window=(4.0, 2.0))


def test_thread_count_does_not_change_results(monkeypatch):
    monkeypatch.setenv("GMLA_THREADS", "1")
    a = closed("chirp(2)").to_record()
    monkeypatch.setenv("GMLA_THREADS", "4")
    assert W.thread_count() == 4
    b = closed("chirp(2)").to_record()
    assert a == b


def test_polar_csv(tmp_path):
    est = closed("delta")
    p = tmp_path / "polar.csv"
    est.write_polar_csv(p)
    rows = p.read_text().splitlines()
    assert rows[0].startswith("#") and len(rows) == D + 1
    finite = [float(r.split(",")[0]) for r in rows[1:] if np.isfinite(float(r.split(",")[1]))]
    assert all(min(abs(t - 90), abs(t - 270)) <= 3 for t in finite)


# --- operators acting on wave fronts --------------------------------------------------------

BR2 = parse_symbol("bracket(2)")


@pytest.mark.parametrize("text", CORPUS)
@pytest.mark.parametrize("q", ["weyl", "antiwick"])
def test_microlocality_and_ellipticity(text, q):
    eu = closed(text)
    ea = W.wavefront_closed_form(parse_signal(text), symbol=BR2, quantization=q)
    assert W.inclusion_check(eu, ea, 2, "microlocal", pipeline=q).passed
    char = estimate_char_set(BR2, 2)
    assert W.inclusion_check(eu, ea, 2, "equality", char=char, m_prime=2, pipeline=q).passed


def test_microelliptic_excludes_characteristic_directions():
    a = parse_symbol("x^2")
    eu = closed("delta")
    ea = W.wavefront_closed_form(parse_signal("delta"), symbol=a)
    char = estimate_char_set(a, 2)
    rep = W.inclusion_check(eu, ea, 2, "microelliptic", char=char, m_prime=2)
    assert rep.passed
    assert {87.0, 90.0, 93.0} <= {round(d) for d in rep.excluded}
    assert rep.notes


def test_operator_terms_needs_polynomial():
    with pytest.raises(CF.UnsupportedSignal):
        W.operator_terms(CF.terms_of(parse_signal("delta")), parse_symbol("bracket(1)"))


# --- cone filter -------------------------------------------------------------------------


def test_cone_filter_geometry_checks():
    with pytest.raises(ConeError):
        W.build_cone_filter(Cone.from_degrees(-30, 30), Cone.from_degrees(100, 200), 2)


def test_filter_symbol_not_characteristic():
    filt = W.build_cone_filter(Cone.from_degrees(-110, 110), Cone.from_degrees(30, 330), 2)
    assert estimate_char_set(filt.total, -2).is_empty()


@pytest.mark.parametrize("m", [0.0, 2.0])
def test_filter_demo(m):
    g = make_grid(L=16.0, N=256)
    filt = W.build_cone_filter(Cone.from_degrees(-110, 110), Cone.from_degrees(30, 330), m)
    node = parse_signal("planewave(0)")
    u = sample_signal(node, g)
    eu = W.wavefront_grid(u)
    ea = W.wavefront_grid(antiwick_apply(filt.total, u))
    rep = W.filter_order_report(eu, ea, filt, reference=closed("planewave(0)"))
    assert rep.passed
