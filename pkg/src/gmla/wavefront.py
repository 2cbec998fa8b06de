"""Cone-resolved estimates of Gabor and Sobolev-Gabor wave front sets (d = 1).

Both estimators work on radial profiles of |V u| over cones of half-width
``half_width`` angular steps around D uniformly spaced directions:

* the sup over the arc, whose log-log decay rate gamma_G decides Gabor
  membership (fast decay beyond ``cap`` means the direction is out), and
* the arc mean of |V u|^2.  If it decays like r^-g2 then the cone integral
  of <z>^2s |V u|^2 converges iff 2s + 1 - g2 < -1, so s* = (g2 - 2)/2.

Profiles come either from closed-form STFTs evaluated on a fine polar lattice
at large radii or from a sampled phase field binned by angle and radius.
"""

import csv
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from gmla import closedform as CF
from gmla.cones import ConeError
from gmla.fitting import fit_loglog, log_radii

log = logging.getLogger(__name__)

D_DEFAULT = 360
HALF_WIDTH = 3
CAP = 8.0
S_CAP = 8.0
FLOOR_REL = 1e-12
MARGIN = 0.1
TOL = 0.3
CLOSED_FORM_WINDOW = (300.0, 3000.0)
CLOSED_FORM_RADII = 25
ARC_SPACING = 0.25
LATTICE_BINS = 12


def thread_count():
    try:
        n = int(os.environ.get("GMLA_THREADS", "1"))
    except ValueError:
        n = 1
    return max(1, n)


@dataclass(frozen=True, eq=False)
class ShellProfile:
    """sup |V| and arc-mean |V|^2 per (direction, radius)."""

    thetas: np.ndarray
    radii: np.ndarray
    sup: np.ndarray
    mean_sq: np.ndarray
    half_width: int
    source: str
    window: str


def direction_angles(D=D_DEFAULT):
    return 2 * np.pi * np.arange(D) / D


def _ring_profile(values_fn, r, D, h, ds):
    step = 2 * np.pi / D
    M = max(1, int(np.ceil(step * r / ds)))
    th = step * np.arange(D * M) / M
    v = np.abs(values_fn(r * np.cos(th), r * np.sin(th)))
    blocks = v.reshape(D, M)
    bmax = blocks.max(axis=1)
    bsq = (blocks**2).sum(axis=1)
    starts = v[::M] ** 2  # sample at the start of each block
    sup = np.full(D, -np.inf)
    total = np.zeros(D)
    for k in range(-h, h):
        sup = np.maximum(sup, np.roll(bmax, -k))
        total = total + np.roll(bsq, -k)
    # arc runs over blocks d-h .. d+h-1 plus the endpoint sample at block d+h
    end_sq = np.roll(starts, -h)
    first_sq = np.roll(starts, h)
    sup = np.maximum(sup, np.sqrt(end_sq))
    trap = total + end_sq - 0.5 * (first_sq + end_sq)
    return sup, trap / (2 * h * M)


def closed_form_profile(terms, window="gaussian", D=D_DEFAULT, half_width=HALF_WIDTH,
                        fit_window=CLOSED_FORM_WINDOW, n_r=CLOSED_FORM_RADII, ds=ARC_SPACING, label=""):
    """Profiles from the exact STFT of a term list, sampled every ``ds`` along each circle."""
    w = CF.window_from_text(window) if isinstance(window, str) else window
    radii = log_radii(fit_window[0], fit_window[1], n_r)

    def fn(x, xi):
        return CF.stft_terms(terms, w, x, xi)

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        rows = list(pool.map(lambda r: _ring_profile(fn, r, D, half_width, ds), radii))
    sup = np.array([r[0] for r in rows]).T
    mean_sq = np.array([r[1] for r in rows]).T
    wname = window if isinstance(window, str) else "custom"
    return ShellProfile(direction_angles(D), radii, sup, mean_sq, half_width, f"closed-form {label}".strip(), wname)


def lattice_fit_window(grid, eps=None):
    hi = 0.7 * grid.radial_reach
    if eps is not None:
        hi = min(hi, 0.5 / eps)
    return (4.0, hi)


def lattice_profile(F, D=D_DEFAULT, half_width=HALF_WIDTH, fit_window=None, n_bins=LATTICE_BINS, label=""):
    """Bin a sampled phase field by direction cone and log radius."""
    if fit_window is None:
        fit_window = lattice_fit_window(F.grid)
    lo, hi = fit_window
    if not hi > lo:
        raise ValueError(f"empty fit window [{lo}, {hi}]")
    X, XI = F.mesh()
    r = np.hypot(X, XI).ravel()
    keep = (r >= lo) & (r <= hi)
    r = r[keep]
    v = np.abs(F.values).ravel()[keep]
    u = np.mod(np.arctan2(XI.ravel()[keep], X.ravel()[keep]), 2 * np.pi) / (2 * np.pi / D)
    edges = np.exp(np.linspace(np.log(lo), np.log(hi), n_bins + 1))
    b = np.clip(np.searchsorted(edges, r, side="right") - 1, 0, n_bins - 1)
    sup = np.zeros((D, n_bins))
    sq = np.zeros((D, n_bins))
    cnt = np.zeros((D, n_bins))
    base = np.rint(u).astype(int)
    for k in range(-half_width - 1, half_width + 2):
        d = base + k
        inside = np.abs(u - d) <= half_width + 1e-9
        dd = np.mod(d[inside], D)
        np.maximum.at(sup, (dd, b[inside]), v[inside])
        np.add.at(sq, (dd, b[inside]), v[inside] ** 2)
        np.add.at(cnt, (dd, b[inside]), 1)
    if np.any(cnt == 0):
        raise ValueError("fit window has empty (direction, radius) bins; refine the grid or narrow the window")
    radii = np.sqrt(edges[:-1] * edges[1:])
    return ShellProfile(direction_angles(D), radii, sup, sq / cnt, half_width, f"lattice {label}".strip(), F.window)


# --- estimation -------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WavefrontEstimate:
    thetas: np.ndarray
    gamma_g: np.ndarray
    r2_g: np.ndarray
    gabor: np.ndarray  # "in" | "out" | "inconclusive"
    gamma2: np.ndarray
    s_star: np.ndarray
    r2_s: np.ndarray
    sobolev: np.ndarray  # "finite" | "inf" | "inconclusive"
    fit_window: tuple
    half_width: int
    source: str
    window: str
    cap: float = CAP
    s_cap: float = S_CAP
    margin: float = MARGIN
    notes: list = field(default_factory=list)

    @property
    def D(self):
        return len(self.thetas)

    def gabor_indices(self):
        return np.flatnonzero(self.gabor == "in")

    def gabor_degrees(self):
        return np.degrees(self.thetas[self.gabor == "in"])

    def singular_indices(self):
        """Directions with a finite Sobolev threshold."""
        return np.flatnonzero(self.sobolev == "finite")

    def conclusive(self):
        return (self.gabor != "inconclusive") & (self.sobolev != "inconclusive")

    def qs_membership(self, s):
        """(in WF_{Q^s}, boundary flag) per direction: in iff s >= s* - margin."""
        finite = self.sobolev == "finite"
        member = finite & (s >= self.s_star - self.margin)
        boundary = finite & (np.abs(s - self.s_star) <= self.margin)
        return member, boundary

    def to_record(self):
        return {
            "source": self.source,
            "window": self.window,
            "D": self.D,
            "half_width_steps": self.half_width,
            "fit_window": list(self.fit_window),
            "cap": self.cap,
            "s_cap": self.s_cap,
            "margin": self.margin,
            "notes": list(self.notes),
            "directions": [
                {"theta_deg": float(np.degrees(t)), "gamma_g": float(g), "r2_g": float(q), "gabor": str(v),
                 "gamma2": float(g2), "s_star": float(s), "r2_s": float(q2), "sobolev": str(f)}
                for t, g, q, v, g2, s, q2, f in zip(self.thetas, self.gamma_g, self.r2_g, self.gabor, self.gamma2,
                                                    self.s_star, self.r2_s, self.sobolev)
            ],
        }

    def write_polar_csv(self, path):
        """Rows theta_deg, s_star, gamma_g, flag."""
        with open(path, "w", newline="") as fh:
            fh.write("# theta_deg,s_star,gamma_g,flag\n")
            w = csv.writer(fh)
            for t, s, g, v in zip(self.thetas, self.s_star, self.gamma_g, self.gabor):
                w.writerow([format(float(np.degrees(t)), ".17g"), _num(s), _num(g), str(v)])


def _num(v):
    v = float(v)
    if np.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    return format(v, ".17g")


def _fit_rows(radii, g, floor, cap):
    n = g.shape[0]
    decay = np.zeros(n)
    r2 = np.ones(n)
    verdict = np.empty(n, dtype=object)
    for i in range(n):
        if not g[i, -1] > floor:
            decay[i], verdict[i] = np.inf, "out"
            continue
        fit = fit_loglog(radii, np.maximum(g[i], 1e-300))
        decay[i], r2[i] = fit.decay, fit.r2
        if fit.decay > cap and fit.good:
            verdict[i] = "out"
        elif not fit.good:
            verdict[i] = "inconclusive"
        else:
            verdict[i] = "in"
    return decay, r2, verdict.astype(str)


def estimate_wavefront(profile, cap=CAP, s_cap=S_CAP, floor_rel=FLOOR_REL, margin=MARGIN):
    """Gabor verdicts and Sobolev thresholds from a shell profile."""
    top = float(profile.sup.max())
    floor = floor_rel * top
    notes = []
    if top == 0:
        notes.append("zero phase field")
    gamma_g, r2_g, gabor = _fit_rows(profile.radii, profile.sup, floor, cap)
    # s* > s_cap  <=>  g2 > 2 s_cap + 2
    g2, r2_s, v2 = _fit_rows(profile.radii, profile.mean_sq, floor * floor, 2 * s_cap + 2)
    s_star = np.where(np.isfinite(g2), 0.5 * (g2 - 2.0), np.inf)
    sob = np.where(v2 == "out", "inf", np.where(v2 == "in", "finite", "inconclusive"))
    s_star = np.where(sob == "inf", np.inf, s_star)
    return WavefrontEstimate(profile.thetas, gamma_g, r2_g, gabor, g2, s_star, r2_s, sob,
                             (float(profile.radii[0]), float(profile.radii[-1])), profile.half_width,
                             profile.source, profile.window, cap, s_cap, margin, notes)


# --- pipelines ----------------------------------------------------------------------------


def operator_terms(terms, symbol, quantization="weyl"):
    """Exact action of a polynomial symbol's Weyl or anti-Wick operator on a term list.

    Anti-Wick operators go through the Weyl-Wick connection, which is exact
    (a finite sum) for polynomial symbols.
    """
    from gmla import expr as E
    from gmla.symbols import wick_expansion

    node = getattr(symbol, "expr", symbol)
    if quantization == "antiwick":
        node = wick_expansion(node)
        if node is None:
            raise CF.UnsupportedSignal("anti-Wick closed form needs a polynomial symbol")
    elif quantization != "weyl":
        raise ValueError(f"unknown quantization {quantization!r}")
    coeffs = E.as_polynomial(node)
    if coeffs is None:
        raise CF.UnsupportedSignal("closed-form operator action needs a polynomial symbol")
    return CF.apply_weyl_polynomial(coeffs, terms)


def wavefront_closed_form(signal, window="gaussian", symbol=None, quantization="weyl", fourier=False,
                          D=D_DEFAULT, half_width=HALF_WIDTH, fit_window=CLOSED_FORM_WINDOW, **kw):
    """Estimate from the exact STFT of a signal tree (optionally after an operator or the Fourier transform)."""
    from gmla import expr as E

    terms = CF.terms_of(signal)
    label = E.to_text(signal)
    if symbol is not None:
        terms = operator_terms(terms, symbol, quantization)
        label = f"{quantization}[{E.to_text(getattr(symbol, 'expr', symbol))}]({label})"
    if fourier:
        terms = CF.fourier(terms)
        label = f"F({label})"
    prof = closed_form_profile(terms, window, D, half_width, fit_window, label=label)
    return estimate_wavefront(prof, **kw)


def wavefront_grid(u, window="gaussian", D=D_DEFAULT, half_width=HALF_WIDTH, fit_window=None, **kw):
    """Estimate from the sampled STFT of a SampledSignal on its grid."""
    from gmla.stft import parse_window, stft

    psi = parse_window(window, u.grid) if isinstance(window, str) else window
    F = stft(u, psi, u.grid)
    prof = lattice_profile(F, D, half_width, fit_window, label=u.provenance)
    return estimate_wavefront(prof, **kw)


def gabor_wf(u, window="gaussian", **kw):
    """Gabor wave front estimate; signal trees with closed forms use the exact path."""
    if hasattr(u, "values"):
        return wavefront_grid(u, window, **kw)
    return wavefront_closed_form(u, window, **kw)


def sobolev_thresholds(u, window="gaussian", **kw):
    return gabor_wf(u, window, **kw)


def sobolev_wf(u, s, window="gaussian", **kw):
    """(membership, boundary flags, estimate) for WF_{Q^s}."""
    est = gabor_wf(u, window, **kw)
    member, boundary = est.qs_membership(s)
    return member, boundary, est


# --- direction-set comparisons ---------------------------------------------------------------


def circular_distance(i, j, D):
    d = np.abs(np.asarray(i)[:, None] - np.asarray(j)[None, :]) % D
    return np.minimum(d, D - d)


def sets_agree(a, b, D, tol_steps=1):
    """Every index of a is within tol_steps of some index of b, and vice versa."""
    a, b = np.asarray(a, dtype=int), np.asarray(b, dtype=int)
    if a.size == 0 or b.size == 0:
        return a.size == b.size
    dist = circular_distance(a, b, D)
    return bool(np.all(dist.min(axis=1) <= tol_steps) and np.all(dist.min(axis=0) <= tol_steps))


def rotate_indices(idx, steps, D):
    return np.sort(np.mod(np.asarray(idx, dtype=int) + steps, D))


def union_equality(est, tol_steps=1):
    """Closure of the union over s of WF_{Q^s} (finite thresholds) against WF_G (Gabor IN)."""
    skip = ~est.conclusive()
    union = np.flatnonzero((est.sobolev == "finite") & ~skip)
    gabor = np.flatnonzero((est.gabor == "in") & ~skip)
    return sets_agree(union, gabor, est.D, tol_steps), union, gabor


# --- inclusion checks ------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class InclusionReport:
    mode: str
    pipeline: str
    tol: float
    entries: list
    violations: list
    excluded: list
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.violations

    def to_record(self):
        return {"mode": self.mode, "pipeline": self.pipeline, "tol": self.tol, "passed": self.passed,
                "entries": self.entries, "violations": self.violations, "excluded": self.excluded,
                "notes": list(self.notes)}


def _diff(a, b):
    """a - b with inf - inf = 0."""
    if np.isinf(a) and np.isinf(b) and np.sign(a) == np.sign(b):
        return 0.0
    return a - b


def inclusion_check(est_u, est_au, m, mode="microlocal", tol=TOL, char=None, m_prime=None, pipeline="weyl"):
    """Compare Sobolev thresholds of u and Au direction by direction.

    microlocal:   s*_Au >= s*_u - m - tol everywhere;
    microelliptic: s*_u >= s*_Au + m' - tol off char_{m'}(a);
    equality:     |s*_Au - (s*_u - m)| <= tol at the singular directions of u.

    Inconclusive and (in microelliptic mode) characteristic directions are
    listed as excluded.
    """
    if est_u.D != est_au.D:
        raise ValueError("estimates use different direction sets")
    if mode == "microelliptic" and m_prime is None:
        raise ValueError("microelliptic mode needs m_prime")
    ok_dir = est_u.conclusive() & est_au.conclusive()
    in_char = np.zeros(est_u.D, dtype=bool) if char is None else ~np.asarray(char.flags, dtype=bool)
    entries, violations, excluded, notes = [], [], [], []
    for i in range(est_u.D):
        deg = float(np.degrees(est_u.thetas[i]))
        if not ok_dir[i]:
            excluded.append(deg)
            continue
        su, sa = float(est_u.s_star[i]), float(est_au.s_star[i])
        if mode == "microlocal":
            margin = _diff(sa, su - m) + tol
        elif mode == "microelliptic":
            if in_char[i]:
                excluded.append(deg)
                continue
            margin = _diff(su, sa + m_prime) + tol
        elif mode == "equality":
            if est_u.sobolev[i] != "finite":
                continue
            margin = tol - abs(_diff(sa, su - m))
        else:
            raise ValueError(f"unknown mode {mode!r}")
        rec = {"theta_deg": deg, "s_u": su, "s_au": sa, "margin": margin}
        entries.append(rec)
        if margin < 0:
            violations.append(rec)
    if mode == "microelliptic" and np.any(in_char):
        notes.append(f"{int(np.sum(in_char))} characteristic directions excluded")
    return InclusionReport(mode, pipeline, tol, entries, violations, excluded, notes)


# --- cone filter -------------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ConeFilter:
    chi1: object
    chi2: object
    total: object
    gamma1: object
    gamma2: object
    m: float


def _cover_checks(g1, g2):
    th = 2 * np.pi * (np.arange(7200) + 0.5) / 7200
    in1, in2 = g1.contains_angle(th), g2.contains_angle(th)
    if not np.all(in1 | in2):
        raise ConeError("the two cones must cover every direction")
    only1 = in1 & ~g2.contains_angle(th, margin=-1e-9)
    only2 = in2 & ~g1.contains_angle(th, margin=-1e-9)
    if not only1.any() or not only2.any():
        raise ConeError("both cone differences need nonempty interior")
    # smallest overlap arc
    ov = in1 & in2
    runs = np.diff(np.concatenate([[0], ov.astype(int), [0]]))
    starts, ends = np.flatnonzero(runs == 1), np.flatnonzero(runs == -1)
    lengths = ends - starts
    if ov[0] and ov[-1] and len(lengths) > 1:
        lengths = np.concatenate([[lengths[0] + lengths[-1]], lengths[1:-1]])
    return float(lengths.min()) * 2 * np.pi / 7200


def build_cone_filter(g1, g2, m, w_angle=None, R=1.0, w_radial=1.0, amplitude=10.0):
    """chi1 + chi2 with chi1 in G^0 (1 on g1 minus g2, 0 off g1) and chi2 in G^-m.

    Both angular transitions fill the overlaps of the cones; chi2 carries the
    weight amplitude * <z>^-m over g2.
    """
    from gmla import expr as E
    from gmla.cones import angular_plateau, radial_ramp

    overlap = _cover_checks(g1, g2)
    if w_angle is None:
        w_angle = overlap
    if not 0 < w_angle <= overlap + 1e-12:
        raise ConeError("angular transition must fit inside the cone overlaps")
    ramp = radial_ramp(R, w_radial)
    chi1 = E.mul(angular_plateau(g1.mid, g1.half, w_angle), ramp)
    chi2 = E.mul(E.Const(float(amplitude)), E.Bracket(-float(m)), angular_plateau(g2.mid, g2.half, w_angle), ramp)
    return ConeFilter(chi1, chi2, E.add(chi1, chi2), g1, g2, float(m))


def _region_indices(est, inside, outside, pad):
    th = est.thetas
    return np.flatnonzero(inside.contains_angle(th, margin=pad) & ~outside.contains_angle(th, margin=-pad))


def filter_order_report(est_u, est_au, filt, tol=TOL, pipeline="antiwick", reference=None):
    """Thresholds kept on g1 minus closure(g2); raised by m on g2 minus g1.

    The singular directions of u are read from ``reference`` when given (an
    estimate on the same direction set, typically from the exact STFT), since
    lattice estimates blur isolated directions near the origin.
    """
    ref = est_u if reference is None else reference
    if ref.D != est_u.D:
        raise ValueError("reference estimate uses a different direction set")
    pad = est_u.half_width * 2 * np.pi / est_u.D
    entries, violations, excluded, notes = [], [], [], []
    regions = (("preserve", filt.gamma1, filt.gamma2, 0.0), ("raise", filt.gamma2, filt.gamma1, filt.m))
    for name, inside, outside, shift in regions:
        idx = _region_indices(est_u, inside, outside, pad)
        sing = [i for i in idx if ref.sobolev[i] == "finite"]
        if not sing:
            notes.append(f"region {name}: no singular directions")
            continue
        for i in sing:
            deg = float(np.degrees(est_u.thetas[i]))
            if not (est_u.conclusive()[i] and est_au.conclusive()[i]):
                excluded.append(deg)
                continue
            delta = _diff(float(est_au.s_star[i]), float(est_u.s_star[i]))
            rec = {"theta_deg": deg, "region": name, "delta": delta, "expected": shift,
                   "margin": tol - abs(delta - shift)}
            entries.append(rec)
            if rec["margin"] < 0:
                violations.append(rec)
    return InclusionReport("filter", pipeline, tol, entries, violations, excluded, notes)
