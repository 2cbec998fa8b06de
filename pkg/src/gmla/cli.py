"""Command-line front end.

Exit codes: 0 success, 1 a check failed (or a numeric failure was recorded in
the envelope), 2 usage or configuration error.
"""

import argparse
import logging
import sys
import time
import warnings
from dataclasses import asdict, dataclass, fields

import numpy as np

from gmla import closedform as CF
from gmla import expr as E
from gmla.cones import Cone, ConeError
from gmla.grid import GridError, make_grid
from gmla.parser import ExprError, parse_signal, parse_symbol
from gmla.report import ReportEnvelope, atomic_write, emit_plot_data

log = logging.getLogger("gmla")

GRAMMAR_HELP = """expression grammar:
  expr := term ('+' term)* ; term := factor ('*' factor)* ; factor := unary ('^' int)?
  signals: gauss(x0,xi0) chirp(c) planewave(xi0) deltaApprox(eps) delta hermite(k) file("path")
  symbols: x xi bracket(m) gaussz norm(p) rstep(k,anchor,width,sign) astep(k,mid,anchor,width,sign)
           coneCutoff(lo,hi,R,w_angle,w_radial)   (angles in radians)
  constants: real literals and i"""


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    L: float = 16.0
    N: int = 256
    oversample: int = 1
    window: str = "gaussian"
    signal: str = ""
    symbol: str = ""
    chi: str = ""
    order: float = float("nan")
    m_prime: float = float("nan")
    s: str = "0"
    method: str = "stft-weighted"
    mode: str = "gabor"
    path: str = "auto"
    quantization: str = "weyl"
    D: int = 360
    half_width: int = 3
    tol: float = 0.3
    n_terms: int = 1
    annulus: str = ""
    cone1: str = "-110,110"
    cone2: str = "30,330"
    m: float = 2.0
    out: str = ""
    plot: str = ""

    def grid(self):
        return make_grid(1, self.L, self.N, self.oversample)

    def s_values(self):
        return [float(v) for v in str(self.s).split(",") if v.strip()]

    def annulus_pair(self, default):
        if not self.annulus:
            return default
        lo, hi = (float(v) for v in self.annulus.split(","))
        if not 0 < lo < hi:
            raise UsageError(f"annulus must satisfy 0 < lo < hi, got {self.annulus}")
        return (lo, hi)

    def echo(self):
        rec = asdict(self)
        for k in ("out", "plot"):
            rec.pop(k)
        return {k: (None if isinstance(v, float) and np.isnan(v) else v) for k, v in rec.items()}


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def read_config_file(path):
    """Flat ``key = value`` lines; '#' starts a comment."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, val = (t.strip() for t in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES:
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        out[key] = val
    return out


def build_config(ns):
    """Flags override the config file, which overrides defaults."""
    values = {}
    if getattr(ns, "config", None):
        values.update(read_config_file(ns.config))
    for name in _FIELD_TYPES:
        v = getattr(ns, name, None)
        if v is not None:
            values[name] = v
    cfg = RunConfig()
    for k, v in values.items():
        try:
            setattr(cfg, k, _FIELD_TYPES[k](v))
        except ValueError:
            raise UsageError(f"bad value for {k}: {v!r}") from None
    if cfg.half_width < 1 or cfg.D < 8:
        raise UsageError("need D >= 8 and half_width >= 1")
    cfg.grid()  # validates
    return cfg


def cone_from_text(text):
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"cone must be 'lo,hi' in degrees, got {text!r}") from None
    return Cone.from_degrees(lo, hi)


def need(cfg, name):
    v = getattr(cfg, name)
    if v == "" or v is None:
        raise UsageError(f"--{name.replace('_', '-')} is required for this command")
    return v


def signal_of(cfg):
    return parse_signal(need(cfg, "signal"))


def symbol_of(cfg, text=None):
    text = need(cfg, "symbol") if text is None else text
    return parse_symbol(text, None if np.isnan(cfg.order) else cfg.order)


def use_closed_form(cfg, node, symbol=None):
    if cfg.path == "grid":
        return False
    ok = CF.supports(node) and cfg.window in ("gaussian",) + tuple(f"hermite({k})" for k in range(16))
    if symbol is not None:
        poly = symbol_poly_ok(symbol, cfg.quantization)
        ok = ok and poly
    if cfg.path == "closed-form" and not ok:
        raise UsageError("no closed form for this signal/symbol; use --path grid")
    return ok


def symbol_poly_ok(symbol, quantization):
    from gmla.symbols import wick_expansion

    node = symbol.expr
    if quantization == "antiwick":
        return wick_expansion(node) is not None
    return E.as_polynomial(node) is not None


def estimate(cfg, node, symbol=None, fourier=False, window=None):
    """Wave front estimate of u (or a^w u / A_a u) on the exact or the grid path."""
    from gmla import wavefront as W

    window = cfg.window if window is None else window
    kw = dict(D=cfg.D, half_width=cfg.half_width)
    if use_closed_form(cfg, node, symbol):
        fw = cfg.annulus_pair(W.CLOSED_FORM_WINDOW)
        return W.wavefront_closed_form(node, window, symbol=symbol, quantization=cfg.quantization,
                                       fourier=fourier, fit_window=fw, **kw)
    if fourier:
        raise UsageError("the Fourier pipeline needs a closed-form signal")
    from gmla.operators import antiwick_apply, apply_operator, weyl_quantize
    from gmla.signals import sample_signal

    g = cfg.grid()
    u = sample_signal(node, g)
    if symbol is not None:
        u = antiwick_apply(symbol, u) if cfg.quantization == "antiwick" else apply_operator(weyl_quantize(symbol, g), u)
    eps = [n.eps for n in E.walk(node) if isinstance(n, E.DeltaApprox)]
    fw = cfg.annulus_pair(W.lattice_fit_window(g, min(eps) if eps else None))
    return W.wavefront_grid(u, window, fit_window=fw, **kw)


def degrees(est, idx):
    return [float(v) for v in np.degrees(est.thetas[idx])]


def summary(est):
    return {
        "gabor_in_deg": degrees(est, est.gabor == "in"),
        "inconclusive_deg": degrees(est, (est.gabor == "inconclusive") | (est.sobolev == "inconclusive")),
        "finite_threshold_deg": degrees(est, est.sobolev == "finite"),
        "s_star_finite": [float(v) for v in est.s_star[est.sobolev == "finite"]],
    }


# --- commands ------------------------------------------------------------------------------
# Each returns (results dict, passed flag, plot object or None).


def cmd_stft(cfg):
    from gmla.signals import sample_signal
    from gmla.stft import parse_window, stft

    g = cfg.grid()
    u = sample_signal(signal_of(cfg), g)
    F = stft(u, parse_window(cfg.window, g), g)
    A = np.abs(F.values)
    i, j = np.unravel_index(np.argmax(A), A.shape)
    res = {"grid": g.describe(), "signal": u.provenance, "window": cfg.window, "signal_norm": u.norm(),
           "field_norm": F.norm(), "max_abs": float(A[i, j]), "argmax": [float(g.x[i]), float(g.xi[j])]}
    return res, True, F


def cmd_wf(cfg):
    node = signal_of(cfg)
    sym = symbol_of(cfg) if cfg.symbol else None
    est = estimate(cfg, node, sym)
    res = {"mode": cfg.mode, "summary": summary(est), "estimate": est.to_record()}
    if cfg.mode == "sobolev":
        res["membership"] = {}
        for s in cfg.s_values():
            member, boundary = est.qs_membership(s)
            res["membership"][format(s, "g")] = {"in_deg": degrees(est, member), "boundary_deg": degrees(est, boundary)}
    elif cfg.mode not in ("gabor", "thresholds"):
        raise UsageError(f"unknown wf mode {cfg.mode!r}")
    return res, True, est


def cmd_qnorm(cfg):
    from gmla.operators import q_norm
    from gmla.signals import sample_signal
    from gmla.stft import parse_window

    g = cfg.grid()
    u = sample_signal(signal_of(cfg), g)
    psi = parse_window(cfg.window, g)
    reps = [q_norm(u, s, cfg.method, psi, g).to_record() for s in cfg.s_values()]
    return {"signal": u.provenance, "norms": reps}, True, None


def cmd_op(cfg):
    from gmla.operators import antiwick_apply, apply_operator, weyl_quantize
    from gmla.signals import sample_signal

    g = cfg.grid()
    u = sample_signal(signal_of(cfg), g)
    sym = symbol_of(cfg)
    res = {"symbol": str(sym), "order": sym.order, "quantization": cfg.quantization, "input_norm": u.norm()}
    if cfg.quantization == "weyl":
        op = weyl_quantize(sym, g)
        v = apply_operator(op, u)
        res["hermitian_defect"] = op.hermitian_defect()
    elif cfg.quantization == "antiwick":
        v = antiwick_apply(sym, u)
    else:
        raise UsageError(f"unknown quantization {cfg.quantization!r}")
    res["output_norm"] = v.norm()
    res["output"] = [[float(c.real), float(c.imag)] for c in v.values]
    return res, True, None


def cmd_symcheck(cfg):
    from gmla import symbols as S

    sym = symbol_of(cfg)
    m = sym.order
    mp = m if np.isnan(cfg.m_prime) else cfg.m_prime
    ann = cfg.annulus_pair(S.DEFAULT_ANNULUS)
    table = S.seminorm_screen(sym, m)
    cs = S.estimate_char_set(sym, mp, annulus=ann, D=cfg.D)
    ms = S.estimate_microsupport(sym, annulus=ann, D=cfg.D)
    res = {"symbol": str(sym), "order": m, "seminorms": table.to_record(),
           "char_set": {"m_prime": mp, "characteristic_deg": [float(v) for v in np.degrees(cs.characteristic())],
                        "empty": cs.is_empty()},
           "microsupport": {"in_deg": [float(v) for v in np.degrees(ms.directions_in())], "empty": ms.is_empty(),
                            "inconclusive_deg": [float(v) for v in np.degrees(ms.thetas[ms.verdict == "inconclusive"])]}}
    return res, table.passed, None


def cmd_parametrix(cfg):
    from gmla.symbols import ParametrixError, parametrix_truncated

    sym = symbol_of(cfg)
    chi = parse_symbol(need(cfg, "chi"))
    mp = sym.order if np.isnan(cfg.m_prime) else cfg.m_prime
    kw = {"annulus": cfg.annulus_pair((20.0, 2000.0)), "D": cfg.D}
    try:
        pr = parametrix_truncated(sym, chi, mp, cfg.n_terms, **kw)
    except ParametrixError as exc:
        return {"error": str(exc)}, False, None
    need_decay = 2 * cfg.n_terms - cfg.tol
    on = np.isfinite(pr.decay)
    res = {"symbol": str(sym), "chi": E.to_text(chi.expr), "n_terms": cfg.n_terms, "min_decay": pr.min_decay(),
           "required": need_decay, "directions_deg": [float(v) for v in np.degrees(pr.thetas[on])],
           "decay": [float(v) for v in pr.decay[on]]}
    return res, pr.min_decay() >= need_decay, None


def cmd_filter_demo(cfg):
    from gmla import wavefront as W
    from gmla.operators import antiwick_apply
    from gmla.signals import sample_signal
    from gmla.symbols import estimate_char_set

    g1, g2 = cone_from_text(cfg.cone1), cone_from_text(cfg.cone2)
    filt = W.build_cone_filter(g1, g2, cfg.m)
    cs = estimate_char_set(filt.total, -cfg.m, D=cfg.D)
    text = cfg.signal or "planewave(0)"
    node = parse_signal(text)
    g = cfg.grid()
    u = sample_signal(node, g)
    kw = dict(D=cfg.D, half_width=cfg.half_width)
    eu = W.wavefront_grid(u, cfg.window, **kw)
    ea = W.wavefront_grid(antiwick_apply(filt.total, u), cfg.window, **kw)
    ref = W.wavefront_closed_form(node, cfg.window, **kw) if CF.supports(node) else None
    rep = W.filter_order_report(eu, ea, filt, cfg.tol, reference=ref)
    res = {"signal": text, "m": cfg.m, "filter": E.to_text(filt.total),
           "char_set_empty": cs.is_empty(), "report": rep.to_record()}
    return res, rep.passed and cs.is_empty(), ea


def _check_moyal(cfg):
    from gmla.signals import sample_signal
    from gmla.stft import moyal_residual, parse_window

    g = cfg.grid()
    u = sample_signal(signal_of(cfg), g)
    inv, energy = moyal_residual(u, parse_window(cfg.window, g), g)
    return {"inversion_residual": inv, "energy_residual": energy, "tolerance": 1e-6}, max(inv, energy) < 1e-6, None


def _check_weylwick(cfg):
    from gmla.operators import antiwick_apply, apply_operator, weyl_quantize
    from gmla.signals import sample_signal
    from gmla.symbols import wick_expansion

    g = cfg.grid()
    sym = symbol_of(cfg)
    b = wick_expansion(sym)
    if b is None:
        raise UsageError("weylwick check needs a polynomial symbol")
    op = weyl_quantize(b, g)
    texts = [cfg.signal] if cfg.signal else [f"hermite({k})" for k in range(6)]
    errs = {}
    for t in texts:
        u = sample_signal(parse_signal(t), g)
        d = antiwick_apply(sym, u).values - apply_operator(op, u).values
        errs[t] = float(np.linalg.norm(d) / np.linalg.norm(u.values))
    worst = max(errs.values())
    return {"smoothed_symbol": E.to_text(b), "relative_errors": errs, "tolerance": 1e-3}, worst <= 1e-3, None


def _check_microlocal(cfg, mode):
    from gmla import wavefront as W
    from gmla.symbols import estimate_char_set

    node = signal_of(cfg)
    sym = symbol_of(cfg)
    eu = estimate(cfg, node)
    out, ok = {}, True
    char = None
    mp = sym.order if np.isnan(cfg.m_prime) else cfg.m_prime
    if mode == "microelliptic":
        char = estimate_char_set(sym, mp, D=cfg.D)
    for q in ("weyl", "antiwick"):
        c = RunConfig(**{**asdict(cfg), "quantization": q})
        ea = estimate(c, node, sym)
        rep = W.inclusion_check(eu, ea, sym.order, mode, cfg.tol, char=char, m_prime=mp, pipeline=q)
        out[q] = rep.to_record()
        ok = ok and rep.passed
    if char is not None:
        out["characteristic_deg"] = [float(v) for v in np.degrees(char.characteristic())]
    return out, ok, eu


def _check_window_invariance(cfg):
    from gmla import wavefront as W

    node = signal_of(cfg)
    a = estimate(cfg, node, window="gaussian")
    b = estimate(cfg, node, window="hermite(1)")
    gab = W.sets_agree(a.gabor_indices(), b.gabor_indices(), a.D)
    sob = W.sets_agree(a.singular_indices(), b.singular_indices(), a.D)
    res = {"gaussian": summary(a), "hermite(1)": summary(b), "gabor_agree": gab, "sobolev_agree": sob}
    return res, gab and sob, a


def _check_fourier_rotation(cfg):
    from gmla import wavefront as W

    node = signal_of(cfg)
    a = estimate(cfg, node)
    f = estimate(cfg, node, fourier=True)
    q = a.D // 4
    rot = W.rotate_indices(a.gabor_indices(), -q, a.D)
    ok = W.sets_agree(f.gabor_indices(), rot, a.D)
    return {"u": summary(a), "fourier_u": summary(f), "rotated_deg": degrees(a, rot)}, ok, f


def _check_union_equality(cfg):
    from gmla import wavefront as W

    est = estimate(cfg, signal_of(cfg))
    ok, union, gab = W.union_equality(est)
    return {"union_deg": degrees(est, union), "gabor_deg": degrees(est, gab), "summary": summary(est)}, ok, est


CHECKS = {
    "moyal": _check_moyal,
    "weylwick": _check_weylwick,
    "microlocal": lambda c: _check_microlocal(c, "microlocal"),
    "microelliptic": lambda c: _check_microlocal(c, "microelliptic"),
    "window-invariance": _check_window_invariance,
    "fourier-rotation": _check_fourier_rotation,
    "union-equality": _check_union_equality,
}


def cmd_check(cfg, which):
    res, ok, plot = CHECKS[which](cfg)
    res = {"check": which, "passed": bool(ok), **res}
    return res, ok, plot


COMMANDS = {
    "stft": cmd_stft,
    "wf": cmd_wf,
    "qnorm": cmd_qnorm,
    "op": cmd_op,
    "symcheck": cmd_symcheck,
    "parametrix": cmd_parametrix,
    "filter-demo": cmd_filter_demo,
}


# --- argument parsing ------------------------------------------------------------------------


def _add_common(p):
    p.add_argument("--config", help="flat key = value config file (flags win)")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--plot", help="write plot-ready CSV data here")
    p.add_argument("--plot-kind", dest="plot_kind", choices=["heatmap", "polar"],
                   help="default: heatmap for stft, polar for wave front results")
    p.add_argument("--L", type=float)
    p.add_argument("--N", type=int)
    p.add_argument("--oversample", type=int)
    p.add_argument("--window")
    p.add_argument("--signal")
    p.add_argument("--symbol")
    p.add_argument("--order", type=float, help="declared symbol order m (default: inferred)")
    p.add_argument("--m-prime", dest="m_prime", type=float)
    p.add_argument("--s", help="comma-separated orders")
    p.add_argument("--D", type=int, help="number of directions")
    p.add_argument("--half-width", dest="half_width", type=int, help="cone half-width in steps")
    p.add_argument("--tol", type=float)
    p.add_argument("--annulus", help="lo,hi radii of the fit window")
    p.add_argument("--path", choices=["auto", "closed-form", "grid"])
    p.add_argument("--quantization", choices=["weyl", "antiwick"])
    p.add_argument("-v", "--verbose", action="store_true")


def make_parser():
    parser = argparse.ArgumentParser(prog="gmla", description="Phase-space microlocal analysis toolkit",
                                     epilog=GRAMMAR_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [("stft", "short-time Fourier transform"), ("wf", "wave front set estimate"),
                           ("qnorm", "Shubin-Sobolev norms"), ("op", "apply a Weyl or anti-Wick operator"),
                           ("symcheck", "seminorms, characteristic set and microsupport"),
                           ("parametrix", "truncated parametrix remainder decay"),
                           ("filter-demo", "two-cone filter example end to end")]:
        p = sub.add_parser(name, help=helptext, epilog=GRAMMAR_HELP,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        _add_common(p)
        if name == "wf":
            p.add_argument("--mode", choices=["gabor", "sobolev", "thresholds"])
        if name == "qnorm":
            p.add_argument("--method", choices=["stft-weighted", "locop", "weyl-elliptic"])
        if name == "parametrix":
            p.add_argument("--chi")
            p.add_argument("--n-terms", dest="n_terms", type=int)
        if name == "filter-demo":
            p.add_argument("--cone1", help="lo,hi in degrees")
            p.add_argument("--cone2", help="lo,hi in degrees")
            p.add_argument("--m", type=float)
    p = sub.add_parser("check", help="property checks", epilog=GRAMMAR_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("which", choices=sorted(CHECKS))
    _add_common(p)
    return parser


def _plot(obj, path, kind=None):
    from gmla.grid import PhaseField

    if kind is None:
        kind = "heatmap" if isinstance(obj, PhaseField) else "polar"
    emit_plot_data(obj, kind, path)


def run(argv=None):
    parser = make_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = build_config(ns)
    except (UsageError, GridError) as exc:
        print(f"gmla: error: {exc}", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    env = ReportEnvelope(ns.command if ns.command != "check" else f"check {ns.which}", cfg.echo())
    code = 0
    plot = None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            if ns.command == "check":
                res, ok, plot = cmd_check(cfg, ns.which)
            else:
                res, ok, plot = COMMANDS[ns.command](cfg)
            env.results = res
            code = 0 if ok else 1
        except ExprError as exc:
            print(f"gmla: error: {exc}\n\n{GRAMMAR_HELP}", file=sys.stderr)
            return 2
        except (UsageError, GridError, ConeError) as exc:
            print(f"gmla: error: {exc}", file=sys.stderr)
            return 2
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            log.error("numeric failure: %s", exc, exc_info=ns.verbose)
            env.results = {"error": {"type": type(exc).__name__, "message": str(exc)}}
            code = 1
    env.warnings = [f"{w.category.__name__}: {w.message}" for w in caught]
    est = plot if hasattr(plot, "gabor") else None
    if est is not None:
        inc = degrees(est, (est.gabor == "inconclusive") | (est.sobolev == "inconclusive"))
        if inc:
            env.warnings.append(f"inconclusive directions (deg): {', '.join(format(v, 'g') for v in inc)}")
    env.timing = {"seconds": time.perf_counter() - t0}
    if cfg.plot and plot is not None:
        try:
            _plot(plot, cfg.plot, ns.plot_kind)
        except TypeError as exc:
            print(f"gmla: error: {exc}", file=sys.stderr)
            return 2
    if cfg.out:
        env.write(cfg.out)
    else:
        sys.stdout.write(env.dumps())
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
