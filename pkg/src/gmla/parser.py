"""Recursive-descent parser for the signal/symbol expression grammar.

    expr   := term ('+' term)*
    term   := factor ('*' factor)*
    factor := unary ('^' int | '^' '(' int ')')?
    unary  := '-' unary | atom
    atom   := number | 'i' | '(' expr ')' | name | name '(' args ')'

Signals know gauss, chirp, planewave, deltaApprox, delta, hermite and
file("path"); symbols know x, xi, bracket, gaussz, coneCutoff, norm, rstep
and astep.
"""

import re
from dataclasses import dataclass

from gmla import expr as E
from gmla.cones import Cone, ConeError, cone_cutoff


class ExprError(ValueError):
    """Parse failure; ``offset`` is the 0-based character position."""

    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


@dataclass(frozen=True)
class Symbol:
    """A symbol tree together with its declared order m."""

    expr: E.Node
    order: float

    def __str__(self):
        return E.to_text(self.expr)


_TOKEN = re.compile(
    r"""\s*(?:
        (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)
      | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
      | (?P<str>"(?:[^"\\]|\\.)*")
      | (?P<op>[-+*^(),])
    )""",
    re.VERBOSE,
)

# name -> (node factory, argument kinds); "r" real, "i" integer, "s" string
_SIGNAL_PRIMS = {
    "gauss": (E.Gauss, "rr"),
    "chirp": (E.Chirp, "r"),
    "planewave": (E.PlaneWave, "r"),
    "deltaApprox": (E.DeltaApprox, "r"),
    "delta": (E.Delta, ""),
    "hermite": (E.Hermite, "i"),
    "file": (E.File, "s"),
}

_SYMBOL_PRIMS = {
    "bracket": (E.Bracket, "r"),
    "gaussz": (E.GaussZ, ""),
    "norm": (E.Norm, "r"),
    "rstep": (E.RStep, "irrr"),
    "astep": (E.AStep, "irrrr"),
    "coneCutoff": (None, "rrrrr"),
}


def _tokenize(text):
    toks = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExprError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        toks.append((kind, m.group(kind), start))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text, kind):
        self.text = text
        self.kind = kind
        self.toks = _tokenize(text)
        self.i = 0
        self.prims = _SIGNAL_PRIMS if kind == "signal" else _SYMBOL_PRIMS

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, value):
        t = self.take()
        if t[1] != value or t[0] not in ("op",):
            raise ExprError(f"expected {value!r}", t[2])
        return t

    def parse(self):
        node = self.expr()
        t = self.peek()
        if t[0] != "end":
            raise ExprError(f"unexpected token {t[1]!r}", t[2])
        return node

    def expr(self):
        terms = [self.term()]
        while self.peek()[1] == "+" and self.peek()[0] == "op":
            self.take()
            terms.append(self.term())
        return E.add(*terms) if len(terms) > 1 else terms[0]

    def term(self):
        factors = [self.factor()]
        while self.peek()[1] == "*" and self.peek()[0] == "op":
            self.take()
            factors.append(self.factor())
        return E.mul(*factors) if len(factors) > 1 else factors[0]

    def factor(self):
        base = self.unary()
        if self.peek()[1] == "^":
            self.take()
            if self.peek()[1] == "(":
                self.take()
                n = self._int()
                self.expect(")")
            else:
                n = self._int()
            if self.kind == "signal" and n < 0:
                raise ExprError("negative powers are not allowed in signals", self.toks[self.i - 1][2])
            return E.power(base, n)
        return base

    def _int(self):
        sign = 1
        t = self.take()
        if t[1] == "-":
            sign = -1
            t = self.take()
        if t[0] != "num" or not re.fullmatch(r"\d+", t[1]):
            raise ExprError("expected integer exponent", t[2])
        return sign * int(t[1])

    def unary(self):
        t = self.peek()
        if t[0] == "op" and t[1] == "-":
            self.take()
            inner = self.unary()
            if isinstance(inner, E.Const):
                return E.Const(-inner.value)
            return E.mul(E.Const(-1.0), inner)
        return self.atom()

    def atom(self):
        t = self.take()
        kind, val, pos = t
        if kind == "num":
            return E.Const(complex(float(val)))
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "name":
            return self.named(val, pos)
        if kind == "end":
            raise ExprError("unexpected end of input", pos)
        raise ExprError(f"unexpected token {val!r}", pos)

    def named(self, name, pos):
        if name == "i":
            return E.Const(1j)
        if self.kind == "symbol" and name in ("x", "xi"):
            return E.Var(name)
        if name not in self.prims:
            raise ExprError(f"unknown primitive {name!r}", pos)
        factory, argkinds = self.prims[name]
        args = []
        if self.peek()[1] == "(" and self.peek()[0] == "op":
            self.take()
            if self.peek()[1] != ")":
                args.append(self.arg())
                while self.peek()[1] == ",":
                    self.take()
                    args.append(self.arg())
            self.expect(")")
        elif argkinds:
            raise ExprError(f"{name} expects {len(argkinds)} argument(s)", self.peek()[2])
        if len(args) != len(argkinds):
            raise ExprError(f"{name} expects {len(argkinds)} argument(s), got {len(args)}", pos)
        vals = []
        for (v, apos, akind), want in zip(args, argkinds):
            if want == "s":
                if akind != "s":
                    raise ExprError(f"{name} expects a string argument", apos)
                vals.append(v)
            elif akind == "s":
                raise ExprError(f"{name} expects a numeric argument", apos)
            elif want == "i":
                if float(v) != int(float(v)):
                    raise ExprError(f"{name} expects an integer argument", apos)
                vals.append(int(float(v)))
            else:
                vals.append(float(v))
        return self.build(name, factory, vals, pos)

    def build(self, name, factory, vals, pos):
        if name == "coneCutoff":
            lo, hi, R, wa, wr = vals
            try:
                return cone_cutoff(Cone(lo, hi), R, wa, wr)
            except ConeError as exc:
                raise ExprError(str(exc), pos) from None
        if name == "deltaApprox" and vals[0] <= 0:
            raise ExprError("deltaApprox requires eps > 0", pos)
        if name == "hermite" and vals[0] < 0:
            raise ExprError("hermite requires k >= 0", pos)
        return factory(*vals)

    def arg(self):
        t = self.take()
        if t[0] == "str":
            raw = t[1][1:-1]
            return re.sub(r"\\(.)", r"\1", raw), t[2], "s"
        sign = ""
        pos = t[2]
        if t[0] == "op" and t[1] == "-":
            sign = "-"
            t = self.take()
        if t[0] != "num":
            raise ExprError("expected a number", t[2])
        return sign + t[1], pos, "n"


def parse_expr(text, kind="signal"):
    """Parse text into a signal tree, or a Symbol (tree plus inferred order)."""
    if kind not in ("signal", "symbol"):
        raise ValueError(f"kind must be 'signal' or 'symbol', not {kind!r}")
    node = _Parser(text, kind).parse()
    if kind == "symbol":
        return Symbol(node, E.infer_order(node))
    return node


def parse_signal(text):
    return parse_expr(text, "signal")


def parse_symbol(text, order=None):
    sym = parse_expr(text, "symbol")
    return sym if order is None else Symbol(sym.expr, float(order))


def pretty(node):
    if isinstance(node, Symbol):
        node = node.expr
    return E.to_text(node)
