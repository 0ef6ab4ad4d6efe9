"""Signal temporal logic: ASTs, a textual formula language, traces, and
boolean satisfaction semantics.

Formulas are built from predicates of the form ``h(s) <= u`` where ``h`` is a
signal expression over named trace channels and ``u`` is a threshold in
[-1, 1], combined with boolean connectives and bounded temporal operators
``alw[a,b]``, ``ev[a,b]`` and ``until[a,b]``. Intervals are given in seconds
and converted to inclusive step-index ranges against a trace's sampling
period. Everything in this module is an immutable value; all evaluation
functions are pure.
"""

from __future__ import annotations

import json
import math
import re
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "StlError",
    "StlSyntaxError",
    "HorizonError",
    "Interval",
    "SignalExpr",
    "Channel",
    "Const",
    "Negate",
    "Sum",
    "Difference",
    "Scale",
    "EuclideanNorm",
    "ClampScale",
    "Formula",
    "TrueFormula",
    "Predicate",
    "Not",
    "And",
    "Or",
    "Always",
    "Eventually",
    "Until",
    "Trace",
    "parse_formula",
    "parse_signal_expr",
    "pretty_print",
    "eval_signal",
    "eval_signal_array",
    "bool_sat",
    "horizon_seconds",
    "steps_horizon",
    "required_length",
    "load_formula",
    "read_trace",
    "write_trace_csv",
]

# Guards against non-representable second/period ratios, e.g. 0.1/0.05.
_STEP_EPS = 1e-9


class StlError(Exception):
    """Base class for errors raised by the STL layer."""


class StlSyntaxError(StlError):
    """Formula text could not be parsed. Carries 1-based line and column."""

    def __init__(self, message, line, col):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class HorizonError(StlError):
    """The formula needs samples past the end of the trace."""


@dataclass(frozen=True)
class Interval:
    """Closed time interval [lo, hi] in seconds, 0 <= lo <= hi < inf."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError("interval bounds must be finite")
        if self.lo < 0 or self.hi < self.lo:
            raise ValueError(f"malformed interval [{self.lo}, {self.hi}]")

    def step_range(self, dt):
        """Inclusive step indices {ceil(lo/dt), ..., floor(hi/dt)}.

        Raises HorizonError if the conversion yields no steps.
        """
        k_lo = math.ceil(self.lo / dt - _STEP_EPS)
        k_hi = math.floor(self.hi / dt + _STEP_EPS)
        if k_hi < k_lo:
            raise HorizonError(
                f"interval [{self.lo}, {self.hi}] contains no sample at dt={dt}"
            )
        return range(k_lo, k_hi + 1)


# ---------------------------------------------------------------------------
# Signal expressions


class SignalExpr:
    """Base class for expressions over trace channels."""

    __slots__ = ()


@dataclass(frozen=True)
class Channel(SignalExpr):
    name: str


@dataclass(frozen=True)
class Const(SignalExpr):
    value: float


@dataclass(frozen=True)
class Negate(SignalExpr):
    arg: SignalExpr


@dataclass(frozen=True)
class Sum(SignalExpr):
    left: SignalExpr
    right: SignalExpr


@dataclass(frozen=True)
class Difference(SignalExpr):
    left: SignalExpr
    right: SignalExpr


@dataclass(frozen=True)
class Scale(SignalExpr):
    factor: float
    arg: SignalExpr


@dataclass(frozen=True)
class EuclideanNorm(SignalExpr):
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if len(self.args) < 1:
            raise ValueError("norm needs at least one argument")


@dataclass(frozen=True)
class ClampScale(SignalExpr):
    """Affine map of [lower, upper] onto [-1, 1], clamped outside.

    This is the normalization device that lets raw physical signals (metres,
    grams) appear inside predicates whose h must stay in [-1, 1].
    """

    arg: SignalExpr
    lower: float
    upper: float

    def __post_init__(self):
        if not (self.lower < self.upper):
            raise ValueError("clamp bounds must satisfy lower < upper")


def eval_signal_array(e, tr):
    """Evaluate a signal expression over every step of a trace.

    Returns a length-T float array. Raises StlError on unknown channels.
    """
    if isinstance(e, Channel):
        try:
            return tr.channels[e.name]
        except KeyError:
            raise StlError(f"unknown channel {e.name!r}") from None
    if isinstance(e, Const):
        return np.full(tr.length, float(e.value))
    if isinstance(e, Negate):
        return -eval_signal_array(e.arg, tr)
    if isinstance(e, Sum):
        return eval_signal_array(e.left, tr) + eval_signal_array(e.right, tr)
    if isinstance(e, Difference):
        return eval_signal_array(e.left, tr) - eval_signal_array(e.right, tr)
    if isinstance(e, Scale):
        return e.factor * eval_signal_array(e.arg, tr)
    if isinstance(e, EuclideanNorm):
        parts = np.stack([eval_signal_array(a, tr) for a in e.args])
        return np.sqrt(np.sum(parts * parts, axis=0))
    if isinstance(e, ClampScale):
        v = eval_signal_array(e.arg, tr)
        scaled = 2.0 * (v - e.lower) / (e.upper - e.lower) - 1.0
        return np.clip(scaled, -1.0, 1.0)
    raise TypeError(f"not a signal expression: {e!r}")


def eval_signal(e, tr, t):
    """Evaluate a signal expression at step index t."""
    if not 0 <= t < tr.length:
        raise StlError(f"step index {t} outside trace of length {tr.length}")
    return float(eval_signal_array(e, tr)[t])


def _provably_normalized(e):
    # Conservative check that an expression always lands in [-1, 1].
    if isinstance(e, ClampScale):
        return True
    if isinstance(e, Const):
        return abs(e.value) <= 1.0
    if isinstance(e, Negate):
        return _provably_normalized(e.arg)
    if isinstance(e, Scale):
        return abs(e.factor) <= 1.0 and _provably_normalized(e.arg)
    return False


# ---------------------------------------------------------------------------
# Formulas


class Formula:
    """Base class for STL formula nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class TrueFormula(Formula):
    pass


@dataclass(frozen=True)
class Predicate(Formula):
    """h(s) <= threshold; satisfied when the expression is below threshold."""

    expr: SignalExpr
    threshold: float

    def __post_init__(self):
        if not -1.0 <= self.threshold <= 1.0:
            raise ValueError(
                f"predicate threshold {self.threshold} outside [-1, 1]"
            )


@dataclass(frozen=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True)
class And(Formula):
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise ValueError("conjunction needs at least 2 children")


@dataclass(frozen=True)
class Or(Formula):
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise ValueError("disjunction needs at least 2 children")


@dataclass(frozen=True)
class Always(Formula):
    interval: Interval
    child: Formula


@dataclass(frozen=True)
class Eventually(Formula):
    interval: Interval
    child: Formula


@dataclass(frozen=True)
class Until(Formula):
    interval: Interval
    left: Formula
    right: Formula


def horizon_seconds(f):
    """Look-ahead of a formula in seconds: max over nested interval sums."""
    if isinstance(f, (TrueFormula, Predicate)):
        return 0.0
    if isinstance(f, Not):
        return horizon_seconds(f.child)
    if isinstance(f, (And, Or)):
        return max(horizon_seconds(c) for c in f.children)
    if isinstance(f, (Always, Eventually)):
        return f.interval.hi + horizon_seconds(f.child)
    if isinstance(f, Until):
        return f.interval.hi + max(horizon_seconds(f.left), horizon_seconds(f.right))
    raise TypeError(f"not a formula: {f!r}")


def steps_horizon(f, dt):
    """Maximum step offset beyond t that evaluation at t may touch."""
    if isinstance(f, (TrueFormula, Predicate)):
        return 0
    if isinstance(f, Not):
        return steps_horizon(f.child, dt)
    if isinstance(f, (And, Or)):
        return max(steps_horizon(c, dt) for c in f.children)
    if isinstance(f, (Always, Eventually)):
        return f.interval.step_range(dt)[-1] + steps_horizon(f.child, dt)
    if isinstance(f, Until):
        inner = max(steps_horizon(f.left, dt), steps_horizon(f.right, dt))
        return f.interval.step_range(dt)[-1] + inner
    raise TypeError(f"not a formula: {f!r}")


def required_length(f, dt, t=0):
    """Minimum trace length so that evaluation at step t stays in range."""
    return t + steps_horizon(f, dt) + 1


def check_horizon(f, tr, t):
    if not 0 <= t < tr.length:
        raise HorizonError(
            f"evaluation step {t} outside trace of length {tr.length}"
        )
    need = required_length(f, tr.dt, t)
    if need > tr.length:
        raise HorizonError(
            f"formula needs {need} samples from step {t} at dt={tr.dt}; "
            f"trace has {tr.length}"
        )


def bool_sat(f, tr, t=0):
    """Standard boolean STL satisfaction of f on trace tr at step t.

    The whole formula horizon is checked up front; a trace too short for the
    formula raises HorizonError rather than silently truncating.
    """
    check_horizon(f, tr, t)
    cache = {}
    return _sat(f, tr, t, cache)


def _pred_margins(p, tr, cache):
    # threshold - h, over all steps; positive where the predicate holds.
    key = id(p)
    got = cache.get(key)
    if got is None:
        got = p.threshold - eval_signal_array(p.expr, tr)
        cache[key] = got
    return got


def _sat(f, tr, t, cache):
    if isinstance(f, TrueFormula):
        return True
    if isinstance(f, Predicate):
        return bool(_pred_margins(f, tr, cache)[t] >= 0.0)
    if isinstance(f, Not):
        return not _sat(f.child, tr, t, cache)
    if isinstance(f, And):
        return all(_sat(c, tr, t, cache) for c in f.children)
    if isinstance(f, Or):
        return any(_sat(c, tr, t, cache) for c in f.children)
    if isinstance(f, Always):
        steps = f.interval.step_range(tr.dt)
        return all(_sat(f.child, tr, t + k, cache) for k in steps)
    if isinstance(f, Eventually):
        steps = f.interval.step_range(tr.dt)
        return any(_sat(f.child, tr, t + k, cache) for k in steps)
    if isinstance(f, Until):
        steps = f.interval.step_range(tr.dt)
        for k in steps:
            if _sat(f.right, tr, t + k, cache) and all(
                _sat(f.left, tr, j, cache) for j in range(t, t + k)
            ):
                return True
        return False
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# Traces


class Trace:
    """Uniformly sampled multivariate signal.

    Channels are name -> length-T float arrays (made read-only so traces can
    be shared across parallel evaluators); dt is the sampling period in
    seconds.
    """

    def __init__(self, channels, dt):
        if not channels:
            raise ValueError("trace needs at least one channel")
        dt = float(dt)
        if not (dt > 0 and math.isfinite(dt)):
            raise ValueError(f"dt must be positive and finite, got {dt}")
        arrays = {}
        length = None
        for name, values in channels.items():
            a = np.asarray(values, dtype=float)
            if a.ndim != 1:
                raise ValueError(f"channel {name!r} is not 1-D")
            if length is None:
                length = a.shape[0]
            elif a.shape[0] != length:
                raise ValueError(
                    f"channel {name!r} has length {a.shape[0]}, expected {length}"
                )
            a = a.copy()
            a.flags.writeable = False
            arrays[name] = a
        if length < 1:
            raise ValueError("trace must have at least one sample")
        self.channels = arrays
        self.dt = dt
        self.length = length

    def __repr__(self):
        names = ", ".join(sorted(self.channels))
        return f"Trace(T={self.length}, dt={self.dt}, channels=[{names}])"


# ---------------------------------------------------------------------------
# Concrete syntax
#
#   formula  := or_expr ( 'until[a,b]' or_expr )?
#   or_expr  := and_expr ( '|' and_expr )*
#   and_expr := unary ( '&' unary )*
#   unary    := '!' unary | 'alw[a,b]' unary | 'ev[a,b]' unary | atom
#   atom     := 'true' | '(' formula ')' | sigexpr ('<='|'>=') number
#   sigexpr  := term ( ('+'|'-') term )*
#   term     := factor ( '*' factor )*      (one side must be a number)
#   factor   := '-' factor | number | name | 'norm(' sigexpr, ... ')'
#               | 'clamp(' sigexpr, number, number ')' | '(' sigexpr ')'
#
# 'h >= u' desugars to '-h <= -u', matching the canonical predicate shape.

_TOKEN_RE = re.compile(
    r"""
    (?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<op><=|>=|[()\[\],&|!+\-*])
  | (?P<ws>[ \t]+)
  | (?P<nl>\n)
  | (?P<bad>.)
    """,
    re.VERBOSE,
)

_KEYWORDS = {"true", "alw", "ev", "until", "norm", "clamp"}


@dataclass
class _Token:
    kind: str  # 'num' | 'name' | 'op' | 'end'
    text: str
    line: int
    col: int


def _tokenize(text):
    tokens = []
    line, col = 1, 1
    for m in _TOKEN_RE.finditer(text):
        kind = m.lastgroup
        s = m.group()
        if kind == "ws":
            col += len(s)
            continue
        if kind == "nl":
            line += 1
            col = 1
            continue
        if kind == "bad":
            raise StlSyntaxError(f"unexpected character {s!r}", line, col)
        tokens.append(_Token(kind, s, line, col))
        col += len(s)
    tokens.append(_Token("end", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        raise StlSyntaxError(message, tok.line, tok.col)

    def expect(self, text):
        tok = self.advance()
        if tok.text != text:
            self.error(f"expected {text!r}, found {tok.text!r}", tok)
        return tok

    def at(self, text):
        return self.peek().text == text

    # -- formulas ---------------------------------------------------------

    def formula(self):
        left = self.or_expr()
        if self.peek().text == "until":
            self.advance()
            iv = self.interval()
            right = self.or_expr()
            return Until(iv, left, right)
        return left

    def or_expr(self):
        parts = [self.and_expr()]
        while self.at("|"):
            self.advance()
            parts.append(self.and_expr())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def and_expr(self):
        parts = [self.unary()]
        while self.at("&"):
            self.advance()
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def unary(self):
        tok = self.peek()
        if tok.text == "!":
            self.advance()
            return Not(self.unary())
        if tok.text == "alw":
            self.advance()
            return Always(self.interval(), self.unary())
        if tok.text == "ev":
            self.advance()
            return Eventually(self.interval(), self.unary())
        return self.atom()

    def atom(self):
        tok = self.peek()
        if tok.text == "true":
            self.advance()
            return TrueFormula()
        if tok.text == "(":
            # Could open a formula or a signal expression; try the formula
            # route first and fall back to a predicate. On double failure,
            # report whichever error got further into the input.
            save = self.pos
            self.advance()
            try:
                f = self.formula()
                self.expect(")")
            except StlSyntaxError as formula_err:
                formula_pos = self.pos
                self.pos = save
                try:
                    return self.predicate()
                except StlSyntaxError:
                    if formula_pos >= self.pos:
                        raise formula_err from None
                    raise
            # '(f) <= u' means the parenthesis belonged to a signal expr.
            if self.peek().text in ("<=", ">=", "+", "-", "*"):
                self.pos = save
                return self.predicate()
            return f
        return self.predicate()

    def predicate(self):
        tok = self.peek()
        expr = self.sigexpr()
        cmp_tok = self.advance()
        if cmp_tok.text not in ("<=", ">="):
            self.error("expected '<=' or '>=' after signal expression", cmp_tok)
        u_tok = self.peek()
        u = self.signed_number()
        if cmp_tok.text == ">=":
            expr, u = Negate(expr), -u
        try:
            pred = Predicate(expr, u)
        except ValueError as exc:
            raise StlSyntaxError(str(exc), u_tok.line, u_tok.col) from None
        if not _provably_normalized(expr):
            warnings.warn(
                f"predicate at line {tok.line} has a signal expression not "
                "provably in [-1, 1]; consider wrapping it in clamp(...)",
                stacklevel=4,
            )
        return pred

    def interval(self):
        open_tok = self.expect("[")
        lo = self.signed_number()
        self.expect(",")
        hi = self.signed_number()
        self.expect("]")
        try:
            return Interval(lo, hi)
        except ValueError as exc:
            raise StlSyntaxError(str(exc), open_tok.line, open_tok.col) from None

    def signed_number(self):
        sign = 1.0
        while self.peek().text == "-":
            self.advance()
            sign = -sign
        tok = self.advance()
        if tok.kind != "num":
            self.error(f"expected a number, found {tok.text!r}", tok)
        return sign * float(tok.text)

    # -- signal expressions ------------------------------------------------

    def sigexpr(self):
        e = self.term()
        while self.peek().text in ("+", "-"):
            op = self.advance().text
            rhs = self.term()
            e = Sum(e, rhs) if op == "+" else Difference(e, rhs)
        return e

    def term(self):
        e = self.factor()
        while self.at("*"):
            star = self.advance()
            rhs = self.factor()
            if isinstance(e, Const):
                e = Scale(e.value, rhs)
            elif isinstance(rhs, Const):
                e = Scale(rhs.value, e)
            else:
                self.error("one side of '*' must be a number", star)
        return e

    def factor(self):
        tok = self.peek()
        if tok.text == "-":
            self.advance()
            # A minus directly on a number literal is a negative constant;
            # Negate nodes print as '-(...)'.
            if self.peek().kind == "num":
                return Const(-float(self.advance().text))
            return Negate(self.factor())
        if tok.kind == "num":
            self.advance()
            return Const(float(tok.text))
        if tok.text == "norm":
            self.advance()
            self.expect("(")
            args = [self.sigexpr()]
            while self.at(","):
                self.advance()
                args.append(self.sigexpr())
            self.expect(")")
            return EuclideanNorm(tuple(args))
        if tok.text == "clamp":
            self.advance()
            self.expect("(")
            inner = self.sigexpr()
            self.expect(",")
            lo = self.signed_number()
            self.expect(",")
            hi = self.signed_number()
            close = self.expect(")")
            try:
                return ClampScale(inner, lo, hi)
            except ValueError as exc:
                raise StlSyntaxError(str(exc), close.line, close.col) from None
        if tok.kind == "name":
            if tok.text in _KEYWORDS:
                self.error(f"{tok.text!r} is a reserved word", tok)
            self.advance()
            return Channel(tok.text)
        if tok.text == "(":
            self.advance()
            e = self.sigexpr()
            self.expect(")")
            return e
        self.error(f"unexpected token {tok.text!r}", tok)


def parse_formula(text):
    """Parse formula text into an AST.

    Round-trips with pretty_print: parse_formula(pretty_print(f)) == f.
    """
    parser = _Parser(_tokenize(text))
    f = parser.formula()
    tok = parser.peek()
    if tok.kind != "end":
        parser.error(f"trailing input {tok.text!r}", tok)
    return f


def parse_signal_expr(text):
    """Parse a bare signal expression (no comparison)."""
    parser = _Parser(_tokenize(text))
    e = parser.sigexpr()
    tok = parser.peek()
    if tok.kind != "end":
        parser.error(f"trailing input {tok.text!r}", tok)
    return e


# ---------------------------------------------------------------------------
# Pretty printing

_PREC_UNTIL, _PREC_OR, _PREC_AND, _PREC_UNARY = 0, 1, 2, 3


def _fmt_num(x):
    return repr(float(x))


def _print_expr(e, parent_prec=0):
    # Expression precedence: additive 1 < multiplicative 2 < unary 3.
    if isinstance(e, Channel):
        return e.name
    if isinstance(e, Const):
        return _fmt_num(e.value)
    if isinstance(e, Negate):
        if isinstance(e.arg, Const):
            return f"-({_fmt_num(e.arg.value)})"
        return f"-{_print_expr(e.arg, 3)}"
    if isinstance(e, (Sum, Difference)):
        op = "+" if isinstance(e, Sum) else "-"
        s = f"{_print_expr(e.left, 1)} {op} {_print_expr(e.right, 2)}"
        return f"({s})" if parent_prec > 1 else s
    if isinstance(e, Scale):
        s = f"{_fmt_num(e.factor)} * {_print_expr(e.arg, 3)}"
        return f"({s})" if parent_prec > 2 else s
    if isinstance(e, EuclideanNorm):
        return "norm(" + ", ".join(_print_expr(a) for a in e.args) + ")"
    if isinstance(e, ClampScale):
        return (
            f"clamp({_print_expr(e.arg)}, {_fmt_num(e.lower)}, "
            f"{_fmt_num(e.upper)})"
        )
    raise TypeError(f"not a signal expression: {e!r}")


def _print_formula(f, parent_prec):
    if isinstance(f, TrueFormula):
        return "true"
    if isinstance(f, Predicate):
        s = f"{_print_expr(f.expr)} <= {_fmt_num(f.threshold)}"
        return f"({s})" if parent_prec >= _PREC_UNARY else s
    if isinstance(f, Not):
        return f"!{_print_formula(f.child, _PREC_UNARY)}"
    if isinstance(f, And):
        s = " & ".join(_print_formula(c, _PREC_AND) for c in f.children)
        return f"({s})" if parent_prec >= _PREC_AND else s
    if isinstance(f, Or):
        s = " | ".join(_print_formula(c, _PREC_OR) for c in f.children)
        return f"({s})" if parent_prec >= _PREC_OR else s
    if isinstance(f, Always):
        iv = f"[{_fmt_num(f.interval.lo)},{_fmt_num(f.interval.hi)}]"
        return f"alw{iv} {_print_formula(f.child, _PREC_UNARY)}"
    if isinstance(f, Eventually):
        iv = f"[{_fmt_num(f.interval.lo)},{_fmt_num(f.interval.hi)}]"
        return f"ev{iv} {_print_formula(f.child, _PREC_UNARY)}"
    if isinstance(f, Until):
        iv = f"[{_fmt_num(f.interval.lo)},{_fmt_num(f.interval.hi)}]"
        s = (
            f"{_print_formula(f.left, _PREC_OR)} until{iv} "
            f"{_print_formula(f.right, _PREC_OR)}"
        )
        return f"({s})" if parent_prec >= _PREC_OR else s
    raise TypeError(f"not a formula: {f!r}")


def pretty_print(f):
    """Render a formula AST back to the concrete syntax."""
    return _print_formula(f, _PREC_UNTIL)


# ---------------------------------------------------------------------------
# File formats


def load_formula(path):
    """Load one formula from a plain-text file; '#' starts a comment."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read()
    lines = [line.split("#", 1)[0] for line in raw.splitlines()]
    text = "\n".join(lines)
    if not text.strip():
        raise StlError(f"no formula found in {path}")
    return parse_formula(text)


def read_trace(path):
    """Read a trace from CSV (header of channel names) or JSON lines.

    CSV: dt comes from a '__dt' column or a leading '# dt=...' comment line.
    JSONL: one object per timestep; '__dt' key on any object declares dt.
    """
    path = str(path)
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read()
    stripped = raw.lstrip()
    if stripped.startswith("{"):
        return _trace_from_jsonl(raw, path)
    return _trace_from_csv(raw, path)


def _trace_from_jsonl(raw, path):
    rows = []
    for line in raw.splitlines():
        line = line.strip()
        if not line:
            continue
        rows.append(json.loads(line))
    if not rows:
        raise StlError(f"no timesteps in {path}")
    dt = None
    for row in rows:
        if "__dt" in row:
            dt = float(row["__dt"])
            break
    if dt is None:
        raise StlError(f"{path} declares no '__dt' field")
    names = [k for k in rows[0] if k != "__dt"]
    channels = {
        name: [float(row[name]) for row in rows] for name in names
    }
    return Trace(channels, dt)


def _trace_from_csv(raw, path):
    lines = [ln for ln in raw.splitlines() if ln.strip()]
    dt = None
    while lines and lines[0].startswith("#"):
        meta = lines.pop(0)[1:].strip()
        m = re.match(r"dt\s*=\s*([0-9.eE+-]+)", meta)
        if m:
            dt = float(m.group(1))
    if not lines:
        raise StlError(f"no data rows in {path}")
    header = [h.strip() for h in lines[0].split(",")]
    data = np.array(
        [[float(v) for v in ln.split(",")] for ln in lines[1:]], dtype=float
    )
    if data.ndim != 2 or data.shape[1] != len(header):
        raise StlError(f"ragged CSV in {path}")
    columns = {name: data[:, j] for j, name in enumerate(header)}
    if "__dt" in columns:
        dt = float(columns.pop("__dt")[0])
    if dt is None:
        raise StlError(f"{path} declares no dt ('__dt' column or '# dt=' line)")
    return Trace(columns, dt)


def write_trace_csv(tr, path):
    names = sorted(tr.channels)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# dt={tr.dt!r}\n")
        fh.write(",".join(names) + "\n")
        for t in range(tr.length):
            fh.write(",".join(repr(float(tr.channels[n][t])) for n in names) + "\n")
