"""Exact symbolic delay expressions over the basis ``T f F d h D``.

``T`` is per-node processing, ``f``/``F`` the short and long wired links,
``d`` the radio link, ``h`` the L2 handover and ``D`` duplicate address
detection. Expressions are trees of :class:`Linear` leaves combined with
:class:`Max`, :class:`Min`, :class:`Sum` and :class:`Diff` nodes.

Canonical form pushes sums and differences down to the leaves, using

    max(a, b) + c = max(a + c, b + c)        -(max(a, b)) = min(-a, -b)

so a canonical expression is a Max/Min tree whose leaves are Linear nodes.
Coefficients are :class:`fractions.Fraction`; floats appear only in
:func:`evaluate`.

    >>> e = parse("max(6d+8f+h+22T, 12f+4d+23T)")
    >>> canonical_form(subtract_linear(e, parse("4d+8f+18T")))
    'max(4T+2d+h, 5T+4f)'
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Union

from .errors import InvalidParameterError, UnsupportedFormError, ValidationError

SYMBOLS = ("T", "f", "F", "d", "h", "D")
_INDEX = {s: i for i, s in enumerate(SYMBOLS)}

Number = Union[int, Fraction, str]


class DelayExpr:
    """Common operator support; concrete nodes are frozen dataclasses."""

    def __add__(self, other: "DelayExpr") -> "DelayExpr":
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other: "DelayExpr") -> "DelayExpr":
        return canonicalize(Diff(self, _coerce(other)))

    def __str__(self) -> str:
        return canonical_form(self)


def _coerce(value) -> DelayExpr:
    if isinstance(value, DelayExpr):
        return value
    if isinstance(value, (int, Fraction)):
        return Linear(const=Fraction(value))
    return NotImplemented


def _frac(value: Number) -> Fraction:
    if isinstance(value, float):
        raise TypeError("coefficients must be exact (int, Fraction or str), not float")
    return Fraction(value)


@dataclass(frozen=True, eq=True)
class Linear(DelayExpr):
    """Sum of coefficient * symbol plus a constant (seconds)."""

    coeffs: tuple = (Fraction(0),) * 6
    const: Fraction = Fraction(0)

    def __post_init__(self):
        if len(self.coeffs) != len(SYMBOLS):
            raise ValidationError(f"expected {len(SYMBOLS)} coefficients, got {len(self.coeffs)}")
        object.__setattr__(self, "coeffs", tuple(_frac(c) for c in self.coeffs))
        object.__setattr__(self, "const", _frac(self.const))

    @classmethod
    def of(cls, const: Number = 0, **terms: Number) -> "Linear":
        coeffs = [Fraction(0)] * len(SYMBOLS)
        for sym, c in terms.items():
            if sym not in _INDEX:
                raise ValidationError(f"unknown delay symbol {sym!r}")
            coeffs[_INDEX[sym]] = _frac(c)
        return cls(tuple(coeffs), _frac(const))

    def coefficient(self, symbol: str) -> Fraction:
        return self.coeffs[_INDEX[symbol]]

    @property
    def is_zero(self) -> bool:
        return self.const == 0 and not any(self.coeffs)

    def _merge(self, other: "Linear", sign: int = 1) -> "Linear":
        return Linear(
            tuple(a + sign * b for a, b in zip(self.coeffs, other.coeffs)),
            self.const + sign * other.const,
        )

    def _neg(self) -> "Linear":
        return Linear(tuple(-c for c in self.coeffs), -self.const)


ZERO = Linear()


def _children(children: Iterable[DelayExpr]) -> tuple:
    kids = tuple(children)
    if not kids:
        raise ValidationError("max/min/sum nodes need at least one child")
    for k in kids:
        if not isinstance(k, DelayExpr):
            raise ValidationError(f"not a delay expression: {k!r}")
    return kids


@dataclass(frozen=True)
class Max(DelayExpr):
    children: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "children", _children(self.children))


@dataclass(frozen=True)
class Min(DelayExpr):
    children: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "children", _children(self.children))


@dataclass(frozen=True)
class Sum(DelayExpr):
    children: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "children", _children(self.children))


@dataclass(frozen=True)
class Diff(DelayExpr):
    left: DelayExpr
    right: DelayExpr


# -- canonicalization -------------------------------------------------------


def _extremum(kind, children) -> DelayExpr:
    flat = []
    for c in children:
        parts = c.children if isinstance(c, kind) else (c,)
        for p in parts:
            if p not in flat:
                flat.append(p)
    return flat[0] if len(flat) == 1 else kind(tuple(flat))


def _negate(e: DelayExpr) -> DelayExpr:
    if isinstance(e, Linear):
        return e._neg()
    if isinstance(e, Max):
        return _extremum(Min, [_negate(c) for c in e.children])
    if isinstance(e, Min):
        return _extremum(Max, [_negate(c) for c in e.children])
    raise TypeError(f"not canonical: {e!r}")


def _add2(a: DelayExpr, b: DelayExpr) -> DelayExpr:
    if isinstance(a, Linear) and isinstance(b, Linear):
        return a._merge(b)
    if isinstance(a, (Max, Min)):
        return _extremum(type(a), [_add2(c, b) for c in a.children])
    return _extremum(type(b), [_add2(a, c) for c in b.children])


def canonicalize(expr: DelayExpr) -> DelayExpr:
    """Return the canonical Max/Min-over-Linear form of ``expr``."""
    if isinstance(expr, Linear):
        return expr
    if isinstance(expr, (Max, Min)):
        return _extremum(type(expr), [canonicalize(c) for c in expr.children])
    if isinstance(expr, Sum):
        out: DelayExpr = ZERO
        for c in expr.children:
            out = _add2(out, canonicalize(c))
        return out
    if isinstance(expr, Diff):
        return _add2(canonicalize(expr.left), _negate(canonicalize(expr.right)))
    raise ValidationError(f"not a delay expression: {expr!r}")


def add(a: DelayExpr, b: DelayExpr) -> DelayExpr:
    return canonicalize(Sum((a, b)))


def subtract_linear(later: DelayExpr, earlier: DelayExpr) -> DelayExpr:
    """``later - earlier`` where ``earlier`` reduces to a Linear node.

    Subtraction distributes through max/min children of ``later``.
    """
    earlier = canonicalize(earlier)
    if not isinstance(earlier, Linear):
        raise UnsupportedFormError(
            f"subtrahend must be linear, got {canonical_form(earlier)!r}"
        )
    return canonicalize(Diff(later, earlier))


def equivalent(a: DelayExpr, b: DelayExpr) -> bool:
    """Structural equality of canonical forms, ignoring max/min child order."""
    a, b = canonicalize(a), canonicalize(b)
    if isinstance(a, Linear) or isinstance(b, Linear):
        return a == b
    if type(a) is not type(b) or len(a.children) != len(b.children):
        return False
    remaining = list(b.children)
    for child in a.children:
        for i, other in enumerate(remaining):
            if equivalent(child, other):
                del remaining[i]
                break
        else:
            return False
    return True


# -- evaluation -------------------------------------------------------------


def _values(params) -> tuple:
    if hasattr(params, "delays"):
        params = params.delays()
    try:
        vals = tuple(float(params[s]) for s in SYMBOLS)
    except KeyError as exc:
        raise InvalidParameterError(f"missing value for delay symbol {exc.args[0]!r}") from None
    for s, v in zip(SYMBOLS, vals):
        if not math.isfinite(v):
            raise InvalidParameterError(f"delay symbol {s} is not finite: {v}")
    return vals


def _eval(e: DelayExpr, vals: tuple) -> float:
    if isinstance(e, Linear):
        total = float(e.const)
        for c, v in zip(e.coeffs, vals):
            if c:
                total += float(c) * v
        return total
    if isinstance(e, Max):
        return max(_eval(c, vals) for c in e.children)
    if isinstance(e, Min):
        return min(_eval(c, vals) for c in e.children)
    if isinstance(e, Sum):
        return sum(_eval(c, vals) for c in e.children)
    if isinstance(e, Diff):
        return _eval(e.left, vals) - _eval(e.right, vals)
    raise ValidationError(f"not a delay expression: {e!r}")


def evaluate(expr: DelayExpr, params) -> float:
    """Evaluate ``expr`` in seconds.

    ``params`` is a :class:`~handover.scenario.ScenarioParams` or any mapping
    from symbol name to seconds.
    """
    return _eval(expr, _values(params))


# -- text form --------------------------------------------------------------


def _coef_text(c: Fraction) -> str:
    if c.denominator == 1:
        return "" if abs(c) == 1 else str(abs(c.numerator))
    return f"{abs(c)}*"


def _linear_text(e: Linear) -> str:
    parts = []
    for sym, c in zip(SYMBOLS, e.coeffs):
        if c:
            parts.append(("-" if c < 0 else "+") + _coef_text(c) + sym)
    if e.const:
        parts.append(("-" if e.const < 0 else "+") + str(abs(e.const)))
    if not parts:
        return "0"
    text = "".join(parts)
    return text[1:] if text[0] == "+" else text


def _text(e: DelayExpr) -> str:
    if isinstance(e, Linear):
        return _linear_text(e)
    name = "max" if isinstance(e, Max) else "min"
    return f"{name}({', '.join(_text(c) for c in e.children)})"


def canonical_form(expr: DelayExpr) -> str:
    """Deterministic text: symbols in order T, f, F, d, h, D; unit coefficients elided."""
    return _text(canonicalize(expr))


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?(?:/\d+)?)|(?P<fn>max|min)|(?P<sym>[TfFdhD])|(?P<op>[-+*(),]))"
)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = []
        pos = 0
        stripped = text.rstrip()
        while pos < len(stripped):
            m = _TOKEN.match(stripped, pos)
            if not m:
                raise ValidationError(f"cannot parse delay expression {text!r} at offset {pos}")
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None, len(self.text))

    def take(self, value=None):
        tok = self.peek()
        if tok[0] is None or (value is not None and tok[1] != value):
            raise ValidationError(
                f"expected {value or 'token'!r} in delay expression {self.text!r} at offset {tok[2]}"
            )
        self.i += 1
        return tok

    def expr(self) -> DelayExpr:
        sign = 1
        if self.peek()[1] in ("+", "-"):
            sign = -1 if self.take()[1] == "-" else 1
        terms = [self.term() if sign > 0 else Diff(ZERO, self.term())]
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            t = self.term()
            terms.append(t if op == "+" else Diff(ZERO, t))
        return terms[0] if len(terms) == 1 else Sum(tuple(terms))

    def term(self) -> DelayExpr:
        kind, value, _ = self.peek()
        if kind == "num":
            self.take()
            coef = Fraction(value)
            if self.peek()[1] == "*":
                self.take()
            if self.peek()[0] == "sym":
                return Linear.of(**{self.take()[1]: coef})
            return Linear.of(const=coef)
        if kind == "sym":
            return Linear.of(**{self.take()[1]: 1})
        if kind == "fn":
            self.take()
            self.take("(")
            args = [self.expr()]
            while self.peek()[1] == ",":
                self.take()
                args.append(self.expr())
            self.take(")")
            return (Max if value == "max" else Min)(tuple(args))
        if value == "(":
            self.take()
            inner = self.expr()
            self.take(")")
            return inner
        self.take("term")  # raises

    def parse(self) -> DelayExpr:
        e = self.expr()
        if self.i != len(self.tokens):
            raise ValidationError(
                f"trailing input in delay expression {self.text!r} at offset {self.peek()[2]}"
            )
        return canonicalize(e)


def parse(text: str) -> DelayExpr:
    """Parse compact delay notation such as ``"max(2d+h+6T, 4f+7T+d)"``.

    Implicit multiplication (``35T``), optional ``*``, integer or fractional
    coefficients, ``max``/``min`` and parentheses are supported.
    """
    return _Parser(text).parse()


def as_mapping(expr: Linear) -> Mapping[str, Fraction]:
    return {s: c for s, c in zip(SYMBOLS, expr.coeffs) if c}


@dataclass(frozen=True)
class ScenarioParams:
    """Numeric values (seconds) for the six delay symbols, plus throughput."""

    T_s: float
    f_s: float
    F_s: float
    d_s: float
    h_s: float = 0.0
    D_s: float = 1.0
    throughput_pkt_per_s: float = 0.0

    def __post_init__(self):
        for name in ("T_s", "f_s", "F_s", "d_s", "h_s", "D_s", "throughput_pkt_per_s"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidParameterError(f"{name} is not finite: {value}")
            if value < 0:
                raise InvalidParameterError(f"{name} must be non-negative, got {value}")
            object.__setattr__(self, name, value)

    def delays(self) -> dict:
        return {"T": self.T_s, "f": self.f_s, "F": self.F_s,
                "d": self.d_s, "h": self.h_s, "D": self.D_s}

    def replace(self, **changes) -> "ScenarioParams":
        from dataclasses import replace
        return replace(self, **changes)
