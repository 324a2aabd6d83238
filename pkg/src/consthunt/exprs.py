"""Exact constant expressions: AST, evaluation, complexity metrics, text form.

The AST is deliberately small: integers, rationals, named constants, unary
function applications, the five infix operators, and unary negation.  All
nodes are frozen dataclasses, so expressions hash, compare and share freely.

Two complexity metrics are defined here.  ``length_complexity`` counts
occurrences of rational numbers, named constants, functions and operators.
``entropy10`` sums base-ten logs of the integer magnitudes plus 1.0 per
constant/function/operator occurrence; its unit is decimal digits, making it
directly comparable with digit-agreement scores.

Convention for negative literals: an embedded sign counts like the unary
negation operator in both metrics (so ``Integer(-2)`` and ``Neg(Integer(2))``
score identically), and ``simplify`` folds ``Neg`` into literals.  Without
this, simplification could not both normalize signs and guarantee it never
increases Length.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator

import mpmath as mp

from .numcore import GUARD_DIGITS, BigFloat

OPERATORS = ("+", "-", "*", "/", "^")


class DomainError(ArithmeticError):
    """Evaluation left the real domain, overflowed, or divided by zero."""


class EvaluationError(ArithmeticError):
    """Result failed to stabilize under precision escalation."""


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class BudgetExhausted(RuntimeError):
    """Enumeration exceeded its expression budget."""


# ---------------------------------------------------------------------------
# AST


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Integer(Expr):
    n: int


@dataclass(frozen=True)
class Rational(Expr):
    num: int
    den: int

    def __post_init__(self):
        if self.den <= 0:
            raise ValueError("denominator must be positive (normalize before building)")
        if math.gcd(abs(self.num), self.den) != 1:
            raise ValueError("rational must be stored reduced")


@dataclass(frozen=True)
class Const(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Apply(Expr):
    fn: str
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def __post_init__(self):
        if self.op not in OPERATORS:
            raise ValueError(f"unknown operator {self.op!r}")


def apply1(fn: str, arg: Expr) -> Apply:
    return Apply(fn, (arg,))


def rational(num: int, den: int = 1) -> Expr:
    q = Fraction(num, den)
    if q.denominator == 1:
        return Integer(int(q))
    return Rational(int(q.numerator), int(q.denominator))


def from_fraction(q: Fraction) -> Expr:
    return rational(q.numerator, q.denominator)


def rational_times(expr: Expr, q: Fraction) -> Expr:
    """Aesthetic rational multiple: (n*c)/d rather than (n/d)*c."""
    if q == 0:
        return Integer(0)
    if isinstance(expr, Integer) and expr.n == 1:
        return from_fraction(q)
    out = expr
    if abs(q.numerator) != 1:
        out = BinOp("*", Integer(abs(q.numerator)), out)
    if q.denominator != 1:
        out = BinOp("/", out, Integer(q.denominator))
    return Neg(out) if q < 0 else out


def rational_value(e: Expr) -> Fraction | None:
    """Exact rational value if the node is a (possibly negated) literal."""
    if isinstance(e, Integer):
        return Fraction(e.n)
    if isinstance(e, Rational):
        return Fraction(e.num, e.den)
    if isinstance(e, Neg):
        inner = rational_value(e.arg)
        return -inner if inner is not None else None
    return None


def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, Neg):
        return (e.arg,)
    if isinstance(e, Apply):
        return e.args
    if isinstance(e, BinOp):
        return (e.left, e.right)
    return ()


def rebuild(e: Expr, kids: tuple[Expr, ...]) -> Expr:
    if isinstance(e, Neg):
        return Neg(kids[0])
    if isinstance(e, Apply):
        return Apply(e.fn, kids)
    if isinstance(e, BinOp):
        return BinOp(e.op, kids[0], kids[1])
    return e


# ---------------------------------------------------------------------------
# Catalog


@dataclass(frozen=True)
class InverseSpec:
    """How to undo a function on its declared invertible branch."""

    numeric: Callable[[mp.mpf], mp.mpf]
    build: Callable[[Expr], Expr]
    in_range: Callable[[mp.mpf], bool]


@dataclass(frozen=True)
class FunctionDef:
    name: str
    evaluator: Callable[[mp.mpf], mp.mpf]
    domain: Callable[[mp.mpf], bool] | None = None
    inverse: InverseSpec | None = None


@dataclass(frozen=True)
class ConstantDef:
    name: str
    evaluator: Callable[[], mp.mpf]
    # structural complexity carried by the symbol; plain named constants
    # cost 1, injected algebraic roots carry their polynomial's weight
    entropy10: float = 1.0
    length: int = 1


class Catalog:
    """Immutable registry of constants, functions and operators."""

    def __init__(self, constants: list[ConstantDef], functions: list[FunctionDef]):
        self.constants = {c.name: c for c in constants}
        self.functions = {f.name: f for f in functions}
        self.operators = OPERATORS

    def extended(self, *, constants: list[ConstantDef] = (), functions: list[FunctionDef] = ()) -> "Catalog":
        return Catalog(list(self.constants.values()) + list(constants),
                       list(self.functions.values()) + list(functions))


def _inv(numeric, build, in_range) -> InverseSpec:
    return InverseSpec(numeric=numeric, build=build, in_range=in_range)


def _half_pi():
    return mp.pi / 2


_FUNCTIONS = [
    FunctionDef("sqrt", mp.sqrt, domain=lambda x: x >= 0,
                inverse=_inv(lambda y: y * y, lambda e: BinOp("^", e, Integer(2)),
                             lambda y: y >= 0)),
    FunctionDef("exp", mp.exp,
                inverse=_inv(mp.ln, lambda e: apply1("ln", e), lambda y: y > 0)),
    FunctionDef("ln", mp.ln, domain=lambda x: x > 0,
                inverse=_inv(mp.exp, lambda e: apply1("exp", e), lambda y: True)),
    FunctionDef("sin", mp.sin,
                inverse=_inv(mp.asin, lambda e: apply1("arcsin", e), lambda y: abs(y) <= 1)),
    FunctionDef("cos", mp.cos,
                inverse=_inv(mp.acos, lambda e: apply1("arccos", e), lambda y: abs(y) <= 1)),
    FunctionDef("tan", mp.tan,
                inverse=_inv(mp.atan, lambda e: apply1("arctan", e), lambda y: True)),
    FunctionDef("arcsin", mp.asin, domain=lambda x: abs(x) <= 1,
                inverse=_inv(mp.sin, lambda e: apply1("sin", e), lambda y: abs(y) <= _half_pi())),
    FunctionDef("arccos", mp.acos, domain=lambda x: abs(x) <= 1,
                inverse=_inv(mp.cos, lambda e: apply1("cos", e), lambda y: 0 <= y <= mp.pi)),
    FunctionDef("arctan", mp.atan,
                inverse=_inv(mp.tan, lambda e: apply1("tan", e), lambda y: abs(y) < _half_pi())),
    FunctionDef("sinh", mp.sinh,
                inverse=_inv(mp.asinh, lambda e: apply1("arcsinh", e), lambda y: True)),
    FunctionDef("cosh", mp.cosh,
                inverse=_inv(mp.acosh, lambda e: apply1("arccosh", e), lambda y: y >= 1)),
    FunctionDef("tanh", mp.tanh,
                inverse=_inv(mp.atanh, lambda e: apply1("arctanh", e), lambda y: abs(y) < 1)),
    FunctionDef("arcsinh", mp.asinh,
                inverse=_inv(mp.sinh, lambda e: apply1("sinh", e), lambda y: True)),
    FunctionDef("arccosh", mp.acosh, domain=lambda x: x >= 1,
                inverse=_inv(mp.cosh, lambda e: apply1("cosh", e), lambda y: y >= 0)),
    FunctionDef("arctanh", mp.atanh, domain=lambda x: abs(x) < 1,
                inverse=_inv(mp.tanh, lambda e: apply1("tanh", e), lambda y: True)),
    FunctionDef("sinpi", mp.sinpi,
                inverse=_inv(lambda y: mp.asin(y) / mp.pi,
                             lambda e: BinOp("/", apply1("arcsin", e), Const("pi")),
                             lambda y: abs(y) <= 1)),
    FunctionDef("cospi", mp.cospi,
                inverse=_inv(lambda y: mp.acos(y) / mp.pi,
                             lambda e: BinOp("/", apply1("arccos", e), Const("pi")),
                             lambda y: abs(y) <= 1)),
    FunctionDef("tanpi", lambda x: mp.tan(mp.pi * x),
                inverse=_inv(lambda y: mp.atan(y) / mp.pi,
                             lambda e: BinOp("/", apply1("arctan", e), Const("pi")),
                             lambda y: True)),
]

_CONSTANTS = [
    ConstantDef("pi", lambda: +mp.pi),
    ConstantDef("e", lambda: +mp.e),
    ConstantDef("gamma", lambda: +mp.euler),
    ConstantDef("phi", lambda: +mp.phi),
    ConstantDef("catalan", lambda: +mp.catalan),
    ConstantDef("ln2", lambda: +mp.ln2),
    ConstantDef("ln3", lambda: mp.ln(3)),
    ConstantDef("zeta3", lambda: +mp.apery),
    ConstantDef("sqrt2", lambda: mp.sqrt(2)),
    ConstantDef("sqrt3", lambda: mp.sqrt(3)),
    ConstantDef("ei1", lambda: mp.ei(1)),
    ConstantDef("w1", lambda: +mp.lambertw(1)),
]

DEFAULT_CATALOG = Catalog(_CONSTANTS, _FUNCTIONS)

# Magnitudes beyond this decimal exponent are treated as overflow/underflow.
MAX_EXP10 = 100_000


# ---------------------------------------------------------------------------
# Evaluation


def _check_magnitude(v: mp.mpf) -> mp.mpf:
    if not mp.isfinite(v):
        raise DomainError("non-finite value")
    if isinstance(v, mp.mpc):
        raise DomainError("non-real value")
    if v != 0 and abs(mp.mag(v)) > MAX_EXP10 * 3.33:
        raise DomainError("magnitude beyond exponent bounds")
    return v


def eval_raw(e: Expr, catalog: Catalog, bindings: dict | None = None) -> mp.mpf:
    """Evaluate at the *current* mpmath precision, no escalation."""
    if isinstance(e, Integer):
        return mp.mpf(e.n)
    if isinstance(e, Rational):
        return mp.mpf(e.num) / e.den
    if isinstance(e, Const):
        if bindings and e.name in bindings:
            b = bindings[e.name]
            return _check_magnitude(b() if callable(b) else mp.mpf(b))
        cdef = catalog.constants.get(e.name)
        if cdef is None:
            raise DomainError(f"unknown constant {e.name!r}")
        return _check_magnitude(cdef.evaluator())
    if isinstance(e, Neg):
        return -eval_raw(e.arg, catalog, bindings)
    if isinstance(e, Apply):
        fdef = catalog.functions.get(e.fn)
        if fdef is None:
            raise DomainError(f"unknown function {e.fn!r}")
        arg = eval_raw(e.args[0], catalog, bindings)
        if fdef.domain is not None and not fdef.domain(arg):
            raise DomainError(f"{e.fn} domain error")
        return _check_magnitude(fdef.evaluator(arg))
    if isinstance(e, BinOp):
        a = eval_raw(e.left, catalog, bindings)
        b = eval_raw(e.right, catalog, bindings)
        return apply_op(e.op, a, b)
    raise TypeError(f"not an expression: {e!r}")


def apply_op(op: str, a: mp.mpf, b: mp.mpf) -> mp.mpf:
    """One operator application at current precision, with domain guards."""
    if op == "+":
        return _check_magnitude(a + b)
    if op == "-":
        return _check_magnitude(a - b)
    if op == "*":
        return _check_magnitude(a * b)
    if op == "/":
        if b == 0:
            raise DomainError("division by zero")
        return _check_magnitude(a / b)
    if op == "^":
        return _check_magnitude(_pow(a, b))
    raise DomainError(f"unknown operator {op!r}")


def _pow(a: mp.mpf, b: mp.mpf) -> mp.mpf:
    if a == 0:
        if b <= 0:
            raise DomainError("0^0 or 0^negative")
        return mp.mpf(0)
    if a < 0:
        if mp.isint(b):
            return mp.power(a, int(b))
        raise DomainError("non-integer power of a negative base")
    res = mp.power(a, b)
    if isinstance(res, mp.mpc):
        raise DomainError("non-real power")
    return res


def evaluate(e: Expr, digits: int, catalog: Catalog | None = None,
             bindings: dict | None = None) -> BigFloat:
    """Evaluate correct to within one unit in the ``digits``-th significant digit.

    Internal precision escalates until two evaluations ten digits apart agree
    to ``digits + 2``; severe cancellation (or an exact zero that is not
    structurally exact) raises EvaluationError instead of returning garbage.
    """
    catalog = catalog or DEFAULT_CATALOG
    extra = 10
    while extra <= 170:
        with mp.workdps(digits + extra):
            v1 = eval_raw(e, catalog, bindings)
        with mp.workdps(digits + extra + 10):
            v2 = eval_raw(e, catalog, bindings)
            if v1 == v2 or (v2 != 0 and abs(v1 - v2) <= abs(v2) * mp.mpf(10) ** (-(digits + 2))):
                with mp.workdps(digits + GUARD_DIGITS):
                    value = +v2
                return BigFloat(value=value, trusted_digits=digits,
                                working_digits=digits + GUARD_DIGITS)
        extra *= 2
    raise EvaluationError("value failed to stabilize under precision escalation")


# ---------------------------------------------------------------------------
# Complexity metrics


def length_complexity(e: Expr, catalog: Catalog | None = None) -> int:
    if isinstance(e, Integer):
        return 1 + (1 if e.n < 0 else 0)
    if isinstance(e, Rational):
        return 1 + (1 if e.num < 0 else 0)
    if isinstance(e, Const):
        if catalog is not None and e.name in catalog.constants:
            return catalog.constants[e.name].length
        return 1
    return 1 + sum(length_complexity(c, catalog) for c in children(e))


def _log_int(k: int) -> float:
    k = abs(k)
    return math.log10(k) if k > 1 else 0.0


def entropy10(e: Expr, catalog: Catalog | None = None) -> float:
    if isinstance(e, Integer):
        return _log_int(e.n) + (1.0 if e.n < 0 else 0.0)
    if isinstance(e, Rational):
        return _log_int(e.num) + _log_int(e.den) + (1.0 if e.num < 0 else 0.0)
    if isinstance(e, Const):
        if catalog is not None and e.name in catalog.constants:
            return catalog.constants[e.name].entropy10
        return 1.0
    return 1.0 + sum(entropy10(c, catalog) for c in children(e))


# ---------------------------------------------------------------------------
# Simplification

# f(g(x)) -> x for every x where g is defined
_ALWAYS_CANCEL = {
    ("exp", "ln"), ("ln", "exp"),
    ("sinh", "arcsinh"), ("arcsinh", "sinh"),
    ("tanh", "arctanh"), ("arctanh", "tanh"),
    ("sin", "arcsin"), ("cos", "arccos"), ("tan", "arctan"),
    ("cosh", "arccosh"),
}

# f(g(x)) -> x only when x lies inside f's post-image branch; checked numerically
_BRANCH_CANCEL = {
    ("arcsin", "sin"): lambda v: abs(v) < mp.pi / 2 * (1 - mp.mpf("1e-9")),
    ("arccos", "cos"): lambda v: mp.mpf("1e-9") < v < mp.pi * (1 - mp.mpf("1e-9")),
    ("arctan", "tan"): lambda v: abs(v) < mp.pi / 2 * (1 - mp.mpf("1e-9")),
    ("arccosh", "cosh"): lambda v: v > mp.mpf("1e-9"),
}

_FOLD_POW_MAX_EXP = 128
_FOLD_POW_MAX_DIGITS = 200


def _fold_rational(op: str, a: Fraction, b: Fraction) -> Fraction | None:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return a / b if b != 0 else None
    # ^: only exact integer exponents of bounded size fold
    if b.denominator != 1 or abs(b) > _FOLD_POW_MAX_EXP:
        return None
    k = int(b)
    if a == 0:
        return Fraction(0) if k > 0 else None
    size = max(len(str(a.numerator)), len(str(a.denominator))) * abs(k)
    if size > _FOLD_POW_MAX_DIGITS:
        return None
    return a ** k


def _is_nonzero_literal(e: Expr) -> bool:
    v = rational_value(e)
    if v is not None:
        return v != 0
    return isinstance(e, Const)  # catalog constants are all nonzero


def _additive_parts(e: Expr) -> tuple[Fraction | None, Expr | None, int]:
    """Decompose as q + sign*x where q is rational; x is None for literals."""
    v = rational_value(e)
    if v is not None:
        return (v, None, 1)
    if isinstance(e, BinOp) and e.op in "+-":
        lv, rv = rational_value(e.left), rational_value(e.right)
        if lv is not None and rv is None:
            return (lv, e.right, 1 if e.op == "+" else -1)
        if rv is not None and lv is None:
            return (rv if e.op == "+" else -rv, e.left, 1)
    return (None, e, 1)


def _merge_additive(op: str, l: Expr, r: Expr) -> Expr | None:
    """Fold the rational parts of a sum like 9 + (pi - 3) -> 6 + pi."""
    qa, xa, sa = _additive_parts(l)
    qb, xb, sb = _additive_parts(r)
    if qa is None or qb is None:
        return None
    if op == "-":
        qb, sb = -qb, -sb
    if xa is None and xb is None:
        return None  # plain rational fold handles this
    if xa is not None and xb is not None:
        return None  # two non-literal parts; nothing shrinks
    x, s = (xa, sa) if xa is not None else (xb, sb)
    q = qa + qb
    if q == 0:
        return x if s > 0 else Neg(x)
    lit = from_fraction(q)
    return BinOp("+", lit, x) if s > 0 else BinOp("-", lit, x)


def _simplify_root(e: Expr, catalog: Catalog) -> Expr:
    """One rewrite pass at the root; children are assumed already simplified."""
    if isinstance(e, Neg):
        a = e.arg
        if isinstance(a, Neg):
            return a.arg
        if isinstance(a, Integer):
            return Integer(-a.n)
        if isinstance(a, Rational):
            return Rational(-a.num, a.den)
        return e
    if isinstance(e, Apply):
        inner = e.args[0]
        if isinstance(inner, Apply):
            pair = (e.fn, inner.fn)
            if pair in _ALWAYS_CANCEL:
                return inner.args[0]
            check = _BRANCH_CANCEL.get(pair)
            if check is not None:
                try:
                    with mp.workdps(30):
                        if check(eval_raw(inner.args[0], catalog)):
                            return inner.args[0]
                except (DomainError, EvaluationError):
                    pass
        return e
    if not isinstance(e, BinOp):
        return e

    l, r = e.left, e.right
    lv, rv = rational_value(l), rational_value(r)
    if lv is not None and rv is not None:
        folded = _fold_rational(e.op, lv, rv)
        if folded is not None:
            return from_fraction(folded)
    if e.op == "+":
        if rv == 0:
            return l
        if lv == 0:
            return r
        # sign absorption keeps sums in subtraction form
        if isinstance(r, Neg):
            return BinOp("-", l, r.arg)
        if rv is not None and rv < 0:
            return BinOp("-", l, from_fraction(-rv))
        if isinstance(l, Neg):
            return BinOp("-", r, l.arg)
        if lv is not None and lv < 0:
            return BinOp("-", r, from_fraction(-lv))
        merged = _merge_additive("+", l, r)
        if merged is not None:
            return merged
    elif e.op == "-":
        if rv == 0:
            return l
        if isinstance(r, Neg):
            return BinOp("+", l, r.arg)
        if rv is not None and rv < 0:
            return BinOp("+", l, from_fraction(-rv))
        if lv == 0:
            return Neg(r) if not isinstance(r, (Integer, Rational, Neg)) else _simplify_root(Neg(r), catalog)
        if l == r:
            return Integer(0)
        merged = _merge_additive("-", l, r)
        if merged is not None:
            return merged
    elif e.op == "*":
        if rv == 1:
            return l
        if lv == 1:
            return r
        if (rv == 0 and _is_nonzero_literal(l)) or (lv == 0 and _is_nonzero_literal(r)):
            return Integer(0)
    elif e.op == "/":
        if rv == 1:
            return l
        if lv == 0 and _is_nonzero_literal(r):
            return Integer(0)
    elif e.op == "^":
        if rv == 1:
            return l
        if rv == 0 and _is_nonzero_literal(l):
            return Integer(1)
        if lv == 1:
            return Integer(1)
        if rv == -1:
            return BinOp("/", Integer(1), l)
        # sqrt(x)^2 -> x (sqrt defined means x >= 0)
        if rv == 2 and isinstance(l, Apply) and l.fn == "sqrt":
            return l.args[0]
    return e


def simplify_shallow(e: Expr, catalog: Catalog | None = None) -> Expr:
    """Root-level normalization for nodes whose children are already normal."""
    catalog = catalog or DEFAULT_CATALOG
    while True:
        out = _simplify_root(e, catalog)
        if out == e:
            return out
        e = out


def simplify(e: Expr, catalog: Catalog | None = None) -> Expr:
    """Value-preserving normalization; never increases length_complexity."""
    catalog = catalog or DEFAULT_CATALOG
    kids = children(e)
    if kids:
        e = rebuild(e, tuple(simplify(c, catalog) for c in kids))
    return simplify_shallow(e, catalog)


# ---------------------------------------------------------------------------
# Canonical text form

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _node_prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        if e.op in "+-":
            return _PREC_ADD
        if e.op in "*/":
            return _PREC_MUL
        return _PREC_POW
    if isinstance(e, Neg):
        return _PREC_NEG
    if isinstance(e, Integer):
        return _PREC_NEG if e.n < 0 else _PREC_ATOM
    if isinstance(e, Rational):
        return _PREC_NEG if e.num < 0 else _PREC_MUL
    return _PREC_ATOM


def to_text(e: Expr) -> str:
    return _render(e, 0)


def _render(e: Expr, min_prec: int) -> str:
    prec = _node_prec(e)
    if isinstance(e, Integer):
        text = str(e.n)
    elif isinstance(e, Rational):
        text = f"{e.num}/{e.den}"
    elif isinstance(e, Const):
        text = e.name
    elif isinstance(e, Neg):
        text = "-" + _render(e.arg, _PREC_NEG + 1)
    elif isinstance(e, Apply):
        text = f"{e.fn}({', '.join(_render(a, 0) for a in e.args)})"
    elif isinstance(e, BinOp):
        if e.op == "^":
            # right-associative; unary minus binds looser than ^
            text = _render(e.left, _PREC_ATOM) + "^" + _render(e.right, _PREC_POW)
        else:
            text = (_render(e.left, prec) + e.op + _render(e.right, prec + 1))
    else:
        raise TypeError(f"not an expression: {e!r}")
    return f"({text})" if prec < min_prec else text


# -- parser --

_TOKEN_CHARS = set("+-*/^(),")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == ".":
                raise ParseError("decimal literals are not exact expressions", i)
            tokens.append(("int", text[i:j], i))
            i = j
        elif ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("name", text[i:j], i))
            i = j
        elif ch in _TOKEN_CHARS:
            tokens.append(("op", ch, i))
            i += 1
        else:
            raise ParseError(f"unexpected character {ch!r}", i)
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, tokens, catalog: Catalog, extra_names: tuple[str, ...]):
        self.tokens = tokens
        self.pos = 0
        self.catalog = catalog
        self.extra_names = set(extra_names)

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, value: str):
        kind, text, at = self.take()
        if kind != "op" or text != value:
            raise ParseError(f"expected {value!r}", at)

    def parse(self) -> Expr:
        e = self.parse_sum()
        kind, text, at = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {text!r}", at)
        return e

    def parse_sum(self) -> Expr:
        e = self.parse_term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.take()
                e = BinOp(text, e, self.parse_term())
            else:
                return e

    def parse_term(self) -> Expr:
        e = self.parse_unary()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.take()
                e = BinOp(text, e, self.parse_unary())
            else:
                return e

    def parse_unary(self) -> Expr:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.take()
            inner = self.parse_unary()
            if isinstance(inner, Integer):
                return Integer(-inner.n)
            if isinstance(inner, Rational):
                return Rational(-inner.num, inner.den)
            return Neg(inner)
        return self.parse_power()

    def parse_power(self) -> Expr:
        base = self.parse_atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.take()
            return BinOp("^", base, self.parse_unary())
        return base

    def parse_atom(self) -> Expr:
        kind, text, at = self.take()
        if kind == "int":
            return Integer(int(text))
        if kind == "name":
            k2, t2, _ = self.peek()
            if k2 == "op" and t2 == "(":
                if text not in self.catalog.functions:
                    raise ParseError(f"unknown function {text!r}", at)
                self.take()
                args = [self.parse_sum()]
                while True:
                    k3, t3, _ = self.peek()
                    if k3 == "op" and t3 == ",":
                        self.take()
                        args.append(self.parse_sum())
                    else:
                        break
                self.expect(")")
                return Apply(text, tuple(args))
            if text in self.catalog.constants or text in self.extra_names:
                return Const(text)
            raise ParseError(f"unknown constant {text!r}", at)
        if kind == "op" and text == "(":
            e = self.parse_sum()
            self.expect(")")
            return e
        raise ParseError(f"unexpected token {text!r}", at)


def parse_text(text: str, catalog: Catalog | None = None,
               extra_names: tuple[str, ...] = ()) -> Expr:
    catalog = catalog or DEFAULT_CATALOG
    return _Parser(_tokenize(text), catalog, extra_names).parse()


# ---------------------------------------------------------------------------
# Enumeration and random sampling


@dataclass(frozen=True)
class CatalogSubset:
    """The building blocks a search or enumeration may combine."""

    atoms: tuple[Expr, ...]
    functions: tuple[str, ...] = ()
    operators: tuple[str, ...] = ("+", "-", "*", "/", "^")
    catalog: Catalog = field(default_factory=lambda: DEFAULT_CATALOG)


class Enumerator:
    """Generates all simplify-normal expressions of each exact Length.

    Raw trees are built bottom-up from already-normal children; any candidate
    whose normal form has a different Length (i.e. it simplifies away) is
    dropped, and duplicates of an already-produced normal form are dropped.
    """

    def __init__(self, subset: CatalogSubset, max_expressions: int | None = None):
        self.subset = subset
        self.max_expressions = max_expressions
        self._levels: dict[int, list[Expr]] = {}
        self._total = 0

    def level(self, complexity: int) -> list[Expr]:
        if complexity in self._levels:
            return self._levels[complexity]
        catalog = self.subset.catalog
        seen: set[str] = set()
        out: list[Expr] = []
        for lower in range(1, complexity):
            for prior in self.level(lower):
                seen.add(to_text(prior))

        def emit(raw: Expr):
            norm = simplify_shallow(raw, catalog)
            if length_complexity(norm, catalog) != complexity:
                return
            text = to_text(norm)
            if text in seen:
                return
            seen.add(text)
            out.append(norm)
            self._total += 1
            if self.max_expressions is not None and self._total > self.max_expressions:
                raise BudgetExhausted(f"more than {self.max_expressions} expressions")

        for atom in self.subset.atoms:
            if length_complexity(atom, catalog) == complexity:
                emit(atom)
        if "neg" in self.subset.operators and complexity >= 2:
            for child in self.level(complexity - 1):
                emit(Neg(child))
        for fn in self.subset.functions:
            if complexity >= 2:
                for child in self.level(complexity - 1):
                    emit(Apply(fn, (child,)))
        for op in self.subset.operators:
            if op == "neg":
                continue
            for left_size in range(1, complexity - 1):
                right_size = complexity - 1 - left_size
                for left in self.level(left_size):
                    for right in self.level(right_size):
                        emit(BinOp(op, left, right))
        self._levels[complexity] = out
        return out


def enumerate_expressions(subset: CatalogSubset, target_complexity: int,
                          max_expressions: int | None = None) -> Iterator[Expr]:
    """All normal-form expressions of exactly the given Length, deduplicated.

    Deterministic order: atoms, negations, function applications, then
    operator combinations by left-size.  Raises BudgetExhausted when the
    expression budget is exceeded.
    """
    yield from Enumerator(subset, max_expressions).level(target_complexity)


def random_expression(subset: CatalogSubset, complexity: int, seed: int,
                      max_expressions: int | None = 2_000_000) -> Expr:
    """Uniform sample from the enumeration stream at the given complexity."""
    pool = list(enumerate_expressions(subset, complexity, max_expressions))
    if not pool:
        raise ValueError(f"complexity {complexity} unreachable over this subset")
    return pool[random.Random(seed).randrange(len(pool))]


# ---------------------------------------------------------------------------
# Single-variable inversion (used by lookup transforms)


def count_const(e: Expr, name: str) -> int:
    if isinstance(e, Const) and e.name == name:
        return 1
    return sum(count_const(c, name) for c in children(e))


def solve_for(template: Expr, var: str, rhs: Expr, catalog: Catalog | None = None) -> Expr:
    """Solve ``template == rhs`` for the single occurrence of ``Const(var)``.

    Walks from the root toward the variable, inverting each node; supports
    the five operators, negation, and catalog functions carrying an inverse.
    """
    catalog = catalog or DEFAULT_CATALOG
    if count_const(template, var) != 1:
        raise ValueError(f"template must contain {var!r} exactly once")

    e = template
    while True:
        if isinstance(e, Const) and e.name == var:
            return rhs
        if isinstance(e, Neg):
            e, rhs = e.arg, Neg(rhs)
            continue
        if isinstance(e, Apply):
            fdef = catalog.functions.get(e.fn)
            if fdef is None or fdef.inverse is None:
                raise ValueError(f"{e.fn} is not invertible")
            e, rhs = e.args[0], fdef.inverse.build(rhs)
            continue
        if isinstance(e, BinOp):
            in_left = count_const(e.left, var) == 1
            other = e.right if in_left else e.left
            if e.op == "+":
                rhs = BinOp("-", rhs, other)
            elif e.op == "-":
                rhs = BinOp("+", rhs, other) if in_left else BinOp("-", other, rhs)
            elif e.op == "*":
                rhs = BinOp("/", rhs, other)
            elif e.op == "/":
                rhs = BinOp("*", rhs, other) if in_left else BinOp("/", other, rhs)
            elif e.op == "^":
                if in_left:
                    # K^c = rhs  ->  K = rhs^(1/c)
                    rhs = BinOp("^", rhs, BinOp("/", Integer(1), other))
                else:
                    # c^K = rhs  ->  K = ln(rhs)/ln(c)
                    rhs = BinOp("/", apply1("ln", rhs), apply1("ln", other))
            e = e.left if in_left else e.right
            continue
        raise ValueError("variable not reachable through invertible nodes")
