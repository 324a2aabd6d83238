"""Integer-relation detection and the model families built on it.

The detector takes a vector of reals and hunts for integers n1..nm, not all
zero, with |sum n_i c_i| below a tolerance tied to the trusted digits of the
inputs.  Around it sit the model families: rational linear combinations,
linear fractional forms, minimal polynomials, polynomials with a fixed
irrational constant, power products, and invertible-function wrappers.

Precision discipline is enforced up front: a relation of m components with
coefficients of up to n digits needs about m*n significant digits of input,
and a run that cannot meet that raises InsufficientPrecision instead of
silently degrading.  Every returned relation is normalized (gcd 1, first
nonzero coefficient positive) and carries its recomputed residual.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import mpmath as mp

from . import exprs, numcore, rank
from .exprs import (
    Apply,
    BinOp,
    Catalog,
    ConstantDef,
    Expr,
    Integer,
    Neg,
    apply1,
    from_fraction,
)
from .numcore import BigFloat

# Residual tolerance gives up this many digits to coefficient size plus a
# fixed cushion for accumulated roundoff in the dot product.
TOL_CUSHION = 2
# Entropy headroom of the dubiousness heuristic (digits).
OVERFIT_SLACK = 6
# Degree ladder: raising the polynomial degree m is allowed while
# m*(m+1)/2 * LADDER_COEFF_DIGITS stays within the trusted digits.
LADDER_COEFF_DIGITS = 3


class InsufficientPrecision(ValueError):
    """The m*n precision requirement is not met; refusing to run degraded."""


class OutOfBranch(ValueError):
    """Target lies outside the wrapper function's invertible branch."""


@dataclass(frozen=True)
class RelationResult:
    coeffs: tuple[int, ...]
    residual: mp.mpf
    norm_bound: float

    def __post_init__(self):
        if not any(self.coeffs):
            raise ValueError("relation must have a nonzero coefficient")
        g = 0
        for c in self.coeffs:
            g = math.gcd(g, abs(c))
        if g != 1:
            raise ValueError("relation must be normalized to gcd 1")
        first = next(c for c in self.coeffs if c)
        if first < 0:
            raise ValueError("first nonzero coefficient must be positive")


@dataclass(frozen=True)
class NoRelation:
    norm_bound: float
    budget_exhausted: bool = False


def _sqrt_fixed(a: int, prec: int) -> int:
    return math.isqrt(a << prec)


def _round_fixed(a: int, prec: int) -> int:
    return ((a + (1 << (prec - 1))) >> prec) << prec


def pslq(constants: Sequence[BigFloat], max_coeff_digits: int,
         max_steps: int | None = None) -> RelationResult | NoRelation:
    """Find a small integer relation among the given constants, or bound it.

    Requires min working precision >= m * max_coeff_digits (the m*n rule).
    The acceptance tolerance is 10^-(trusted_min - max_coeff_digits - 2)
    relative to the largest input, so rounding in the last trusted digits of
    the inputs cannot mask a genuine relation.  On failure the returned
    NoRelation carries a lower bound on the 2-norm of any relation.
    """
    m = len(constants)
    if m < 2:
        raise ValueError("need at least two constants")
    values = [c.value for c in constants]
    if any(v == 0 for v in values):
        raise ValueError("constants must be nonzero")
    working = min(c.working_digits for c in constants)
    trusted = min(c.trusted_digits for c in constants)
    if working < m * max_coeff_digits:
        raise InsufficientPrecision(
            f"{m} components x {max_coeff_digits} coefficient digits needs "
            f">= {m * max_coeff_digits} working digits, have {working}")
    maxcoeff = 10 ** max_coeff_digits
    if max_steps is None:
        max_steps = 64 * m * m * max(max_coeff_digits, 2)
    tol_digits = max(3, trusted - max_coeff_digits - TOL_CUSHION)

    prec = int(working * 3.33) + 64
    with mp.workdps(working + 10):
        scale = max(abs(v) for v in values)
        tol_value = mp.mpf(10) ** (-tol_digits) * scale
        unit = mp.mpf(2) ** prec
        x = [None] + [int(mp.floor(v / scale * unit)) for v in values]
        tol_fixed = max(1, int(mp.floor(tol_value / scale * unit)))

    n = m
    one = 1 << prec
    g = _sqrt_fixed((4 << prec) // 3, prec)
    B = [[0] * (n + 1) for _ in range(n + 1)]
    H = [[0] * (n + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        B[i][i] = one

    s = [0] * (n + 1)
    for k in range(n, 0, -1):
        s[k] = (s[k + 1] if k < n else 0) + ((x[k] * x[k]) >> prec)
    for k in range(1, n + 1):
        s[k] = _sqrt_fixed(s[k], prec)
    t = s[1]
    y = x[:]
    for k in range(1, n + 1):
        y[k] = (x[k] << prec) // t
        s[k] = (s[k] << prec) // t
    for i in range(1, n + 1):
        if i <= n - 1 and s[i]:
            H[i][i] = (s[i + 1] << prec) // s[i]
        for j in range(1, i):
            sjj1 = s[j] * s[j + 1]
            if sjj1:
                H[i][j] = ((-y[i] * y[j]) << prec) // sjj1
    for i in range(2, n + 1):
        for j in range(i - 1, 0, -1):
            if not H[j][j]:
                continue
            t = _round_fixed((H[i][j] << prec) // H[j][j], prec)
            y[j] += (t * y[i]) >> prec
            for k in range(1, j + 1):
                H[i][k] -= (t * H[j][k]) >> prec
            for k in range(1, n + 1):
                B[k][j] += (t * B[k][i]) >> prec

    norm_bound = 1.0
    for _ in range(max_steps):
        # pick the row maximizing gamma^i |H_ii|
        best_i, best_size = -1, -1
        for i in range(1, n):
            size = (g ** i * abs(H[i][i])) >> (prec * (i - 1))
            if size > best_size:
                best_i, best_size = i, size
        i0 = best_i
        y[i0], y[i0 + 1] = y[i0 + 1], y[i0]
        H[i0], H[i0 + 1] = H[i0 + 1], H[i0]
        for i in range(1, n + 1):
            B[i][i0], B[i][i0 + 1] = B[i][i0 + 1], B[i][i0]
        if i0 <= n - 2:
            t0 = _sqrt_fixed((H[i0][i0] * H[i0][i0] + H[i0][i0 + 1] * H[i0][i0 + 1]) >> prec, prec)
            if not t0:
                break  # precision exhausted
            t1 = (H[i0][i0] << prec) // t0
            t2 = (H[i0][i0 + 1] << prec) // t0
            for i in range(i0, n + 1):
                t3, t4 = H[i][i0], H[i][i0 + 1]
                H[i][i0] = (t1 * t3 + t2 * t4) >> prec
                H[i][i0 + 1] = (-t2 * t3 + t1 * t4) >> prec
        for i in range(i0 + 1, n + 1):
            for j in range(min(i - 1, i0 + 1), 0, -1):
                if not H[j][j]:
                    continue
                t = _round_fixed((H[i][j] << prec) // H[j][j], prec)
                y[j] += (t * y[i]) >> prec
                for k in range(1, j + 1):
                    H[i][k] -= (t * H[j][k]) >> prec
                for k in range(1, n + 1):
                    B[k][j] += (t * B[k][i]) >> prec

        for j in range(1, n + 1):
            if abs(y[j]) < tol_fixed:
                vec = [int(_round_fixed(B[k][j], prec) >> prec) for k in range(1, n + 1)]
                if any(vec) and all(abs(v) <= maxcoeff for v in vec):
                    return _normalize_relation(vec, constants, norm_bound)
        max_h = max(abs(h) for row in H for h in row)
        if max_h:
            norm_bound = max(norm_bound, float((one << prec) // max_h) / (1 << prec))
        if norm_bound > maxcoeff:
            return NoRelation(norm_bound=norm_bound)
    return NoRelation(norm_bound=norm_bound, budget_exhausted=True)


def _normalize_relation(vec: list[int], constants: Sequence[BigFloat],
                        norm_bound: float) -> RelationResult:
    g = 0
    for c in vec:
        g = math.gcd(g, abs(c))
    if g > 1:
        vec = [c // g for c in vec]
    first = next(c for c in vec if c)
    if first < 0:
        vec = [-c for c in vec]
    working = min(c.working_digits for c in constants)
    with mp.workdps(working + 10):
        residual = abs(mp.fdot([mp.mpf(c) for c in vec], [c.value for c in constants]))
    return RelationResult(coeffs=tuple(vec), residual=residual, norm_bound=norm_bound)


# ---------------------------------------------------------------------------
# Shared model helpers


def _const_bigfloat(value: mp.mpf, target: BigFloat) -> BigFloat:
    """An exact auxiliary constant, evaluated at the target's working precision."""
    return BigFloat(value=value, trusted_digits=target.trusted_digits,
                    working_digits=target.working_digits)


def _basis_values(basis: Sequence[Expr], target: BigFloat, catalog: Catalog) -> list[mp.mpf]:
    return [exprs.evaluate(b, target.working_digits, catalog).value for b in basis]


rational_times = exprs.rational_times


def _sum_terms(terms: list[Expr]) -> Expr:
    if not terms:
        return Integer(0)
    acc = terms[0]
    for term in terms[1:]:
        if isinstance(term, Neg):
            acc = BinOp("-", acc, term.arg)
        else:
            acc = BinOp("+", acc, term)
    return acc


def _passes_overfit_guard(cand: rank.Candidate, target: BigFloat) -> bool:
    """Dubiousness heuristic: entropy-heavy candidates are suppressed unless
    they agree with the input in full (impostors fitted by the detector stop
    one or more digits short of the trusted count)."""
    if cand.entropy10 <= target.trusted_digits - OVERFIT_SLACK:
        return True
    return cand.agreement >= target.trusted_digits


def _finish(expr: Expr, target: BigFloat, source: str, catalog: Catalog,
            extension: tuple[ConstantDef, ...] = ()) -> rank.Candidate | None:
    try:
        cand = rank.score(exprs.simplify(expr, catalog), target, source=source,
                          catalog=catalog, extension=extension)
    except (exprs.DomainError, exprs.EvaluationError):
        return None
    return cand if _passes_overfit_guard(cand, target) else None


def _default_coeff_digits(target: BigFloat, m: int) -> int:
    return max(1, target.trusted_digits // m)


# ---------------------------------------------------------------------------
# Model 1: rational linear combination


def model_linear_combination(target: BigFloat, basis: Sequence[Expr],
                             catalog: Catalog | None = None,
                             max_coeff_digits: int | None = None) -> rank.Candidate | None:
    """x ~ -(n2/n1) c2 - (n3/n1) c3 - ... from a relation over [x, c2, c3...]."""
    catalog = catalog or exprs.DEFAULT_CATALOG
    if not basis or target.is_zero():
        return None
    values = _basis_values(basis, target, catalog)
    vector = [target] + [_const_bigfloat(v, target) for v in values]
    digits = max_coeff_digits if max_coeff_digits is not None else _default_coeff_digits(target, len(vector))
    rel = pslq(vector, digits)
    if isinstance(rel, NoRelation):
        return None
    n1, rest = rel.coeffs[0], rel.coeffs[1:]
    if n1 == 0 or not any(rest):
        return None
    terms = [rational_times(b, Fraction(-n, n1)) for b, n in zip(basis, rest) if n]
    return _finish(_sum_terms(terms), target, "relations/linear_combination", catalog)


# ---------------------------------------------------------------------------
# Model 2: linear fractional


def model_linear_fractional(target: BigFloat, numerator_basis: Sequence[Expr],
                            denominator_basis: Sequence[Expr],
                            catalog: Catalog | None = None,
                            max_coeff_digits: int | None = None) -> rank.Candidate | None:
    """x ~ (nk ck + ...)/(n1 c1 + ...) from a relation over [c*x ... | c ...]."""
    catalog = catalog or exprs.DEFAULT_CATALOG
    if not denominator_basis or target.is_zero():
        return None
    den_values = _basis_values(denominator_basis, target, catalog)
    num_values = _basis_values(numerator_basis, target, catalog)
    with mp.workdps(target.working_digits + 5):
        lhs = [v * target.value for v in den_values]
    vector = [_const_bigfloat(v, target) for v in lhs + num_values]
    m = len(vector)
    digits = max_coeff_digits if max_coeff_digits is not None else _default_coeff_digits(target, m)
    rel = pslq(vector, digits)
    if isinstance(rel, NoRelation):
        return None
    k = len(denominator_basis)
    den_coeffs, num_coeffs = rel.coeffs[:k], rel.coeffs[k:]
    if not any(den_coeffs) or not any(num_coeffs):
        return None
    with mp.workdps(target.working_digits + 5):
        den_value = mp.fdot([mp.mpf(c) for c in den_coeffs], den_values)
        if den_value == 0:
            return None
    den_terms = [rational_times(b, Fraction(n)) for b, n in zip(denominator_basis, den_coeffs) if n]
    num_terms = [rational_times(b, Fraction(-n)) for b, n in zip(numerator_basis, num_coeffs) if n]
    expr = BinOp("/", _sum_terms(num_terms), _sum_terms(den_terms))
    return _finish(expr, target, "relations/linear_fractional", catalog)


# ---------------------------------------------------------------------------
# Model 3: minimal polynomial


@dataclass(frozen=True)
class AlgebraicCandidate:
    """An integer polynomial plus which of its zeros is meant.

    Coefficients are constant-first (c0 + c1 x + ... + ck x^k), primitive,
    with positive leading coefficient.  Entropy10 charges the coefficient
    magnitudes plus one unit per nonzero coefficient.
    """

    poly_coeffs: tuple[int, ...]
    root_approx: float

    def degree(self) -> int:
        return len(self.poly_coeffs) - 1

    def poly_text(self) -> str:
        parts = []
        for power, c in enumerate(self.poly_coeffs):
            if not c:
                continue
            if power == 0:
                parts.append(str(c))
            else:
                xs = "x" if power == 1 else f"x^{power}"
                parts.append(f"{c}*{xs}" if abs(c) != 1 else (xs if c > 0 else f"-{xs}"))
        joined = "+".join(parts).replace("+-", "-")
        return joined

    def display_text(self) -> str:
        return f"root({self.poly_text()}, near={self.root_approx!r})"

    def entropy10(self) -> float:
        logs = sum(math.log10(abs(c)) for c in self.poly_coeffs if abs(c) > 1)
        return logs + sum(1.0 for c in self.poly_coeffs if c)

    def nearest_root(self, digits: int) -> mp.mpf:
        with mp.workdps(digits + 10):
            roots = mp.polyroots([mp.mpf(c) for c in reversed(self.poly_coeffs)],
                                 maxsteps=200, extraprec=60)
            real = [r.real if isinstance(r, mp.mpc) else r for r in roots
                    if not isinstance(r, mp.mpc) or abs(r.imag) < mp.mpf(10) ** (-digits // 2)]
            if not real:
                raise exprs.DomainError("no real root")
            return +min(real, key=lambda r: abs(r - mp.mpf(self.root_approx)))

    def constant_name(self) -> str:
        tag = abs(hash((self.poly_coeffs, round(self.root_approx, 12)))) % 10**10
        return f"algroot_{self.degree()}_{tag}"

    def as_constant_def(self) -> ConstantDef:
        return ConstantDef(
            name=self.constant_name(),
            evaluator=lambda: self.nearest_root(mp.mp.dps),
            entropy10=self.entropy10(),
            length=1 + sum(1 for c in self.poly_coeffs if c),
        )


def model_min_polynomial(target: BigFloat, max_degree: int,
                         expected_coeff_digits: int = LADDER_COEFF_DIGITS
                         ) -> AlgebraicCandidate | None:
    """Try degrees 1, 2, ... while the precision ladder allows them."""
    if max_degree < 1:
        raise ValueError("max_degree must be >= 1")
    if target.is_zero():
        return None
    trusted = target.trusted_digits
    for m in range(1, max_degree + 1):
        if m * (m + 1) // 2 * expected_coeff_digits > trusted:
            break
        with mp.workdps(target.working_digits + 5):
            powers = [mp.power(target.value, i) for i in range(m + 1)]
        vector = [_const_bigfloat(p, target) for p in powers]
        digits = _default_coeff_digits(target, m + 1)
        try:
            rel = pslq(vector, digits)
        except InsufficientPrecision:
            break
        if isinstance(rel, NoRelation):
            continue
        coeffs = list(rel.coeffs)
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        if len(coeffs) < 2:
            continue
        if coeffs[-1] < 0:
            coeffs = [-c for c in coeffs]
        cand = AlgebraicCandidate(poly_coeffs=tuple(coeffs), root_approx=float(target.value))
        try:
            root = cand.nearest_root(trusted + 4)
        except exprs.DomainError:
            continue
        agreement = numcore.agreement(root, target)
        # polynomial coefficients are pure fitting freedom, so the entropy
        # guard is unconditional here: a root with mn-scale coefficients can
        # overfit every digit of a precision-starved input
        if cand.entropy10() > trusted - OVERFIT_SLACK:
            continue
        if agreement < trusted - 1:
            continue
        return cand
    return None


def algebraic_to_candidate(alg: AlgebraicCandidate, target: BigFloat,
                           catalog: Catalog | None = None,
                           source: str = "relations/min_polynomial") -> rank.Candidate | None:
    """Wrap a polynomial root as a scored candidate via a pseudo-constant."""
    catalog = catalog or exprs.DEFAULT_CATALOG
    cdef = alg.as_constant_def()
    cand = _finish(exprs.Const(cdef.name), target, source, catalog, extension=(cdef,))
    if cand is None:
        return None
    return dataclasses.replace(cand, text=alg.display_text())


# ---------------------------------------------------------------------------
# Model 4: polynomial with a predetermined constant


def model_poly_with_constant(target: BigFloat, constant: Expr, degree: int,
                             catalog: Catalog | None = None) -> rank.Candidate | None:
    """Fit n1*C + n2*x (+ n3*x^2) ~ 0 and solve explicitly for x."""
    if degree not in (1, 2):
        raise ValueError("degree must be 1 or 2 (explicitly solvable)")
    catalog = catalog or exprs.DEFAULT_CATALOG
    if target.is_zero():
        return None
    cval = exprs.evaluate(constant, target.working_digits, catalog).value
    with mp.workdps(target.working_digits + 5):
        values = [cval, target.value] + ([target.value ** 2] if degree == 2 else [])
    vector = [_const_bigfloat(v, target) for v in values]
    rel = pslq(vector, _default_coeff_digits(target, len(vector)))
    if isinstance(rel, NoRelation):
        return None
    if degree == 1 or (degree == 2 and rel.coeffs[2] == 0):
        n1, n2 = rel.coeffs[0], rel.coeffs[1]
        if n2 == 0 or n1 == 0:
            return None
        expr = rational_times(constant, Fraction(-n1, n2))
        return _finish(expr, target, "relations/poly_with_constant", catalog)
    n1, n2, n3 = rel.coeffs
    if n1 == 0:
        return None  # degenerates to x*(n2 + n3 x) = 0
    if n3 < 0:
        n1, n2, n3 = -n1, -n2, -n3
    # x = (-n2 +/- sqrt(n2^2 - 4 n3 n1 C)) / (2 n3)
    disc_expr = exprs.simplify(BinOp("-", Integer(n2 * n2),
                                     rational_times(constant, Fraction(4 * n3 * n1))), catalog)
    with mp.workdps(target.working_digits + 5):
        disc = n2 * n2 - 4 * n3 * n1 * cval
        if disc < 0:
            return None
        sq = mp.sqrt(disc)
        plus = (-n2 + sq) / (2 * n3)
        minus = (-n2 - sq) / (2 * n3)
        take_plus = abs(plus - target.value) <= abs(minus - target.value)
    root = apply1("sqrt", disc_expr)
    numer = BinOp("+", Integer(-n2), root) if take_plus else BinOp("-", Integer(-n2), root)
    expr = BinOp("/", numer, Integer(2 * n3))
    return _finish(expr, target, "relations/poly_with_constant", catalog)


# ---------------------------------------------------------------------------
# Model 5: power product


def model_power_product(target: BigFloat, bases: Sequence[Expr],
                        catalog: Catalog | None = None) -> rank.Candidate | None:
    """x ~ b1^r1 b2^r2 ... via a relation among the logarithms."""
    catalog = catalog or exprs.DEFAULT_CATALOG
    if target.value <= 0:
        raise exprs.DomainError("power products need a positive target")
    base_values = _basis_values(bases, target, catalog)
    if any(v <= 0 for v in base_values):
        raise exprs.DomainError("power products need positive bases")
    with mp.workdps(target.working_digits + 5):
        logs = [mp.ln(target.value)] + [mp.ln(v) for v in base_values]
    if any(v == 0 for v in logs):
        return None  # target or base equal to 1; nothing to model
    vector = [_const_bigfloat(v, target) for v in logs]
    rel = pslq(vector, _default_coeff_digits(target, len(vector)))
    if isinstance(rel, NoRelation):
        return None
    n1, rest = rel.coeffs[0], rel.coeffs[1:]
    if n1 == 0 or not any(rest):
        return None
    factors = []
    for base, n in zip(bases, rest):
        r = Fraction(-n, n1)
        if r == 0:
            continue
        factors.append(base if r == 1 else BinOp("^", base, from_fraction(r)))
    acc = factors[0]
    for f in factors[1:]:
        acc = BinOp("*", acc, f)
    return _finish(acc, target, "relations/power_product", catalog)


# ---------------------------------------------------------------------------
# Model 6: invertible function wrapper


def model_function_wrapped(target: BigFloat, wrapper: str,
                           inner_model: Callable[[BigFloat], rank.Candidate | None],
                           catalog: Catalog | None = None) -> rank.Candidate | None:
    """Undo f, fit the inside, return f(inner)."""
    catalog = catalog or exprs.DEFAULT_CATALOG
    fdef = catalog.functions.get(wrapper)
    if fdef is None or fdef.inverse is None:
        raise ValueError(f"{wrapper!r} has no declared inverse")
    with mp.workdps(target.working_digits + 5):
        if not fdef.inverse.in_range(target.value):
            raise OutOfBranch(f"target outside invertible branch of {wrapper}")
        y_value = fdef.inverse.numeric(target.value)
    if not mp.isfinite(y_value) or isinstance(y_value, mp.mpc):
        raise OutOfBranch(f"inverse of {wrapper} not finite/real here")
    trusted_y = propagated_trusted(fdef.inverse.numeric, target)
    if trusted_y < 5:
        return None
    y = BigFloat(value=y_value, trusted_digits=trusted_y,
                 working_digits=max(target.working_digits, trusted_y + numcore.GUARD_DIGITS))
    inner = inner_model(y)
    if inner is None:
        return None
    return _finish(Apply(wrapper, (inner.expr,)), target,
                   f"relations/wrapped:{wrapper}+{inner.source.split('/')[-1]}", catalog)


def propagated_trusted(fn: Callable[[mp.mpf], mp.mpf], x: BigFloat) -> int:
    """Trusted digits surviving a transform, by interval perturbation."""
    with mp.workdps(x.working_digits + 10):
        half_ulp = mp.mpf(10) ** (numcore.fraction_exp10(x.as_fraction()) - x.trusted_digits) / 2
        try:
            lo = fn(x.value - half_ulp)
            hi = fn(x.value + half_ulp)
            mid = fn(x.value)
        except Exception as err:  # domain edge
            raise exprs.DomainError(str(err)) from err
        if isinstance(lo, mp.mpc) or isinstance(hi, mp.mpc) or isinstance(mid, mp.mpc):
            raise exprs.DomainError("non-real under perturbation")
        spread = max(abs(hi - mid), abs(lo - mid)) * 2
        if mid == 0:
            return 1
        if spread == 0:
            return x.trusted_digits
        digits = int(mp.floor(-mp.log10(spread / abs(mid)))) + 1
    return max(1, min(digits, x.trusted_digits + 2))


# ---------------------------------------------------------------------------
# The fixed standard-basis battery (ISC-style)

ISC_BASIS_VECTORS: tuple[tuple[str, ...], ...] = (
    ("e", "pi", "gamma", "ei1", "w1", "1"),
    ("sqrt3*pi", "ln3", "ln2", "gamma", "sqrt2*pi"),
    ("pi^2", "catalan", "pi*ln2", "sqrt2*pi^2", "ln2^2"),
    ("pi^3", "zeta3", "pi^2*ln2", "ln2^3", "sqrt3*pi^3", "sqrt2*pi^3"),
)


def load_basis_file(path) -> list[list[Expr]]:
    """Basis vectors from a plain-text config: one expression per line,
    vectors separated by blank lines."""
    vectors: list[list[Expr]] = [[]]
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                if vectors[-1]:
                    vectors.append([])
                continue
            vectors[-1].append(exprs.parse_text(line))
    return [v for v in vectors if v]


def isc_basis_suite(target: BigFloat, catalog: Catalog | None = None) -> list[rank.Candidate]:
    """Fifth-degree algebraics plus the four fixed basis vectors."""
    if not 16 <= target.trusted_digits <= 32:
        raise ValueError("standard-basis suite requires 16 through 32 trusted digits")
    catalog = catalog or exprs.DEFAULT_CATALOG
    out: list[rank.Candidate] = []
    alg = model_min_polynomial(target, max_degree=5)
    if alg is not None:
        cand = algebraic_to_candidate(alg, target, catalog)
        if cand is not None:
            out.append(cand)
    for vector in ISC_BASIS_VECTORS:
        basis = [exprs.parse_text(text) for text in vector]
        try:
            cand = model_linear_combination(target, basis, catalog)
        except (InsufficientPrecision, exprs.DomainError, exprs.EvaluationError):
            continue
        if cand is not None:
            out.append(cand)
    return out
