"""Arbitrary-precision reals with explicit digit bookkeeping.

A float input is never just a number: it carries an estimate of how many of
its leading decimal digits can be trusted.  ``BigFloat`` packages the value
(an mpmath ``mpf``, plus the exact decimal rational when the value came from
a literal) together with ``trusted_digits`` and ``working_digits``.  On top
of that this module provides the input-grooming operations used by every
engine: parsing the ``value`\\ ``n`` precision-suffix grammar, truncated
16-digit significand keys, sign / fractional-part / power-of-ten aliasing,
9/0 boundary nudges, and the digit-agreement metric.

All values here are immutable; every function is pure.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp

# Stored guard digits beyond the trusted ones.
GUARD_DIGITS = 8
# How many guard digits may participate in agreement counting (tunable).
AGREE_GUARD = 2

KEY_DIGITS = 16


class GroomingError(ValueError):
    """Malformed float literal or inconsistent precision claim."""


@dataclass(frozen=True)
class BigFloat:
    """An arbitrary-precision real plus a count of trusted decimal digits.

    ``value`` is rendered at ``working_digits`` precision.  ``exact`` holds
    the input as an exact rational when it originated from a decimal literal,
    so significand digits can be extracted by integer arithmetic with no
    binary-rounding artifacts.
    """

    value: mp.mpf
    trusted_digits: int
    working_digits: int
    exact: Fraction | None = None

    def __post_init__(self):
        if self.trusted_digits < 1:
            raise GroomingError("trusted_digits must be >= 1")
        if self.working_digits < self.trusted_digits:
            raise GroomingError("working_digits must cover trusted_digits")
        if not mp.isfinite(self.value):
            raise GroomingError("value must be finite")

    def mpf(self) -> mp.mpf:
        return self.value

    def as_fraction(self) -> Fraction:
        return self.exact if self.exact is not None else mpf_to_fraction(self.value)

    def is_zero(self) -> bool:
        return self.value == 0

    def __str__(self):
        with mp.workdps(self.working_digits):
            return f"{mp.nstr(self.value, self.working_digits)}`{self.trusted_digits}"


@dataclass(frozen=True)
class SignificandKey:
    """Sign- and magnitude-stripped lookup key: ``sign * 0.digits * 10^exp10``.

    ``digits`` are the first 16 decimal digits of the absolute value,
    truncated (never rounded), with a nonzero leading digit.
    """

    sign: int
    exp10: int
    digits: str

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise ValueError("sign must be +/-1")
        if len(self.digits) != KEY_DIGITS or not self.digits.isdigit():
            raise ValueError(f"digits must be exactly {KEY_DIGITS} decimal digits")
        if self.digits[0] == "0":
            raise ValueError("leading significand digit must be nonzero")

    def reconstruct(self) -> Fraction:
        return Fraction(self.sign * int(self.digits), 10**KEY_DIGITS) * Fraction(10) ** self.exp10


@dataclass(frozen=True)
class AliasVariant:
    """One groomed variant of an input plus what undoes the aliasing.

    De-aliasing: original = sign * (offset + value).
    """

    value: BigFloat
    offset: int
    sign: int


def mpf_to_fraction(x: mp.mpf) -> Fraction:
    """Exact rational value of an mpf (mpfs are dyadic rationals)."""
    if not isinstance(x, mp.mpf):
        x = mp.mpf(x)
    if not mp.isfinite(x):
        raise ValueError("cannot convert non-finite value")
    # read the raw (sign, mantissa, exponent) — re-wrapping with mp.mpf()
    # would round to the *current* context precision
    sign, man, exp, _ = x._mpf_
    if man == 0:
        return Fraction(0)
    frac = Fraction(int(man), 1) * Fraction(2) ** int(exp)
    return -frac if sign else frac


def fraction_exp10(q: Fraction) -> int:
    """Exponent e with 10^(e-1) <= |q| < 10^e, i.e. |q| = 0.d1d2... * 10^e."""
    if q == 0:
        raise ValueError("zero has no decimal exponent")
    p, d = abs(q).numerator, abs(q).denominator
    # bit-length estimate (log10 2 = 0.30103), settled by exact comparison
    e = int((p.bit_length() - d.bit_length()) * 0.30102999566398) + 1
    while _cmp_pow10(p, d, e) >= 0:
        e += 1
    while _cmp_pow10(p, d, e - 1) < 0:
        e -= 1
    return e


def _cmp_pow10(p: int, d: int, e: int) -> int:
    """Compare p/d with 10^e exactly."""
    if e >= 0:
        lhs, rhs = p, d * 10**e
    else:
        lhs, rhs = p * 10**-e, d
    return (lhs > rhs) - (lhs < rhs)


def fraction_digits(q: Fraction, n: int) -> tuple[int, str]:
    """First ``n`` decimal digits of |q|, truncated, plus the exp10."""
    e = fraction_exp10(q)
    p, d = abs(q).numerator, abs(q).denominator
    shift = n - e
    if shift >= 0:
        digits_int = (p * 10**shift) // d
    else:
        digits_int = p // (d * 10**-shift)
    return e, str(digits_int).rjust(n, "0")


_FLOAT_RE = re.compile(
    r"""^\s*
        (?P<sign>[+-]?)
        (?P<mant>\d+(?:\.\d*)?|\.\d+)
        (?:[eE](?P<exp>[+-]?\d+))?
        (?:[`@](?P<prec>\d+(?:\.\d+)?))?
        \s*$""",
    re.VERBOSE,
)


def _first_bad_position(text: str) -> int:
    for i in range(len(text), 0, -1):
        if _FLOAT_RE.match(text[:i]) is not None:
            return i
    return 0


def significant_digit_count(mantissa: str) -> int:
    digits = mantissa.replace(".", "").lstrip("0")
    return len(digits) if digits else 1


def parse_float_input(text: str) -> BigFloat:
    """Parse ``[+-]digits[.digits][e[+-]digits][`n]`` into a BigFloat.

    The backquote suffix (``@`` accepted as a shell-friendly alias) states
    how many significant digits are believed correctly rounded; without it,
    every supplied significant digit is trusted.  A suffix exceeding the
    supplied digits implies trailing zeros (the input is taken as exact),
    so ``0.1615`16`` is accepted rather than rejected.
    """
    m = _FLOAT_RE.match(text)
    if m is None:
        at = _first_bad_position(text)
        raise GroomingError(f"malformed float literal {text!r} (at position {at})")
    mant = m.group("mant")
    supplied = significant_digit_count(mant)
    if m.group("prec") is not None:
        trusted = int(float(m.group("prec")))
        if trusted < 1:
            raise GroomingError("precision suffix must be >= 1")
    else:
        trusted = supplied

    frac = Fraction(mant)
    if m.group("exp"):
        frac *= Fraction(10) ** int(m.group("exp"))
    if m.group("sign") == "-":
        frac = -frac

    working = max(trusted + GUARD_DIGITS, supplied)
    with mp.workdps(working + 5):
        value = mp.mpf(frac.numerator) / frac.denominator
    return BigFloat(value=value, trusted_digits=trusted, working_digits=working, exact=frac)


def from_mpf(value: mp.mpf, trusted: int, working: int | None = None) -> BigFloat:
    working = working if working is not None else trusted + GUARD_DIGITS
    with mp.workdps(working + 3):
        # render at the declared working precision; re-wrapping outside a
        # context would silently round to the ambient 15 digits
        v = +value if isinstance(value, mp.mpf) else mp.mpf(value)
    return BigFloat(value=v, trusted_digits=trusted, working_digits=working)


def significand_key(x: BigFloat) -> SignificandKey:
    """Truncated 16-digit significand of |x| with its sign and exponent.

    When x carries fewer than 16 trusted digits, the trailing key positions
    are simply the stored (untrusted) digits; the caller decides how many of
    them to use.
    """
    q = x.as_fraction()
    if q == 0:
        raise GroomingError("zero has no significand key")
    e, digits = fraction_digits(q, KEY_DIGITS)
    return SignificandKey(sign=1 if q > 0 else -1, exp10=e, digits=digits)


def fractional_alias(x: BigFloat) -> list[AliasVariant]:
    """Variants worth looking up: |x| itself, and frac(|x|) when aliased.

    The fractional variant loses the digits cancelled by removing the
    integer part, so its trusted count shrinks accordingly.  An |x| < 1
    input yields only itself; so does an exact integer.
    """
    sign = -1 if x.value < 0 else 1
    q = abs(x.as_fraction())
    variants = [AliasVariant(value=_with_fraction(x, q), offset=0, sign=sign)]
    whole = int(q)  # floor for q >= 0
    if whole >= 1:
        frac = q - whole
        if frac > 0:
            lost = fraction_exp10(q) - fraction_exp10(frac)
            trusted = x.trusted_digits - lost
            if trusted >= 1:
                with mp.workdps(x.working_digits + 5):
                    value = mp.mpf(frac.numerator) / frac.denominator
                variants.append(AliasVariant(
                    value=BigFloat(value=value, trusted_digits=trusted,
                                   working_digits=max(x.working_digits - lost, trusted),
                                   exact=frac if x.exact is not None else None),
                    offset=whole, sign=sign))
    return variants


def _with_fraction(x: BigFloat, q: Fraction) -> BigFloat:
    with mp.workdps(x.working_digits + 5):
        value = mp.mpf(q.numerator) / q.denominator
    return BigFloat(value=value, trusted_digits=x.trusted_digits,
                    working_digits=x.working_digits,
                    exact=q if x.exact is not None else None)


def boundary_nudges(key: SignificandKey) -> list[SignificandKey]:
    """The key itself, plus the carry/borrow variant for trailing 9s/0s.

    A computed float that ends in 9s may be the rounded-down neighbor of the
    tabulated value (and dually for 0s), so adding or subtracting one unit in
    the last digit can change the whole trailing digit run.
    """
    out = [key]
    last = key.digits[-1]
    if last == "9":
        bumped = int(key.digits) + 1
        if bumped == 10**KEY_DIGITS:
            out.append(SignificandKey(key.sign, key.exp10 + 1, "1" + "0" * (KEY_DIGITS - 1)))
        else:
            out.append(SignificandKey(key.sign, key.exp10, str(bumped).rjust(KEY_DIGITS, "0")))
    elif last == "0":
        lowered = int(key.digits) - 1
        text = str(lowered).rjust(KEY_DIGITS, "0")
        if text[0] == "0":
            # 0.1000... dropped below the leading-digit boundary
            out.append(SignificandKey(key.sign, key.exp10 - 1, text[1:] + "9"))
        else:
            out.append(SignificandKey(key.sign, key.exp10, text))
    return out


def agreement(candidate_value: BigFloat | mp.mpf, target: BigFloat) -> int:
    """How many leading significant digits of the target the candidate hits.

    The largest d (capped at trusted_digits + AGREE_GUARD) such that
    |candidate - target| <= 0.5 * 10^(exp10 - d) where exp10 is the
    normalized decimal exponent of the target.  0 when they disagree from
    the first digit (e.g. opposite signs or wildly different magnitude).
    The comparison ladder is evaluated in exact rational arithmetic.
    """
    cand = candidate_value.as_fraction() if isinstance(candidate_value, BigFloat) \
        else mpf_to_fraction(candidate_value)
    targ = target.as_fraction()
    cap = min(target.trusted_digits + AGREE_GUARD, target.working_digits + AGREE_GUARD)
    if targ == 0:
        return cap if cand == 0 else 0
    e = fraction_exp10(targ)
    diff = abs(cand - targ)
    if diff == 0:
        return cap
    for d in range(cap, 0, -1):
        # 0.5 * 10^(e-d) as an exact fraction
        if diff * 2 * Fraction(10) ** (d - e) <= 1:
            return d
    return 0
