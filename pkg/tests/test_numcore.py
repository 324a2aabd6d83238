from fractions import Fraction

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from consthunt import numcore as nc
from consthunt.numcore import (
    AGREE_GUARD,
    BigFloat,
    GroomingError,
    SignificandKey,
    agreement,
    boundary_nudges,
    fractional_alias,
    parse_float_input,
    significand_key,
)


class TestParse:
    def test_precision_suffix(self):
        x = parse_float_input("0.1153442565814834`14")
        assert x.trusted_digits == 14
        assert x.working_digits >= 22
        assert x.exact == Fraction(1153442565814834, 10**16)

    def test_digit_count_default(self):
        assert parse_float_input("3.14").trusted_digits == 3
        assert parse_float_input("0.00123").trusted_digits == 3
        assert parse_float_input("-5.123557917376186").trusted_digits == 16

    def test_zero_padded_suffix_accepted(self):
        # four supplied digits, sixteen trusted: implied trailing zeros
        x = parse_float_input("0.1615`16")
        assert x.trusted_digits == 16
        assert x.exact == Fraction(1615, 10**4)

    def test_at_sign_alias(self):
        assert parse_float_input("2.5@7").trusted_digits == 7

    def test_exponent_forms(self):
        x = parse_float_input("-1.25e-3`4")
        assert x.exact == Fraction(-125, 100000)
        assert x.trusted_digits == 4

    @pytest.mark.parametrize("bad", ["", "abc", "1.2.3", "1e", "`4", "1.5`0", "1,5"])
    def test_malformed(self, bad):
        with pytest.raises(GroomingError):
            parse_float_input(bad)

    def test_guard_policy(self):
        x = parse_float_input("3.14159")
        assert x.working_digits == x.trusted_digits + nc.GUARD_DIGITS


class TestSignificandKey:
    def test_negative_example(self):
        k = significand_key(parse_float_input("-5.123557917376186"))
        assert k == SignificandKey(-1, 1, "5123557917376186")

    def test_unit_interval_example(self):
        k = significand_key(parse_float_input("0.5123557917376186"))
        assert k == SignificandKey(1, 0, "5123557917376186")

    def test_shifted_pi(self):
        k = significand_key(parse_float_input("31.41592653589793"))
        assert k == SignificandKey(1, 2, "3141592653589793")

    def test_zero_rejected(self):
        with pytest.raises(GroomingError):
            significand_key(parse_float_input("0.0"))

    def test_truncation_never_rounds(self):
        # 17th digit is a 9 that would round the 16th digit up
        k = significand_key(parse_float_input("0.12345678901234559"))
        assert k.digits == "1234567890123455"

    @given(st.integers(1, 10**20), st.integers(1, 10**20))
    @settings(max_examples=200, deadline=None)
    def test_reconstruct_identity(self, p, q):
        x = BigFloat(value=mp.mpf(1), trusted_digits=16, working_digits=30,
                     exact=Fraction(p, q))
        k = significand_key(x)
        # reconstruction recovers the input to within 1 unit in the 16th digit
        recon = k.reconstruct()
        ulp16 = Fraction(10) ** (k.exp10 - 16)
        assert abs(abs(Fraction(p, q)) - abs(recon)) < ulp16
        assert significand_key(BigFloat(value=mp.mpf(1), trusted_digits=16,
                                        working_digits=30, exact=recon)) == k

    @given(st.text(alphabet="0123456789", min_size=17, max_size=24), st.text(alphabet="0123456789", min_size=1, max_size=4))
    @settings(max_examples=100, deadline=None)
    def test_digits_beyond_16_never_matter(self, digits, tail):
        if digits[0] == "0":
            digits = "1" + digits[1:]
        a = significand_key(parse_float_input("0." + digits))
        b = significand_key(parse_float_input("0." + digits[:16] + tail))
        assert a.digits == digits[:16]
        assert b.digits[: len(digits[:16])] == digits[:16]


class TestFractionalAlias:
    def test_wild_float_example(self):
        variants = fractional_alias(parse_float_input("9.141592654"))
        assert len(variants) == 2
        whole, frac = variants
        assert whole.offset == 0 and whole.sign == 1
        assert frac.offset == 9
        assert frac.value.exact == Fraction("0.141592654")
        # one leading digit lost to cancellation
        assert frac.value.trusted_digits == 9

    def test_below_one(self):
        variants = fractional_alias(parse_float_input("0.5"))
        assert len(variants) == 1
        assert variants[0].offset == 0

    def test_table_row_example(self):
        variants = fractional_alias(parse_float_input("4.2275535333762654"))
        assert variants[1].offset == 4
        assert variants[1].value.exact == Fraction("0.2275535333762654")

    def test_negative_sign_tag(self):
        variants = fractional_alias(parse_float_input("-9.141592654"))
        assert all(v.sign == -1 for v in variants)
        assert variants[0].value.exact == Fraction("9.141592654")

    def test_integer_input_has_no_fraction_variant(self):
        assert len(fractional_alias(parse_float_input("42.0"))) == 1

    @given(st.decimals(min_value="1.0001", max_value="999.9", places=8))
    @settings(max_examples=100, deadline=None)
    def test_dealias_round_trip_exact(self, d):
        x = parse_float_input(str(d))
        for v in fractional_alias(x):
            assert v.offset + v.value.exact == abs(x.exact)


class TestBoundaryNudges:
    def test_trailing_nines_carry(self):
        k = SignificandKey(1, 0, "1415926535897999")
        out = boundary_nudges(k)
        assert out == [k, SignificandKey(1, 0, "1415926535898000")]

    def test_trailing_zeros_borrow(self):
        k = SignificandKey(1, 0, "1415926535897900")
        out = boundary_nudges(k)
        assert out == [k, SignificandKey(1, 0, "1415926535897899")]

    def test_no_boundary_run(self):
        k = SignificandKey(1, 1, "5123557917376186")
        assert boundary_nudges(k) == [k]

    def test_carry_overflow_renormalizes(self):
        k = SignificandKey(1, 0, "9999999999999999")
        out = boundary_nudges(k)
        assert out[1] == SignificandKey(1, 1, "1000000000000000")

    def test_borrow_underflow_renormalizes(self):
        k = SignificandKey(1, 0, "1000000000000000")
        out = boundary_nudges(k)
        assert out[1] == SignificandKey(1, -1, "9999999999999999")


def oracle_agreement(cand: Fraction, targ: Fraction, cap: int) -> int:
    """Independent 0.5-ulp ladder: largest d with |c-t| <= 0.5*10^(e-d)."""
    if targ == 0:
        return cap if cand == 0 else 0
    e = 0
    while not (Fraction(10) ** (e - 1) <= abs(targ) < Fraction(10) ** e):
        e += 1 if abs(targ) >= Fraction(10) ** e else -1
    best = 0
    for d in range(1, cap + 1):
        if abs(cand - targ) <= Fraction(1, 2) * Fraction(10) ** (e - d):
            best = d
    return best


class TestAgreement:
    def test_exact_pi(self):
        target = parse_float_input("3.141592653589793")
        with mp.workdps(40):
            assert agreement(+mp.pi, target) == 16

    def test_22_over_7(self):
        # oracle: |pi - 22/7| ~ 1.26e-3 -> 3 digits
        target = parse_float_input("3.141592653589793")
        with mp.workdps(40):
            cand = mp.mpf(22) / 7
        assert agreement(cand, target) == 3
        assert oracle_agreement(Fraction(22, 7), target.exact, 18) == 3

    def test_linear_fractional_18(self):
        target = parse_float_input("0.115344256581483524")
        with mp.workdps(40):
            cand = (1 - 2 * mp.sqrt(3) + mp.pi) / (1 + mp.sqrt(3) + mp.pi)
        assert agreement(cand, target) == 18

    def test_self_agreement_hits_cap(self):
        x = parse_float_input("2.718281828459045")
        assert agreement(x, x) == x.trusted_digits + AGREE_GUARD

    def test_gross_disagreement(self):
        target = parse_float_input("3.14159")
        assert agreement(mp.mpf(-3.14159), target) == 0
        assert agreement(mp.mpf(9000), target) == 0

    @given(st.fractions(min_value=1, max_value=10),
           st.fractions(min_value=-1, max_value=1),
           st.fractions(min_value=-1, max_value=1))
    @settings(max_examples=200, deadline=None)
    def test_matches_oracle_and_monotone(self, t, d1, d2):
        target = BigFloat(value=mp.mpf(1), trusted_digits=12, working_digits=20, exact=t)
        cap = 12 + AGREE_GUARD
        a1 = agreement(BigFloat(mp.mpf(1), 12, 20, exact=t + d1), target)
        a2 = agreement(BigFloat(mp.mpf(1), 12, 20, exact=t + d2), target)
        assert a1 == oracle_agreement(t + d1, t, cap)
        assert a2 == oracle_agreement(t + d2, t, cap)
        if abs(d1) <= abs(d2):
            assert a1 >= a2
