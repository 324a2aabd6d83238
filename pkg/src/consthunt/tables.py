"""Precomputed lookup tables over truncated 16-digit significands.

A table row pairs the truncated significand of an expression's absolute
value with its canonical text.  Rows are sorted by key, so lookup is a
prefix bracket via binary search; sign and power of ten are stripped when
building (significand aliasing) and restored by ``dealias``.  Smart lookup
runs the same table through a battery of invertible transforms of the
target, recovering forms like K - 1/4 or ln(K) that a plain prefix match
cannot see.

File format (one record per line, sorted ascending, duplicate keys on
adjacent lines)::

    <16 digits><TAB><canonical expression>

A binary sidecar (16-byte keys + 8-byte little-endian line offsets) makes
reopening large tables cheap.
"""

from __future__ import annotations

import math
import os
import struct
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import mpmath as mp

from . import exprs, numcore, rank
from .exprs import BinOp, Catalog, Expr, Integer, Rational, apply1
from .numcore import KEY_DIGITS, BigFloat

BUILD_DIGITS = 18
SMART_DIGITS = 26
SMART_MIN_INPUT_DIGITS = 10
SMART_MIN_MATCHED_DIGITS = 12
SIDECAR_SUFFIX = ".idx"
SIDECAR_MAGIC = b"CHTBL1\x00\x00"


@dataclass(frozen=True)
class TableRecord:
    key_digits: str
    expr_text: str


@dataclass(frozen=True)
class TransformSpec:
    """An invertible pre-lookup transform of the target, written in K."""

    id: str
    description: str
    template: Expr  # expression over Const("K")

    def forward(self, value: mp.mpf, catalog: Catalog) -> mp.mpf:
        return exprs.eval_raw(self.template, catalog, {"K": value})

    def inverse_expr(self, matched: Expr, catalog: Catalog) -> Expr:
        return exprs.solve_for(self.template, "K", matched, catalog)

    @classmethod
    def from_text(cls, text: str, catalog: Catalog | None = None) -> "TransformSpec":
        catalog = catalog or exprs.DEFAULT_CATALOG
        template = exprs.parse_text(text, catalog, extra_names=("K",))
        if exprs.count_const(template, "K") != 1:
            raise ValueError(f"transform must mention K exactly once: {text!r}")
        return cls(id=text, description=text, template=template)


IDENTITY_TRANSFORM = TransformSpec.from_text("K")


def default_battery(catalog: Catalog | None = None) -> list[TransformSpec]:
    """About a hundred transforms: K +/- p/q, (p/q)K, powers, logs, pi mixes."""
    catalog = catalog or exprs.DEFAULT_CATALOG

    def reduced(bound_num, bound_den):
        out = []
        for den in range(1, bound_den + 1):
            for num in range(1, bound_num + 1):
                if math.gcd(num, den) == 1:
                    out.append(f"{num}/{den}" if den > 1 else f"{num}")
        return out

    texts: list[str] = ["K"]
    for q in reduced(8, 7):
        texts.append(f"K + {q}")
        texts.append(f"K - {q}")
    for q in reduced(4, 4):
        if q != "1":
            texts.append(f"{q}*K" if "/" not in q else f"({q})*K")
    texts += ["K^2", "sqrt(K)", "1/K", "ln(K)", "exp(K)",
              "K + pi", "K - pi", "pi*K", "K/pi"]
    return [TransformSpec.from_text(t, catalog) for t in texts]


def load_battery(path: str | os.PathLike, catalog: Catalog | None = None) -> list[TransformSpec]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                out.append(TransformSpec.from_text(line, catalog))
    return out


# ---------------------------------------------------------------------------
# Table build


@dataclass(frozen=True)
class GeneratorSpec:
    """What to tabulate: expressions, function families, rational lattices.

    ``functions`` are applied to every lattice argument; the lattice is all
    reduced p/q with the given bounds, optionally scaled by each multiplier.
    Rational-times-irrational family entries keep only odd/odd rationals
    (even factors and signs come back out of de-aliasing for free).
    """

    expressions: tuple[Expr, ...] = ()
    constants: tuple[str, ...] = ()
    functions: tuple[str, ...] = ()
    numerator_bound: int = 0
    denominator_bound: int = 0
    multipliers: tuple[Expr, ...] = (Integer(1),)
    include_plain_arguments: bool = False
    complexity_cap: int | None = None
    catalog: Catalog | None = None

    def lattice(self) -> list[Fraction]:
        out = []
        for num in range(1, self.numerator_bound + 1):
            for den in range(1, self.denominator_bound + 1):
                if math.gcd(num, den) == 1:
                    out.append(Fraction(num, den))
        return out

    def generate(self) -> Iterable[Expr]:
        catalog = self.catalog or exprs.DEFAULT_CATALOG
        yield from self.expressions
        for name in self.constants:
            yield exprs.Const(name)
        for mult in self.multipliers:
            irrational = mult != Integer(1)
            for q in self.lattice():
                if irrational and (q.numerator % 2 == 0 or q.denominator % 2 == 0):
                    continue  # base-2 aliasing bonus: odd/odd only
                arg = exprs.simplify(exprs.rational_times(mult, q), catalog)
                if self.include_plain_arguments:
                    yield arg
                for fn in self.functions:
                    yield apply1(fn, arg)


class TableBuildError(ValueError):
    pass


def build_table(spec: GeneratorSpec, output_path: str | os.PathLike) -> int:
    """Evaluate, key, sort, deduplicate and write records; returns the count."""
    catalog = spec.catalog or exprs.DEFAULT_CATALOG
    records: set[tuple[str, str]] = set()
    for expr in spec.generate():
        if spec.complexity_cap is not None and \
                exprs.length_complexity(expr, catalog) > spec.complexity_cap:
            continue
        try:
            value = exprs.evaluate(expr, BUILD_DIGITS, catalog)
        except (exprs.DomainError, exprs.EvaluationError):
            continue
        if value.value == 0:
            continue
        key = numcore.significand_key(value)
        records.add((key.digits, exprs.to_text(expr)))
    if not records:
        raise TableBuildError("generator spec produced zero records")
    rows = sorted(records)
    with open(output_path, "w", encoding="utf-8") as fh:
        offset = 0
        offsets = []
        for key, text in rows:
            line = f"{key}\t{text}\n"
            offsets.append(offset)
            offset += len(line.encode("utf-8"))
            fh.write(line)
    _write_sidecar(output_path, rows, offsets)
    return len(rows)


def _write_sidecar(path, rows, offsets) -> None:
    with open(str(path) + SIDECAR_SUFFIX, "wb") as fh:
        fh.write(SIDECAR_MAGIC)
        fh.write(struct.pack("<q", len(rows)))
        for (key, _), off in zip(rows, offsets):
            fh.write(key.encode("ascii"))
            fh.write(struct.pack("<q", off))


@dataclass(frozen=True)
class FractionalEntry:
    """A record keyed by the fractional part of its value.

    Matching a target's fractional part against these recovers integer-offset
    aliases: the candidate is record_expr - offset plus the target's own
    integer part.
    """

    key_digits: str
    offset: int
    record: TableRecord


class LookupTable:
    """In-memory sorted table with prefix search and neighbor browsing."""

    def __init__(self, records: Sequence[TableRecord], name: str = ""):
        self.records = list(records)
        self.keys = [r.key_digits for r in self.records]
        self.name = name
        self._fractional: list[FractionalEntry] | None = None
        if self.keys != sorted(self.keys):
            raise TableBuildError("table records must be sorted by key")

    def __len__(self):
        return len(self.records)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "LookupTable":
        sidecar = str(path) + SIDECAR_SUFFIX
        keys: list[str] | None = None
        if os.path.exists(sidecar):
            keys = _read_sidecar_keys(sidecar)
        records = []
        with open(path, "r", encoding="utf-8") as fh:
            for i, line in enumerate(fh):
                line = line.rstrip("\n")
                if not line:
                    continue
                key, _, text = line.partition("\t")
                if keys is not None and i < len(keys) and keys[i] != key:
                    raise TableBuildError("sidecar index disagrees with table body")
                records.append(TableRecord(key_digits=key, expr_text=text))
        return cls(records, name=os.path.basename(str(path)))

    def fractional_entries(self, catalog: Catalog | None = None) -> list[FractionalEntry]:
        """Records re-keyed by frac(|value|), for integer-offset de-aliasing.

        Built lazily (it re-evaluates every record), so plain significand
        lookups on large tables never pay for it.
        """
        if self._fractional is None:
            catalog = catalog or exprs.DEFAULT_CATALOG
            out = []
            for record in self.records:
                try:
                    value = exprs.evaluate(exprs.parse_text(record.expr_text, catalog),
                                           BUILD_DIGITS, catalog)
                except (exprs.DomainError, exprs.EvaluationError, exprs.ParseError):
                    continue
                q = abs(value.as_fraction())
                whole = int(q)
                frac = q - whole
                if whole < 1 or frac == 0:
                    continue
                out.append(FractionalEntry(key_digits=decimal_places(frac),
                                           offset=whole, record=record))
            out.sort(key=lambda e: (e.key_digits, e.offset, e.record.expr_text))
            self._fractional = out
        return self._fractional

    def mean_key_gap(self) -> float:
        if len(self.records) == 0:
            return float("nan")
        return (0.9999999999999999 - 0.1) / len(self.records)

    def stats(self) -> dict:
        return {
            "name": self.name,
            "records": len(self.records),
            "first_key": self.keys[0] if self.keys else None,
            "last_key": self.keys[-1] if self.keys else None,
            "mean_key_gap": self.mean_key_gap(),
        }


def _read_sidecar_keys(path) -> list[str]:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != SIDECAR_MAGIC:
            raise TableBuildError("bad sidecar magic")
        (count,) = struct.unpack("<q", fh.read(8))
        keys = []
        for _ in range(count):
            keys.append(fh.read(KEY_DIGITS).decode("ascii"))
            fh.read(8)
    return keys


# ---------------------------------------------------------------------------
# Simple lookup


@dataclass(frozen=True)
class SimpleLookupResult:
    matches: tuple[TableRecord, ...]
    below: tuple[TableRecord, ...]
    above: tuple[TableRecord, ...]
    entered_digits: str

    def best_neighbor_agreement(self) -> int:
        """Longest common key prefix between the entry and any neighbor."""
        best = 0
        for rec in self.below + self.above + self.matches:
            best = max(best, _common_prefix(self.entered_digits, rec.key_digits))
        return best


def _common_prefix(a: str, b: str) -> int:
    n = 0
    for x, y in zip(a, b):
        if x != y:
            break
        n += 1
    return n


def simple_lookup(table: LookupTable, entered_digits: str,
                  browse_radius: int = 3) -> SimpleLookupResult:
    """All records whose key starts with the entered digits, plus neighbors.

    Entered digits beyond 16 are ignored; at least 5 must be supplied.
    Neighbors bracket the (possibly empty) match range so near-misses are
    visible even when nothing matches exactly.
    """
    if not entered_digits.isdigit():
        raise ValueError("significand digits only")
    digits = entered_digits[:KEY_DIGITS]
    if len(digits) < 5:
        raise ValueError("enter at least 5 significant digits")
    lo = bisect_left(table.keys, digits)
    hi = bisect_right(table.keys, digits + "9" * (KEY_DIGITS - len(digits)))
    matches = tuple(table.records[lo:hi])
    below = tuple(table.records[max(0, lo - browse_radius):lo])
    above = tuple(table.records[hi:hi + browse_radius])
    return SimpleLookupResult(matches=matches, below=below, above=above,
                              entered_digits=digits)


def decimal_places(frac: Fraction, places: int = KEY_DIGITS) -> str:
    """The first decimal places of a fraction in (0, 1), truncated, padded."""
    if not 0 < frac < 1:
        raise ValueError("fractional part must lie in (0, 1)")
    return str((frac.numerator * 10 ** places) // frac.denominator).rjust(places, "0")


def fractional_lookup(table: LookupTable, frac: Fraction, trusted_digits: int,
                      browse_radius: int = 3,
                      catalog: Catalog | None = None) -> list[tuple[FractionalEntry, int]]:
    """Match a target's fractional part against fractional parts of records.

    Returns (entry, agreeing-decimal-places) pairs covering prefix matches
    and bracketing neighbors; the caller reconciles the integer offsets.
    """
    digits = decimal_places(frac)
    leading_zeros = len(digits) - len(digits.lstrip("0"))
    entered = min(KEY_DIGITS, max(5, trusted_digits + leading_zeros))
    prefix = digits[:entered]
    entries = table.fractional_entries(catalog)
    keys = [e.key_digits for e in entries]
    lo = bisect_left(keys, prefix)
    hi = bisect_right(keys, prefix + "9" * (KEY_DIGITS - len(prefix)))
    picked = entries[max(0, lo - browse_radius):hi + browse_radius]
    return [(e, _common_prefix(digits, e.key_digits)) for e in picked]


# ---------------------------------------------------------------------------
# Smart lookup


@dataclass(frozen=True)
class SmartHit:
    transform: TransformSpec
    transformed_value: BigFloat
    matched_digits: int
    match_count: int
    records: tuple[TableRecord, ...]


def smart_lookup(table: LookupTable, target: BigFloat,
                 battery: Sequence[TransformSpec] | None = None,
                 catalog: Catalog | None = None,
                 min_matched_digits: int = SMART_MIN_MATCHED_DIGITS) -> list[SmartHit]:
    """Run the battery of transforms over |target| and look each result up.

    Transforms are computed with 26-digit significands; the match length is
    capped by the digits that survive the transform, so noisy inputs cannot
    fake long matches.  Hits are sorted by matched digits, descending.
    """
    catalog = catalog or exprs.DEFAULT_CATALOG
    if target.trusted_digits < SMART_MIN_INPUT_DIGITS:
        raise ValueError(f"smart lookup needs >= {SMART_MIN_INPUT_DIGITS} trusted digits")
    battery = battery if battery is not None else default_battery(catalog)
    with mp.workdps(SMART_DIGITS):
        magnitude = abs(target.value)
    base = BigFloat(value=magnitude, trusted_digits=min(target.trusted_digits, SMART_DIGITS),
                    working_digits=SMART_DIGITS,
                    exact=abs(target.as_fraction()))
    hits: list[SmartHit] = []
    for transform in battery:
        with mp.workdps(SMART_DIGITS):
            try:
                transformed = transform.forward(base.value, catalog)
            except (exprs.DomainError, ValueError, ZeroDivisionError):
                continue
            if not mp.isfinite(transformed) or transformed == 0 or isinstance(transformed, mp.mpc):
                continue
        try:
            surviving = relations_propagated_trusted(transform, base, catalog)
        except exprs.DomainError:
            continue
        t_big = numcore.from_mpf(transformed, min(surviving, SMART_DIGITS), SMART_DIGITS)
        key = numcore.significand_key(t_big)
        result = simple_lookup(table, key.digits)
        usable = min(KEY_DIGITS, surviving)
        matched = min(result.best_neighbor_agreement(), usable)
        if matched < min_matched_digits:
            continue
        prefix = key.digits[:matched]
        recs = tuple(r for r in result.matches + result.below + result.above
                     if r.key_digits.startswith(prefix))
        if not recs:
            continue
        hits.append(SmartHit(transform=transform, transformed_value=t_big,
                             matched_digits=matched, match_count=len(recs),
                             records=recs))
    hits.sort(key=lambda h: (-h.matched_digits, h.transform.id))
    return hits


def relations_propagated_trusted(transform: TransformSpec, base: BigFloat,
                                 catalog: Catalog) -> int:
    from . import relations
    return relations.propagated_trusted(
        lambda v: transform.forward(v, catalog), base)


# ---------------------------------------------------------------------------
# De-aliasing


class DealiasError(ValueError):
    pass


def dealias(record: TableRecord, original_target: BigFloat,
            transform: TransformSpec = IDENTITY_TRANSFORM,
            transformed_value: BigFloat | None = None,
            matched_digits: int = KEY_DIGITS,
            catalog: Catalog | None = None) -> rank.Candidate:
    """Turn a table hit back into a candidate for the original signed target.

    Scale the matched expression by the power of ten separating it from the
    transformed target, undo the transform exactly, restore the sign, then
    verify by re-evaluation; a candidate that fails to reach the matched
    digit count is flagged suspect rather than silently returned.
    """
    catalog = catalog or exprs.DEFAULT_CATALOG
    matched_expr = exprs.parse_text(record.expr_text, catalog)
    if transformed_value is None:
        with mp.workdps(max(original_target.working_digits, SMART_DIGITS)):
            transformed_value = BigFloat(
                value=abs(original_target.value),
                trusted_digits=original_target.trusted_digits,
                working_digits=original_target.working_digits,
                exact=abs(original_target.as_fraction()))
    work = max(transformed_value.working_digits, BUILD_DIGITS + 4)
    record_value = exprs.evaluate(matched_expr, work, catalog)
    with mp.workdps(work + 5):
        if record_value.value == 0:
            raise DealiasError("matched record evaluates to zero")
        ratio = transformed_value.value / record_value.value
        if ratio <= 0:
            raise DealiasError("matched record has the wrong sign")
        k = int(mp.nint(mp.log10(ratio)))
        gate = max(mp.mpf(10) ** -10, mp.mpf(10) ** (1 - matched_digits))
        if abs(ratio / mp.mpf(10) ** k - 1) > gate:
            raise DealiasError("scale ratio is not a power of ten")
    if k:
        scaled: Expr = BinOp("*", _power_of_ten(k), matched_expr) if k > 0 else \
            BinOp("/", matched_expr, _power_of_ten(-k))
    else:
        scaled = matched_expr
    undone = transform.inverse_expr(scaled, catalog)
    if original_target.value < 0:
        undone = exprs.Neg(undone)
    expr = exprs.simplify(undone, catalog)
    cand = rank.score(expr, original_target,
                      source=f"lookup/{'simple' if transform.id == 'K' else 'smart:' + transform.id}",
                      catalog=catalog)
    # verification is truncated-digit agreement: re-evaluate at more digits
    # than the table holds, truncate, and compare against the target's key
    verify_digits = min(matched_digits, original_target.trusted_digits, KEY_DIGITS)
    try:
        target_key = numcore.significand_key(original_target)
        cand_key = numcore.significand_key(cand.value)
        verified = (cand_key.sign == target_key.sign
                    and cand_key.exp10 == target_key.exp10
                    and _common_prefix(cand_key.digits, target_key.digits) >= verify_digits)
    except numcore.GroomingError:
        verified = False
    if not verified and cand.agreement < verify_digits:
        import dataclasses
        cand = dataclasses.replace(cand, suspect=True)
    return cand


def _power_of_ten(k: int) -> Expr:
    return Integer(10 ** k)


def dealias_hit(hit: SmartHit, original_target: BigFloat,
                catalog: Catalog | None = None) -> list[rank.Candidate]:
    """De-alias every record attached to a smart hit."""
    out = []
    for record in hit.records:
        try:
            out.append(dealias(record, original_target, hit.transform,
                               hit.transformed_value, hit.matched_digits, catalog))
        except (DealiasError, exprs.DomainError, exprs.EvaluationError, ValueError):
            continue
    return out
