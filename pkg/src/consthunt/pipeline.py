"""One hunt, end to end: groom the input, fan out to engines, de-alias,
score, group, filter, rank.

The pipeline is the single entry point shared by the CLI and the HTTP
service.  Engines run in a fixed order over the groomed variants of the
input (absolute value, fractional part, stripped power of ten); every raw
finding is mapped back to the original signed target and re-scored against
it, so reported Agreement always refers to the number the user typed.
Engine failures are reported inside the result, never aborted across.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import mpmath as mp

from . import bisearch, exprs, numcore, rank, relations, tables
from .exprs import BinOp, Catalog, Expr, Integer
from .numcore import BigFloat

ENGINE_NAMES = ("lookup", "relations", "bisearch")

DEFAULT_RELATION_BASES: tuple[tuple[str, ...], ...] = (
    ("1", "pi", "e"),
    ("1", "pi", "ln2", "gamma"),
)
DEFAULT_POWER_BASES: tuple[str, ...] = ("2", "3", "5", "pi", "e")
DEFAULT_WRAPPERS: tuple[str, ...] = ("exp", "ln", "sin", "cos", "tan")
DEFAULT_WRAPPER_INNER_BASES: tuple[tuple[str, ...], ...] = (("pi",), ("1", "pi"))

MAGNITUDE_GUARD_LOW = mp.mpf("1e-8")
MAGNITUDE_GUARD_HIGH = mp.mpf("1e8")


def default_search_config(catalog: Catalog | None = None) -> bisearch.SearchConfig:
    return bisearch.SearchConfig(
        atoms=(Integer(1), Integer(2), Integer(3), Integer(5),
               exprs.Rational(1, 2), Integer(-1), exprs.Const("pi"), exprs.Const("e")),
        operators=("+", "-", "*", "/", "^"),
        functions=("sqrt", "exp", "ln"),
        max_complexity=5,
        catalog=catalog or exprs.DEFAULT_CATALOG,
    )


@dataclass(frozen=True)
class HuntRequest:
    raw_input: str
    engines: tuple[str, ...] = ENGINE_NAMES
    search: bisearch.SearchConfig | None = None
    table_paths: tuple[str, ...] = ()
    relation_bases: tuple[tuple[str, ...], ...] = DEFAULT_RELATION_BASES
    power_bases: tuple[str, ...] = DEFAULT_POWER_BASES
    wrappers: tuple[str, ...] = DEFAULT_WRAPPERS
    wrapper_inner_bases: tuple[tuple[str, ...], ...] = DEFAULT_WRAPPER_INNER_BASES
    max_poly_degree: int = 5
    min_agreement: float | None = None  # default: trusted_digits - 2
    min_margin: float = 0.0
    probe_digits: int = 30
    smart_battery_path: str | None = None
    precisions: tuple[int, ...] = ()
    max_candidates_per_engine: int = 400


@dataclass(frozen=True)
class EngineStats:
    engine: str
    seconds: float
    candidates: int
    error: str | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"engine": self.engine, "seconds": round(self.seconds, 4),
                "candidates": self.candidates, "error": self.error,
                "extra": self.extra}


@dataclass(frozen=True)
class ScoredCandidate:
    candidate: rank.Candidate
    accepted: bool
    reject_reason: str | None

    def to_dict(self) -> dict:
        c = self.candidate
        return {
            "text": c.text,
            "value": str(mp.nstr(c.value.value, c.value.working_digits)),
            "agreement": c.agreement,
            "entropy10": round(c.entropy10, 6),
            "margin": round(c.margin, 6),
            "verdict": c.verdict,
            "source": c.source,
            "accepted": self.accepted,
            "reject_reason": self.reject_reason,
            "suspect": c.suspect,
            "implicit_equation": c.implicit_equation,
        }


@dataclass(frozen=True)
class GroupReport:
    representative: int
    members: tuple[int, ...]
    stable_from: int | None = None

    def to_dict(self) -> dict:
        return {"representative": self.representative, "members": list(self.members),
                "stable_from": self.stable_from}


@dataclass(frozen=True)
class HuntReport:
    input_text: str
    trusted_digits: int
    working_digits: int
    value_text: str
    warnings: tuple[str, ...]
    candidates: tuple[ScoredCandidate, ...]
    groups: tuple[GroupReport, ...]
    engine_stats: tuple[EngineStats, ...]
    min_agreement: float
    min_margin: float

    def accepted(self) -> list[ScoredCandidate]:
        return [c for c in self.candidates if c.accepted]

    def to_dict(self) -> dict:
        return {
            "input": {
                "text": self.input_text,
                "trusted_digits": self.trusted_digits,
                "working_digits": self.working_digits,
                "value": self.value_text,
                "warnings": list(self.warnings),
            },
            "thresholds": {"min_agreement": self.min_agreement,
                           "min_margin": self.min_margin},
            "candidates": [c.to_dict() for c in self.candidates],
            "groups": [g.to_dict() for g in self.groups],
            "engine_stats": [s.to_dict() for s in self.engine_stats],
        }


@dataclass(frozen=True)
class _Variant:
    """A groomed copy of the input plus the inverse of its aliasing."""

    target: BigFloat
    sign: int
    offset: int
    scale10: int
    scale_free: bool = False  # already covered by the lookup key aliasing

    def restore(self, expr: Expr) -> Expr:
        out = expr
        if self.scale10:
            power = Integer(10 ** abs(self.scale10))
            out = BinOp("*", out, power) if self.scale10 > 0 else BinOp("/", out, power)
        if self.offset:
            out = BinOp("+", Integer(self.offset), out)
        if self.sign < 0:
            out = exprs.Neg(out)
        return out


def _variants(target: BigFloat) -> list[_Variant]:
    from fractions import Fraction

    out: list[_Variant] = []
    for alias in numcore.fractional_alias(target):
        out.append(_Variant(target=alias.value, sign=alias.sign, offset=alias.offset,
                            scale10=0))
    base = out[0].target
    e = numcore.fraction_exp10(base.as_fraction())
    if e != 0:
        with mp.workdps(base.working_digits + 5):
            value = base.value / mp.mpf(10) ** e
        exact = (base.exact * Fraction(10) ** -e) if base.exact is not None else None
        out.append(_Variant(
            target=BigFloat(value=value, trusted_digits=base.trusted_digits,
                            working_digits=base.working_digits, exact=exact),
            sign=out[0].sign, offset=0, scale10=e, scale_free=True))
    return out


class HuntError(ValueError):
    pass


def _run_lookup(variant: _Variant, request: HuntRequest, catalog: Catalog,
                loaded: Sequence[tables.LookupTable]) -> list[rank.Candidate]:
    out: list[rank.Candidate] = []
    target = variant.target
    if target.is_zero():
        return out
    key = numcore.significand_key(target)
    battery = (tables.load_battery(request.smart_battery_path, catalog)
               if request.smart_battery_path else None)
    for table in loaded:
        matched: dict[tuple[str, str], int] = {}
        entered = min(numcore.KEY_DIGITS, max(5, target.trusted_digits))
        for nudged in numcore.boundary_nudges(key):
            try:
                result = tables.simple_lookup(table, nudged.digits[:entered])
            except ValueError:
                continue
            for record in result.matches + result.below + result.above:
                ident = (record.key_digits, record.expr_text)
                agree = tables._common_prefix(nudged.digits, record.key_digits)
                matched[ident] = max(matched.get(ident, 0), agree)
        for (key_digits, expr_text), agree in sorted(matched.items()):
            record = tables.TableRecord(key_digits=key_digits, expr_text=expr_text)
            try:
                out.append(tables.dealias(record, target, catalog=catalog,
                                          matched_digits=max(agree, 1)))
            except (tables.DealiasError, exprs.DomainError, exprs.EvaluationError,
                    ValueError):
                continue
        if variant.offset:
            # fractional-part aliasing against the table side: reconcile the
            # record's own integer part, e.g. frac 0.14159... against pi
            frac = target.as_fraction()
            if 0 < frac < 1:
                for entry, agree in tables.fractional_lookup(table, frac,
                                                             target.trusted_digits,
                                                             catalog=catalog):
                    if agree < 5:
                        continue
                    expr = BinOp("-", exprs.parse_text(entry.record.expr_text, catalog),
                                 Integer(entry.offset))
                    try:
                        out.append(rank.score(exprs.simplify(expr, catalog), target,
                                              source="lookup/fractional",
                                              catalog=catalog))
                    except (exprs.DomainError, exprs.EvaluationError):
                        continue
        if target.trusted_digits >= tables.SMART_MIN_INPUT_DIGITS:
            try:
                hits = tables.smart_lookup(table, target, battery=battery, catalog=catalog)
            except ValueError:
                hits = []
            for hit in hits:
                out.extend(tables.dealias_hit(hit, target, catalog))
    return out


def _run_relations(variant: _Variant, request: HuntRequest,
                   catalog: Catalog) -> list[rank.Candidate]:
    target = variant.target
    out: list[rank.Candidate] = []
    if target.is_zero():
        return out

    def parse_basis(texts: Iterable[str]) -> list[Expr]:
        return [exprs.parse_text(t, catalog) for t in texts]

    alg = relations.model_min_polynomial(target, request.max_poly_degree)
    if alg is not None:
        cand = relations.algebraic_to_candidate(alg, target, catalog)
        if cand is not None:
            out.append(cand)
    for texts in request.relation_bases:
        basis = parse_basis(texts)
        try:
            cand = relations.model_linear_combination(target, basis, catalog)
            if cand is not None:
                out.append(cand)
            cand = relations.model_linear_fractional(target, basis, basis, catalog)
            if cand is not None:
                out.append(cand)
        except (relations.InsufficientPrecision, exprs.DomainError,
                exprs.EvaluationError):
            continue
    if target.value > 0 and request.power_bases:
        try:
            cand = relations.model_power_product(target, parse_basis(request.power_bases),
                                                 catalog)
            if cand is not None:
                out.append(cand)
        except (relations.InsufficientPrecision, exprs.DomainError,
                exprs.EvaluationError):
            pass
    for wrapper in request.wrappers:
        for inner_texts in request.wrapper_inner_bases:
            inner_basis = parse_basis(inner_texts)

            def inner_model(y, b=inner_basis):
                return relations.model_linear_combination(y, b, catalog)

            try:
                cand = relations.model_function_wrapped(target, wrapper, inner_model,
                                                        catalog)
            except (relations.OutOfBranch, relations.InsufficientPrecision,
                    exprs.DomainError, exprs.EvaluationError, ValueError):
                continue
            if cand is not None:
                out.append(cand)
    if 16 <= target.trusted_digits <= 32:
        try:
            out.extend(relations.isc_basis_suite(target, catalog))
        except (ValueError, exprs.DomainError, exprs.EvaluationError):
            pass
    return out


def _run_bisearch(variant: _Variant, request: HuntRequest,
                  catalog: Catalog) -> tuple[list[rank.Candidate], dict]:
    target = variant.target
    config = request.search or default_search_config(catalog)
    if config.catalog is not catalog:
        config = replace(config, catalog=catalog)
    out: list[rank.Candidate] = []
    tables_handle = bisearch.grow_tables(config, target)
    stream = bisearch.match_and_invert(tables_handle, target, config)
    if config.pareto_filter:
        stream = bisearch.pareto_stream(stream, target)
    for cand in stream:
        out.append(cand)
        if len(out) >= request.max_candidates_per_engine:
            break
    extra = {
        "forward": tables_handle.forward_stats.__dict__.copy(),
        "backward": tables_handle.backward_stats.__dict__.copy(),
        "seconds_growing": round(tables_handle.elapsed, 4),
    }
    return out, extra


def hunt(request: HuntRequest, catalog: Catalog | None = None,
         cancel: threading.Event | None = None,
         on_candidate: Callable[[ScoredCandidate], None] | None = None) -> HuntReport:
    """Run the selected engines over the groomed input and rank the findings."""
    catalog = catalog or exprs.DEFAULT_CATALOG
    if not request.engines:
        raise HuntError("select at least one engine")
    unknown = [e for e in request.engines if e not in ENGINE_NAMES]
    if unknown:
        raise HuntError(f"unknown engines: {unknown}")
    target = numcore.parse_float_input(request.raw_input)
    if target.is_zero():
        raise HuntError("zero has every exact form; enter a nonzero float")

    warnings: list[str] = []
    magnitude = abs(target.value)
    if magnitude < MAGNITUDE_GUARD_LOW or magnitude > MAGNITUDE_GUARD_HIGH:
        warnings.append(
            "input magnitude is extreme; identification quality degrades and "
            "significand aliasing was applied automatically")

    variants = _variants(target)
    try:
        loaded = [tables.LookupTable.load(p) for p in request.table_paths]
    except (OSError, tables.TableBuildError) as err:
        raise HuntError(f"table not readable: {err}") from err

    pool: dict[str, rank.Candidate] = {}
    stats: list[EngineStats] = []
    for engine in request.engines:
        started = time.monotonic()
        found: list[tuple[_Variant, rank.Candidate]] = []
        error: str | None = None
        extra: dict = {}
        try:
            for variant in variants:
                if cancel is not None and cancel.is_set():
                    error = "cancelled"
                    break
                if engine == "lookup":
                    if variant.scale_free:
                        continue
                    results = _run_lookup(variant, request, catalog, loaded)
                elif engine == "relations":
                    results = _run_relations(variant, request, catalog)
                else:
                    results, extra = _run_bisearch(variant, request, catalog)
                found.extend((variant, cand) for cand in results)
        except Exception as err:  # engine isolation: report, don't abort
            error = f"{type(err).__name__}: {err}"
        mapped = 0
        for variant, cand in found:
            restored = _restore_candidate(variant, cand, target, catalog)
            if restored is None:
                continue
            mapped += 1
            prior = pool.get(restored.text)
            if prior is None or restored.margin > prior.margin:
                pool[restored.text] = restored
        stats.append(EngineStats(engine=engine, seconds=time.monotonic() - started,
                                 candidates=mapped, error=error, extra=extra))
        if error:
            warnings.append(f"{engine}: {error}")

    ordered = sorted(pool.values(), key=lambda c: (-c.margin, c.text))
    min_agreement = (request.min_agreement if request.min_agreement is not None
                     else rank.default_min_agreement(target))
    accepted, rejected = rank.accept_filter(ordered, min_agreement, request.min_margin)
    rejected_by_text = {d.candidate.text: d.reason for d in rejected}

    scored: list[ScoredCandidate] = []
    index_by_text: dict[str, int] = {}
    for cand in ordered:
        sc = ScoredCandidate(candidate=cand,
                             accepted=cand.text not in rejected_by_text,
                             reject_reason=rejected_by_text.get(cand.text))
        index_by_text[cand.text] = len(scored)
        scored.append(sc)
        if on_candidate is not None:
            on_candidate(sc)

    groups = []
    if accepted:
        for group in rank.group_equivalents(accepted, request.probe_digits):
            groups.append(GroupReport(
                representative=index_by_text[group.representative.text],
                members=tuple(index_by_text[m.text] for m in group.members)))

    with mp.workdps(target.working_digits):
        value_text = mp.nstr(target.value, target.working_digits)
    return HuntReport(
        input_text=request.raw_input.strip(),
        trusted_digits=target.trusted_digits,
        working_digits=target.working_digits,
        value_text=value_text,
        warnings=tuple(warnings),
        candidates=tuple(scored),
        groups=tuple(groups),
        engine_stats=tuple(stats),
        min_agreement=float(min_agreement),
        min_margin=float(request.min_margin),
    )


def _restore_candidate(variant: _Variant, cand: rank.Candidate, target: BigFloat,
                       catalog: Catalog) -> rank.Candidate | None:
    if cand.implicit_equation is not None:
        # implicit equations only make sense in the untransformed frame
        if variant.offset == 0 and variant.scale10 == 0 and variant.sign > 0:
            return cand
        return None
    expr = exprs.simplify(variant.restore(cand.expr), catalog)
    ext = cand.extension
    try:
        out = rank.score(expr, target, source=cand.source, catalog=catalog,
                         extension=ext,
                         text=None if not ext else None)
    except (exprs.DomainError, exprs.EvaluationError):
        return None
    if ext and "root(" in cand.text:
        # keep the readable root(...) text when the expression is untouched
        if expr == cand.expr:
            out = replace(out, text=cand.text)
    if cand.suspect:
        out = replace(out, suspect=True)
    return out


# ---------------------------------------------------------------------------
# Persistence across precisions


@dataclass(frozen=True)
class PersistenceOutcome:
    report: HuntReport
    persistence: rank.PersistenceReport

    def to_dict(self) -> dict:
        d = self.report.to_dict()
        d["persistence"] = {
            "precisions": list(self.persistence.precisions),
            "entries": [
                {"text": e.text, "presence": list(e.presence),
                 "stable_from": e.stable_from}
                for e in self.persistence.entries
            ],
        }
        return d


def hunt_with_persistence(request: HuntRequest,
                          target_source: Callable[[int], str | BigFloat],
                          catalog: Catalog | None = None) -> PersistenceOutcome:
    """Re-hunt at each precision and mark which groups persist.

    Presence means accepted at that precision.  The returned report is the
    highest-precision hunt with per-group stability attached.
    """
    catalog = catalog or exprs.DEFAULT_CATALOG
    if not request.precisions:
        raise HuntError("persistence needs at least one precision")
    precisions = tuple(sorted(request.precisions))

    reports: dict[int, HuntReport] = {}

    def runner(target: BigFloat) -> list[rank.Candidate]:
        text = f"{mp.nstr(target.value, target.trusted_digits)}`{target.trusted_digits}"
        sub = replace(request, raw_input=text, precisions=())
        report = hunt(sub, catalog)
        reports[target.trusted_digits] = report
        return [c.candidate for c in report.accepted()]

    persistence = rank.persistence_test(runner, target_source, precisions)
    top_report = reports.get(max(precisions))
    if top_report is None:
        raise HuntError("target source failed at the highest precision")
    stable = {e.text: e.stable_from for e in persistence.entries}
    annotated = []
    for group in top_report.groups:
        texts = [top_report.candidates[i].candidate.text for i in group.members]
        onsets = [stable.get(t) for t in texts if stable.get(t) is not None]
        annotated.append(replace(group, stable_from=min(onsets) if onsets else None))
    return PersistenceOutcome(report=replace(top_report, groups=tuple(annotated)),
                              persistence=persistence)


# ---------------------------------------------------------------------------
# Proposer for nsimplify / identify_map


def proposer_search_config(catalog: Catalog) -> bisearch.SearchConfig:
    atoms = tuple(Integer(n) for n in range(1, 33)) \
        + tuple(exprs.Rational(1, n) for n in range(2, 10)) \
        + (exprs.Const("pi"), exprs.Const("e"))
    return bisearch.SearchConfig(
        atoms=atoms, operators=("+", "-", "*", "/", "^"), functions=("sqrt",),
        max_complexity=3, catalog=catalog)


def default_proposer(value: BigFloat, catalog: Catalog | None = None) -> list[rank.Candidate]:
    """Parsimonious identification used by nsimplify and identify_map."""
    catalog = catalog or exprs.DEFAULT_CATALOG
    out: list[rank.Candidate] = []
    alg = relations.model_min_polynomial(value, 5)
    if alg is not None:
        cand = relations.algebraic_to_candidate(alg, value, catalog)
        if cand is not None:
            out.append(cand)
    for texts in DEFAULT_RELATION_BASES:
        basis = [exprs.parse_text(t, catalog) for t in texts]
        try:
            cand = relations.model_linear_combination(value, basis, catalog)
        except (relations.InsufficientPrecision, exprs.DomainError,
                exprs.EvaluationError):
            continue
        if cand is not None:
            out.append(cand)
    if value.value > 0:
        try:
            cand = relations.model_power_product(
                value, [exprs.parse_text(t, catalog) for t in DEFAULT_POWER_BASES],
                catalog)
            if cand is not None:
                out.append(cand)
        except (relations.InsufficientPrecision, exprs.DomainError,
                exprs.EvaluationError):
            pass
    for wrapper in DEFAULT_WRAPPERS:
        for inner_texts in DEFAULT_WRAPPER_INNER_BASES:
            basis = [exprs.parse_text(t, catalog) for t in inner_texts]

            def inner_model(y, b=basis):
                return relations.model_linear_combination(y, b, catalog)

            try:
                cand = relations.model_function_wrapped(value, wrapper, inner_model,
                                                        catalog)
            except (relations.OutOfBranch, relations.InsufficientPrecision,
                    exprs.DomainError, exprs.EvaluationError, ValueError):
                continue
            if cand is not None:
                out.append(cand)
    config = replace(proposer_search_config(catalog),
                     working_digits=max(19, value.trusted_digits + 4),
                     tolerance=mp.mpf(10) ** -(value.trusted_digits - 2)
                     * abs(value.value))
    try:
        for cand in bisearch.search_stream(config, value):
            out.append(cand)
            if len(out) > 200:
                break
    except (exprs.DomainError, exprs.EvaluationError, ValueError):
        pass
    best: dict[str, rank.Candidate] = {}
    for cand in out:
        prior = best.get(cand.text)
        if prior is None or cand.margin > prior.margin:
            best[cand.text] = cand
    return sorted(best.values(), key=lambda c: (c.entropy10, c.text))


def nsimplify(expr: Expr, probe_digits: int = 26,
              catalog: Catalog | None = None) -> Expr:
    """rank.nsimplify wired to the default identification pipeline."""
    catalog = catalog or exprs.DEFAULT_CATALOG
    return rank.nsimplify(expr, probe_digits,
                          proposer=lambda t: default_proposer(t, catalog),
                          catalog=catalog)
