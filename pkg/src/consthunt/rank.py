"""Candidate scoring and vetting.

A candidate is an exact expression plus the three numbers the whole artifact
revolves around: Agreement (digits matched), Entropy10 (digit-denominated
complexity) and Margin = Agreement - Entropy10.  This module also hosts the
cross-precision persistence test that separates true limits from impostors,
numeric probable-equivalence grouping, and the nsimplify rewriter that
replaces subexpressions with lower-entropy probable equals.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

import mpmath as mp

from . import exprs, numcore
from .exprs import Catalog, ConstantDef, Expr, children, rebuild
from .numcore import BigFloat

# Margin thresholds for the qualitative ladder (documented, configurable).
VERDICT_LADDER = (
    (8.0, "Excellent"),
    (5.0, "Good"),
    (2.0, "Fair"),
    (0.0, "Poor"),
)
SCORING_GUARD = 4


def verdict_for(margin: float) -> str:
    for threshold, name in VERDICT_LADDER:
        if margin >= threshold:
            return name
    return "Terrible"


@dataclass(frozen=True)
class Candidate:
    expr: Expr
    text: str
    value: BigFloat
    agreement: int
    entropy10: float
    margin: float
    source: str
    verdict: str
    # catalog constants the expression depends on beyond the defaults
    # (auto-registered algebraic roots travel with their candidate)
    extension: tuple[ConstantDef, ...] = ()
    suspect: bool = False
    implicit_equation: str | None = None


def score(expr: Expr, target: BigFloat, source: str = "",
          catalog: Catalog | None = None,
          extension: tuple[ConstantDef, ...] = (),
          text: str | None = None) -> Candidate:
    """Evaluate, count agreeing digits, and fill the score record."""
    catalog = catalog or exprs.DEFAULT_CATALOG
    if extension:
        catalog = catalog.extended(constants=list(extension))
    value = exprs.evaluate(expr, target.trusted_digits + SCORING_GUARD, catalog)
    agreement = numcore.agreement(value, target)
    entropy = exprs.entropy10(expr, catalog)
    margin = agreement - entropy
    return Candidate(expr=expr, text=text if text is not None else exprs.to_text(expr),
                     value=value, agreement=agreement, entropy10=entropy,
                     margin=margin, source=source, verdict=verdict_for(margin),
                     extension=extension)


@dataclass(frozen=True)
class FilterDecision:
    candidate: Candidate
    accepted: bool
    reason: str | None = None


def accept_filter(candidates: Iterable[Candidate], min_agreement: float,
                  min_margin: float) -> tuple[list[Candidate], list[FilterDecision]]:
    """Closed-threshold filter; rejected candidates are kept for inspection."""
    accepted: list[Candidate] = []
    rejected: list[FilterDecision] = []
    for cand in candidates:
        if cand.agreement < min_agreement:
            rejected.append(FilterDecision(cand, False, "agreement"))
        elif cand.margin < min_margin:
            rejected.append(FilterDecision(cand, False, "margin"))
        elif cand.suspect:
            rejected.append(FilterDecision(cand, False, "verification"))
        else:
            accepted.append(cand)
    return accepted, rejected


def default_min_agreement(target: BigFloat) -> int:
    return max(1, target.trusted_digits - 2)


# ---------------------------------------------------------------------------
# Numeric probable equality and grouping


def _probe_equal_once(a: Candidate, b: Candidate, digits: int,
                      catalog: Catalog | None = None) -> bool:
    catalog = catalog or exprs.DEFAULT_CATALOG
    try:
        va = exprs.evaluate(a.expr, digits + 2,
                            catalog.extended(constants=list(a.extension)) if a.extension else catalog)
        vb = exprs.evaluate(b.expr, digits + 2,
                            catalog.extended(constants=list(b.extension)) if b.extension else catalog)
    except (exprs.DomainError, exprs.EvaluationError):
        return False
    if vb.value == 0:
        return va.value == 0
    with mp.workdps(digits + 10):
        return abs(va.value - vb.value) <= abs(vb.value) * mp.mpf(10) ** (-digits)


def probably_equal(a: Candidate, b: Candidate, probe_digits: int,
                   catalog: Catalog | None = None) -> bool:
    """Equal at probe_digits and again at twice that; false positives need to
    survive both probes."""
    return (_probe_equal_once(a, b, probe_digits, catalog)
            and _probe_equal_once(a, b, 2 * probe_digits, catalog))


@dataclass(frozen=True)
class CandidateGroup:
    representative: Candidate
    members: tuple[Candidate, ...]


def group_equivalents(candidates: Sequence[Candidate], probe_digits: int = 30,
                      catalog: Catalog | None = None) -> list[CandidateGroup]:
    """Partition by numeric probable-equality; lowest-entropy member represents.

    Candidates that fail to evaluate are isolated in singleton groups.
    """
    if probe_digits < 30:
        raise ValueError("probe_digits must be >= 30")
    order = sorted(range(len(candidates)), key=lambda i: (candidates[i].text, i))
    parent = list(range(len(candidates)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    # sort by value so probable equals are adjacent, then union chains
    def sort_key(i):
        return mp.mpf(candidates[i].value.value)

    by_value = sorted(order, key=sort_key)
    for a, b in zip(by_value, by_value[1:]):
        if probably_equal(candidates[a], candidates[b], probe_digits, catalog):
            parent[find(a)] = find(b)

    buckets: dict[int, list[Candidate]] = {}
    for i in order:
        buckets.setdefault(find(i), []).append(candidates[i])
    groups = []
    for members in buckets.values():
        rep = min(members, key=lambda c: (c.entropy10, c.text))
        groups.append(CandidateGroup(representative=rep, members=tuple(members)))
    groups.sort(key=lambda g: (-g.representative.margin, g.representative.text))
    return groups


# ---------------------------------------------------------------------------
# Persistence across precisions


@dataclass(frozen=True)
class PersistenceEntry:
    text: str
    presence: tuple[bool, ...]
    stable_from: int | None


@dataclass(frozen=True)
class PersistenceReport:
    precisions: tuple[int, ...]
    entries: tuple[PersistenceEntry, ...]
    partial: bool = False

    def stable_entries(self) -> list[PersistenceEntry]:
        return [e for e in self.entries if e.stable_from is not None]


def persistence_test(runner: Callable[[BigFloat], Sequence[Candidate]],
                     target_source: Callable[[int], BigFloat | str],
                     precisions: Sequence[int]) -> PersistenceReport:
    """Re-run an identification at each precision and track who persists.

    True limits, once they appear, keep appearing at every higher precision;
    impostors drop out.  ``stable_from`` is the first precision after which a
    candidate never disappears (requires presence at the highest precision).
    """
    precisions = tuple(sorted(precisions))
    presence: dict[str, list[bool]] = {}
    partial = False
    for idx, p in enumerate(precisions):
        try:
            target = target_source(p)
            if isinstance(target, str):
                target = numcore.parse_float_input(target)
            found = {c.text for c in runner(target)}
        except Exception:
            partial = True
            found = set()
        for text in found:
            presence.setdefault(text, [False] * len(precisions))[idx] = True
    entries = []
    for text in sorted(presence):
        flags = tuple(presence[text])
        stable_from = None
        for idx in range(len(precisions)):
            if all(flags[idx:]) and flags[idx]:
                stable_from = precisions[idx]
                break
        entries.append(PersistenceEntry(text=text, presence=flags, stable_from=stable_from))
    return PersistenceReport(precisions=precisions, entries=tuple(entries), partial=partial)


# ---------------------------------------------------------------------------
# NSimplify


def nsimplify(expr: Expr, probe_digits: int = 26,
              proposer: Callable[[BigFloat], Sequence[Candidate]] | None = None,
              catalog: Catalog | None = None) -> Expr:
    """Replace (sub)expressions by lower-entropy probable equals.

    The expression is approximated as a float, the identification pipeline is
    run on it, and a proposal replaces the original only if it has strictly
    smaller entropy10 and passes the two-precision probable-equality check.
    Otherwise recursion proceeds into subexpressions.  The result never has
    larger entropy10 than the input.
    """
    catalog = catalog or exprs.DEFAULT_CATALOG
    if proposer is None:
        from . import pipeline
        proposer = lambda t: pipeline.default_proposer(t, catalog)  # noqa: E731

    simplified = exprs.simplify(expr, catalog)
    out = _nsimplify_node(simplified, probe_digits, proposer, catalog)
    return out if exprs.entropy10(out, catalog) <= exprs.entropy10(expr, catalog) else expr


def _nsimplify_node(expr: Expr, probe_digits: int, proposer, catalog: Catalog) -> Expr:
    replaced = _propose_replacement(expr, probe_digits, proposer, catalog)
    if replaced is not None:
        return replaced
    kids = children(expr)
    if not kids:
        return expr
    new_kids = tuple(_nsimplify_node(c, probe_digits, proposer, catalog) for c in kids)
    if new_kids != kids:
        return exprs.simplify_shallow(rebuild(expr, new_kids), catalog)
    return expr


def _propose_replacement(expr: Expr, probe_digits: int, proposer, catalog: Catalog) -> Expr | None:
    try:
        value = exprs.evaluate(expr, probe_digits, catalog)
    except (exprs.DomainError, exprs.EvaluationError):
        return None
    if value.value == 0:
        return None
    own_entropy = exprs.entropy10(expr, catalog)
    original = Candidate(expr=expr, text=exprs.to_text(expr), value=value,
                         agreement=0, entropy10=own_entropy, margin=0.0,
                         source="input", verdict="")
    best: Expr | None = None
    best_entropy = own_entropy
    for cand in proposer(value):
        if cand.entropy10 >= best_entropy:
            continue
        if probably_equal(original, cand, probe_digits, catalog):
            best, best_entropy = cand.expr, cand.entropy10
    return best


# ---------------------------------------------------------------------------
# identify-style mapping over mixed structures


@dataclass(frozen=True)
class FloatAtom(Expr):
    """A float leaf inside a structure handed to identify_map."""

    value: BigFloat


@dataclass(frozen=True)
class Symbol(Expr):
    """A non-constant symbol; identify_map leaves these untouched."""

    name: str


def identify_map(structure: Expr,
                 identifier: Callable[[BigFloat], Sequence[Candidate]] | None = None,
                 min_margin: float = 2.0) -> Expr:
    """Replace float leaves with accepted exact candidates, leave the rest.

    Each FloatAtom runs through the identification pipeline independently
    with parsimonious thresholds; floats that fail to identify confidently
    stay floats, and symbols and exact parts are untouched.
    """
    if identifier is None:
        from . import pipeline
        identifier = pipeline.default_proposer

    def walk(node: Expr) -> Expr:
        if isinstance(node, FloatAtom):
            cands = [c for c in identifier(node.value)
                     if c.margin >= min_margin
                     and c.agreement >= default_min_agreement(node.value)]
            if cands:
                best = max(cands, key=lambda c: c.margin)
                return best.expr
            return node
        kids = children(node)
        if not kids:
            return node
        return rebuild(node, tuple(walk(c) for c in kids))

    return walk(structure)
