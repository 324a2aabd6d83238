"""Exhaustive bidirectional breadth-first search.

The forward table holds values of all expressions buildable from the chosen
atoms, operators and functions, grown level-by-level in exact Length order.
The backward table holds transformed copies of the target, each carrying the
chain of invertible steps that produced it (a step is an invertible function,
or an operator with one fixed operand drawn from the forward table).  A
backward value landing within tolerance of a forward value means the chain
can be unwound symbolically around the forward expression, producing a
candidate whose value approximates the target.

Growth alternates toward whichever table currently has fewer entries, so the
product of the table sizes (the number of recognizable combinations) is
roughly maximized for a given memory footprint.  Everything is deterministic:
fixed generation order, fixed tie-breaking, and a replayable match schedule.
"""

from __future__ import annotations

import time
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator

import mpmath as mp

from . import exprs, numcore, rank
from .exprs import Apply, BinOp, Catalog, DomainError, Expr, Integer
from .numcore import BigFloat

# rough per-entry memory cost used to enforce the byte budget
BYTES_PER_ENTRY = 256
# table values beyond this binary magnitude are useless for matching
# (kept below float64 overflow so index sort keys stay finite)
MAX_VALUE_MAG = 900


@dataclass(frozen=True)
class ForwardEntry:
    value: mp.mpf
    expr: Expr
    complexity: int


@dataclass(frozen=True)
class ChainStep:
    """One invertible backward step.

    kind 'fn': the candidate is fn(rest); undoing applies fn's inverse.
    kind 'op': the candidate is (operand op rest) for side 'left' or
    (rest op operand) for side 'right', operand fixed from the forward table.
    """

    kind: str
    name: str
    side: str | None = None
    operand: ForwardEntry | None = None

    def cost(self) -> int:
        return 1 if self.kind == "fn" else 1 + self.operand.complexity


@dataclass(frozen=True)
class BackwardEntry:
    value: mp.mpf
    chain: tuple[ChainStep, ...]
    complexity: int


@dataclass(frozen=True)
class SearchConfig:
    atoms: tuple[Expr, ...]
    operators: tuple[str, ...] = ("+", "-", "*", "/", "^")
    functions: tuple[str, ...] = ("sqrt", "exp", "ln")
    tolerance: mp.mpf | None = None
    max_complexity: int = 6
    time_budget: float | None = None
    memory_budget: int | None = None
    pareto_filter: bool = False
    allow_implicit: bool = False
    forward_only: bool = False
    working_digits: int = 19
    catalog: Catalog = field(default_factory=lambda: exprs.DEFAULT_CATALOG)

    def resolved_tolerance(self, target: BigFloat) -> mp.mpf:
        if self.tolerance is not None:
            return mp.mpf(self.tolerance)
        return default_tolerance(target)


def default_tolerance(target: BigFloat) -> mp.mpf:
    """Units in the last entered place: 10 units at <= 7 digits, scaling
    geometrically up to 1000 units at >= 16 digits."""
    t = min(max(target.trusted_digits, 7), 16)
    units = mp.mpf(10) ** (1 + 2 * (t - 7) / 9)
    e = numcore.fraction_exp10(target.as_fraction())
    return units * mp.mpf(10) ** (e - target.trusted_digits)


@dataclass
class TableStats:
    generated: int = 0
    distinct: int = 0
    dead_ends: int = 0
    levels_completed: int = 0
    truncated: bool = False

    def memory_estimate(self) -> int:
        return self.distinct * BYTES_PER_ENTRY


class BudgetStop(Exception):
    pass


class SearchTables:
    """Frozen result of growth: leveled entries plus the match schedule."""

    def __init__(self, config: SearchConfig, target: BigFloat):
        self.config = config
        self.target = target
        self.forward_levels: dict[int, list[ForwardEntry]] = {}
        self.backward_levels: dict[int, list[BackwardEntry]] = {}
        self.growth_sequence: list[tuple[str, int]] = []
        self.forward_stats = TableStats()
        self.backward_stats = TableStats()
        self.elapsed: float = 0.0

    def forward_count(self) -> int:
        return sum(len(v) for v in self.forward_levels.values())

    def backward_count(self) -> int:
        return sum(len(v) for v in self.backward_levels.values())

    def all_forward(self) -> Iterator[ForwardEntry]:
        for level in sorted(self.forward_levels):
            yield from self.forward_levels[level]


def _fingerprint(v: mp.mpf, digits: int) -> tuple[int, int, int]:
    """(sign, decimal exponent, first ``digits`` decimal digits) by integer
    arithmetic on the raw mantissa/exponent; truncation, no Fraction."""
    if v == 0:
        return (0, 0, 0)
    sign, man, exp, bc = v._mpf_
    man, exp = int(man), int(exp)
    lo_bound, hi_bound = 10 ** (digits - 1), 10 ** digits

    def leading(e10: int) -> int:
        shift = digits - e10
        num, den = (man << exp, 1) if exp >= 0 else (man, 1 << (-exp))
        if shift >= 0:
            return (num * 10 ** shift) // den
        return num // (den * 10 ** (-shift))

    e10 = int((bc + exp) * 0.30102999566398) + 1
    n = leading(e10)
    while n >= hi_bound:
        e10 += 1
        n = leading(e10)
    while n < lo_bound:
        e10 -= 1
        n = leading(e10)
    return (-1 if sign else 1, e10, n)


class _ValueIndex:
    """Per-level sorted blocks with fingerprint dedup at the collision epsilon.

    Blocks avoid quadratic insertion; lookups bisect each block on float64
    keys and settle the boundaries with exact comparisons.
    """

    def __init__(self, working_digits: int):
        self.fp_digits = max(working_digits - 2, 5)
        self.seen: set[tuple[int, int, int]] = set()
        self.blocks: list[tuple[list[float], list[mp.mpf], list[object]]] = []
        self._buffer: list[tuple[mp.mpf, object]] = []

    def is_duplicate(self, v: mp.mpf) -> bool:
        sign, e, n = _fingerprint(v, self.fp_digits)
        return ((sign, e, n) in self.seen or (sign, e, n - 1) in self.seen
                or (sign, e, n + 1) in self.seen)

    def add(self, v: mp.mpf, entry) -> None:
        self.seen.add(_fingerprint(v, self.fp_digits))
        self._buffer.append((v, entry))

    def flush(self) -> None:
        if not self._buffer:
            return
        # float key first; exact comparison only settles float ties
        self._buffer.sort(key=lambda p: (float(p[0]), p[0]))
        values = [p[0] for p in self._buffer]
        entries = [p[1] for p in self._buffer]
        self.blocks.append(([float(x) for x in values], values, entries))
        self._buffer = []

    def within(self, v: mp.mpf, tol: mp.mpf) -> list[object]:
        lo_v, hi_v = v - tol, v + tol
        out = []
        for fkeys, values, entries in self.blocks:
            lo = bisect_left(fkeys, float(lo_v))
            while lo > 0 and values[lo - 1] >= lo_v:
                lo -= 1
            while lo < len(values) and values[lo] < lo_v:
                lo += 1
            hi = bisect_right(fkeys, float(hi_v))
            while hi < len(values) and values[hi] <= hi_v:
                hi += 1
            while hi > lo and values[hi - 1] > hi_v:
                hi -= 1
            out.extend(entries[lo:hi])
        return out


class _Grower:
    def __init__(self, config: SearchConfig, target: BigFloat):
        self.config = config
        self.target = target
        self.catalog = config.catalog
        self.tables = SearchTables(config, target)
        self.f_index = _ValueIndex(config.working_digits)
        self.b_index = _ValueIndex(config.working_digits)
        self.deadline = (time.monotonic() + config.time_budget
                         if config.time_budget else None)
        self.entry_cap = (config.memory_budget // BYTES_PER_ENTRY
                          if config.memory_budget else None)
        with mp.workdps(config.working_digits + 5):
            root = BackwardEntry(value=+target.value, chain=(), complexity=0)
        self.tables.backward_levels[0] = [root]
        self.b_index.add(root.value, root)
        self.b_index.flush()
        self.tables.backward_stats.distinct += 1
        # level 0 (the untransformed target) participates in matching too
        self.tables.growth_sequence.append(("B", 0))

    def _check_budgets(self, stats: TableStats) -> None:
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise BudgetStop
        if self.entry_cap is not None and (
                self.tables.forward_stats.distinct
                + self.tables.backward_stats.distinct) >= self.entry_cap:
            raise BudgetStop

    def grow(self) -> SearchTables:
        started = time.monotonic()
        cfg = self.config
        next_f = 1
        next_b = cfg.max_complexity + 1 if cfg.forward_only else 1
        try:
            while next_f <= cfg.max_complexity or next_b <= cfg.max_complexity:
                grow_forward = (next_f <= cfg.max_complexity
                                and (next_b > cfg.max_complexity
                                     or self.tables.forward_count() <= self.tables.backward_count()))
                if grow_forward:
                    self._grow_forward_level(next_f)
                    next_f += 1
                else:
                    self._grow_backward_level(next_b)
                    next_b += 1
        except BudgetStop:
            if next_f <= cfg.max_complexity:
                self.tables.forward_stats.truncated = True
            if next_b <= cfg.max_complexity:
                self.tables.backward_stats.truncated = True
        self.tables.elapsed = time.monotonic() - started
        return self.tables

    # -- forward --

    def _grow_forward_level(self, level: int) -> None:
        cfg, stats = self.config, self.tables.forward_stats
        self._check_budgets(stats)
        raw: list[tuple[float, str, Expr, mp.mpf]] = []

        def consider(expr: Expr, value: mp.mpf | None):
            stats.generated += 1
            if stats.generated % 256 == 0:
                self._check_budgets(stats)
            norm = exprs.simplify_shallow(expr, self.catalog)
            if exprs.length_complexity(norm, self.catalog) != level:
                return
            if value is None or not mp.isfinite(value) or isinstance(value, mp.mpc) \
                    or (value != 0 and abs(mp.mag(value)) > MAX_VALUE_MAG):
                stats.dead_ends += 1
                return
            raw.append((exprs.entropy10(norm, self.catalog), exprs.to_text(norm), norm, value))

        with mp.workdps(cfg.working_digits + 5):
            for atom in cfg.atoms:
                if exprs.length_complexity(atom, self.catalog) != level:
                    continue
                try:
                    value = exprs.evaluate(atom, cfg.working_digits, self.catalog).value
                except (DomainError, exprs.EvaluationError):
                    stats.dead_ends += 1
                    continue
                consider(atom, value)
            for fn in cfg.functions:
                fdef = self.catalog.functions[fn]
                for parent in self.tables.forward_levels.get(level - 1, ()):
                    try:
                        if fdef.domain is not None and not fdef.domain(parent.value):
                            raise DomainError(fn)
                        value = exprs._check_magnitude(fdef.evaluator(parent.value))
                    except (DomainError, ValueError, ZeroDivisionError, OverflowError):
                        stats.dead_ends += 1
                        stats.generated += 1
                        continue
                    consider(Apply(fn, (parent.expr,)), value)
            if "neg" in cfg.operators:
                for parent in self.tables.forward_levels.get(level - 1, ()):
                    consider(exprs.Neg(parent.expr), -parent.value)
            for op in cfg.operators:
                if op == "neg":
                    continue
                for left_size in range(1, level - 1):
                    for a in self.tables.forward_levels.get(left_size, ()):
                        for b in self.tables.forward_levels.get(level - 1 - left_size, ()):
                            try:
                                value = exprs.apply_op(op, a.value, b.value)
                            except (DomainError, ValueError, ZeroDivisionError, OverflowError):
                                stats.dead_ends += 1
                                stats.generated += 1
                                continue
                            consider(BinOp(op, a.expr, b.expr), value)

        entries: list[ForwardEntry] = []
        texts_this_level: set[str] = set()
        for _, text, norm, value in sorted(raw, key=lambda r: (r[0], r[1])):
            if text in texts_this_level or self.f_index.is_duplicate(value):
                continue
            texts_this_level.add(text)
            entry = ForwardEntry(value=value, expr=norm, complexity=level)
            self.f_index.add(value, entry)
            entries.append(entry)
            stats.distinct += 1
        self.f_index.flush()
        self.tables.forward_levels[level] = entries
        stats.levels_completed = level
        self.tables.growth_sequence.append(("F", level))

    # -- backward --

    def _backward_steps(self, cost: int) -> Iterator[ChainStep]:
        cfg = self.config
        if cost == 1:
            for fn in cfg.functions:
                if self.catalog.functions[fn].inverse is not None:
                    yield ChainStep(kind="fn", name=fn)
            if "neg" in cfg.operators:
                yield ChainStep(kind="op", name="neg", side=None, operand=None)
            return
        for op in cfg.operators:
            if op == "neg":
                continue
            for operand in self.tables.forward_levels.get(cost - 1, ()):
                yield ChainStep(kind="op", name=op, side="left", operand=operand)
                if op in ("-", "/", "^"):
                    yield ChainStep(kind="op", name=op, side="right", operand=operand)

    def _apply_inverse_step(self, step: ChainStep, v: mp.mpf) -> mp.mpf | None:
        """Value of the remaining unknown, given the candidate value v."""
        if step.kind == "fn":
            inv = self.catalog.functions[step.name].inverse
            if not inv.in_range(v):
                return None
            out = inv.numeric(v)
            return None if isinstance(out, mp.mpc) or not mp.isfinite(out) else out
        if step.name == "neg":
            return -v
        f = step.operand.value
        if step.name == "+":
            return v - f
        if step.name == "-":
            return f - v if step.side == "left" else v + f
        if step.name == "*":
            return None if f == 0 else v / f
        if step.name == "/":
            if step.side == "left":
                return None if v == 0 or f == 0 else f / v
            return v * f
        # ^
        if step.side == "left":
            # candidate = operand ^ rest
            if f <= 0 or f == 1 or v <= 0:
                return None
            return mp.ln(v) / mp.ln(f)
        # candidate = rest ^ operand
        if f == 0 or v <= 0:
            return None
        return mp.power(v, 1 / f)

    def _grow_backward_level(self, level: int) -> None:
        cfg, stats = self.config, self.tables.backward_stats
        self._check_budgets(stats)
        raw: list[tuple[int, str, BackwardEntry]] = []
        with mp.workdps(cfg.working_digits + 5):
            for cost in range(1, level + 1):
                parents = self.tables.backward_levels.get(level - cost, ())
                if not parents:
                    continue
                for step in self._backward_steps(cost):
                    for parent in parents:
                        stats.generated += 1
                        if stats.generated % 256 == 0:
                            self._check_budgets(stats)
                        try:
                            out = self._apply_inverse_step(step, parent.value)
                        except (DomainError, ValueError, ZeroDivisionError, OverflowError):
                            out = None
                        if out is None or out == 0 or not mp.isfinite(out) \
                                or abs(mp.mag(out)) > MAX_VALUE_MAG:
                            stats.dead_ends += 1
                            continue
                        entry = BackwardEntry(value=out, chain=parent.chain + (step,),
                                              complexity=level)
                        raw.append((len(entry.chain), _chain_text(entry.chain), entry))

        entries: list[BackwardEntry] = []
        texts: set[str] = set()
        for _, text, entry in sorted(raw, key=lambda r: (r[0], r[1])):
            if text in texts or self.b_index.is_duplicate(entry.value):
                continue
            texts.add(text)
            self.b_index.add(entry.value, entry)
            entries.append(entry)
            stats.distinct += 1
        self.b_index.flush()
        self.tables.backward_levels[level] = entries
        stats.levels_completed = level
        self.tables.growth_sequence.append(("B", level))


def _chain_text(chain: tuple[ChainStep, ...]) -> str:
    parts = []
    for step in chain:
        if step.kind == "fn" or step.name == "neg":
            parts.append(step.name)
        else:
            parts.append(f"{step.name}{step.side[0]}:{exprs.to_text(step.operand.expr)}")
    return ";".join(parts)


def grow_tables(config: SearchConfig, target: BigFloat) -> SearchTables:
    """Populate both tables level-by-level within the configured budgets."""
    if not config.atoms or not config.operators:
        raise ValueError("need nonempty atom and operator sets")
    return _Grower(config, target).grow()


def invert_chain(chain: tuple[ChainStep, ...], forward_expr: Expr) -> Expr:
    """Rebuild the candidate expression around the matched forward entry."""
    out = forward_expr
    for step in reversed(chain):
        if step.kind == "fn":
            out = Apply(step.name, (out,))
        elif step.name == "neg":
            out = exprs.Neg(out)
        elif step.side == "left":
            out = BinOp(step.name, step.operand.expr, out)
        else:
            out = BinOp(step.name, out, step.operand.expr)
    return out


def _chain_equation(chain: tuple[ChainStep, ...], catalog: Catalog) -> str:
    """The transformed target as an expression in x (for implicit output)."""
    out: Expr = exprs.Const("x")
    for step in chain:
        if step.kind == "fn":
            inv = catalog.functions[step.name].inverse
            out = inv.build(out)
        elif step.name == "neg":
            out = exprs.Neg(out)
        elif step.name == "+":
            out = BinOp("-", out, step.operand.expr)
        elif step.name == "-":
            out = (BinOp("-", step.operand.expr, out) if step.side == "left"
                   else BinOp("+", out, step.operand.expr))
        elif step.name == "*":
            out = BinOp("/", out, step.operand.expr)
        elif step.name == "/":
            out = (BinOp("/", step.operand.expr, out) if step.side == "left"
                   else BinOp("*", out, step.operand.expr))
        elif step.side == "left":
            out = BinOp("/", exprs.apply1("ln", out), exprs.apply1("ln", step.operand.expr))
        else:
            out = BinOp("^", out, BinOp("/", Integer(1), step.operand.expr))
    return exprs.to_text(out)


def match_and_invert(tables: SearchTables, target: BigFloat,
                     config: SearchConfig) -> Iterator[rank.Candidate]:
    """Stream candidates in the deterministic growth-replay order.

    Matches pair each newly grown level against everything the other table
    held at that point; each within-tolerance pair is unwound symbolically,
    re-evaluated, and emitted once per normal form.  Pairs whose inversion
    cannot be evaluated become implicit equations when allowed.
    """
    tol = config.resolved_tolerance(target)
    f_index = _ValueIndex(config.working_digits)
    b_index = _ValueIndex(config.working_digits)
    emitted: set[str] = set()

    def handle_pair(back: BackwardEntry, fwd: ForwardEntry) -> rank.Candidate | None:
        expr = exprs.simplify(invert_chain(back.chain, fwd.expr), config.catalog)
        text = exprs.to_text(expr)
        if text in emitted:
            return None
        try:
            cand = rank.score(expr, target, source=f"bisearch/L{back.complexity + fwd.complexity}",
                              catalog=config.catalog)
        except (DomainError, exprs.EvaluationError):
            if not config.allow_implicit:
                emitted.add(text)
                return None
            equation = f"{_chain_equation(back.chain, config.catalog)} = {exprs.to_text(fwd.expr)}"
            if equation in emitted:
                return None
            emitted.add(equation)
            residual_agree = numcore.agreement(
                back.value, numcore.from_mpf(fwd.value, config.working_digits - 2))
            entropy = (exprs.entropy10(exprs.parse_text(equation.split(" = ")[0],
                                                        config.catalog, extra_names=("x",)),
                                       config.catalog)
                       + exprs.entropy10(fwd.expr, config.catalog))
            return rank.Candidate(
                expr=fwd.expr, text=equation,
                value=numcore.from_mpf(fwd.value, config.working_digits - 2),
                agreement=residual_agree, entropy10=entropy,
                margin=residual_agree - entropy, source="bisearch/implicit",
                verdict=rank.verdict_for(residual_agree - entropy),
                implicit_equation=equation)
        emitted.add(text)
        with mp.workdps(target.working_digits + 8):
            if abs(cand.value.value - target.value) > tol:
                return None
        return cand

    with mp.workdps(config.working_digits + 5):
        for side, level in tables.growth_sequence:
            batch: list[tuple[int, int, str, BackwardEntry, ForwardEntry]] = []
            if side == "F":
                for fwd in tables.forward_levels[level]:
                    for back in b_index.within(fwd.value, tol):
                        batch.append((back.complexity + fwd.complexity, back.complexity,
                                      exprs.to_text(fwd.expr), back, fwd))
                    f_index.add(fwd.value, fwd)
                f_index.flush()
            else:
                for back in tables.backward_levels[level]:
                    for fwd in f_index.within(back.value, tol):
                        batch.append((back.complexity + fwd.complexity, back.complexity,
                                      exprs.to_text(fwd.expr), back, fwd))
                    b_index.add(back.value, back)
                b_index.flush()
            for _, _, _, back, fwd in sorted(batch, key=lambda r: (r[0], r[1], r[2])):
                cand = handle_pair(back, fwd)
                if cand is not None:
                    yield cand


def pareto_stream(candidates: Iterable[rank.Candidate],
                  target: BigFloat) -> Iterator[rank.Candidate]:
    """Pass a candidate only if it is strictly closer than every one before.

    With candidates arriving in roughly non-decreasing complexity order this
    yields approximately the Pareto front of (closeness, complexity).
    """
    best: Fraction | None = None
    targ = target.as_fraction()
    for cand in candidates:
        if cand.implicit_equation is not None:
            yield cand  # closeness of implicit forms is not comparable
            continue
        diff = abs(cand.value.as_fraction() - targ)
        if best is None or diff < best:
            best = diff
            yield cand


def search_stream(config: SearchConfig, target: BigFloat) -> Iterator[rank.Candidate]:
    """Grow tables, then stream matched candidates (Pareto-filtered if asked)."""
    tables = grow_tables(config, target)
    stream = match_and_invert(tables, target, config)
    if config.pareto_filter:
        stream = pareto_stream(stream, target)
    yield from stream
