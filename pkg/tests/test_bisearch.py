import mpmath as mp
import pytest

from consthunt import bisearch as bs
from consthunt import exprs as ex
from consthunt import numcore as nc
from consthunt import rank
from consthunt.bisearch import (
    BackwardEntry,
    ChainStep,
    ForwardEntry,
    SearchConfig,
    default_tolerance,
    grow_tables,
    invert_chain,
    match_and_invert,
    pareto_stream,
    search_stream,
)
from consthunt.exprs import Const, Integer, Rational, enumerate_expressions, to_text

TINY = SearchConfig(
    atoms=(Integer(2), Const("pi")),
    operators=("+", "*"),
    functions=("sqrt",),
    tolerance=mp.mpf("1e-9"),
    max_complexity=5,
)


def tiny_target(text="0.5"):
    return nc.parse_float_input(text)


class TestGrow:
    def test_level_one_is_atoms(self):
        cfg = SearchConfig(atoms=(Integer(1), Integer(2), Integer(3), Const("pi"), Const("e")),
                           operators=("+", "*", "^"), functions=(),
                           tolerance=mp.mpf("1e-9"), max_complexity=1)
        tables = grow_tables(cfg, tiny_target())
        got = {to_text(e.expr) for e in tables.forward_levels[1]}
        assert got == {"1", "2", "3", "pi", "e"}

    def test_forward_counts_match_enumerate_plus_value_dedup(self):
        tables = grow_tables(TINY, tiny_target())
        wd = TINY.working_digits
        kept_values = []

        def is_dup(v):
            for u in kept_values:
                scale = max(abs(u), abs(v), mp.mpf("1e-30"))
                if abs(u - v) <= scale * mp.mpf(10) ** -(wd - 3):
                    return True
            return False

        subset = ex.CatalogSubset(atoms=TINY.atoms, functions=TINY.functions,
                                  operators=TINY.operators)
        with mp.workdps(wd + 5):
            for level in range(1, TINY.max_complexity + 1):
                expected = 0
                for e in enumerate_expressions(subset, level):
                    try:
                        v = ex.evaluate(e, wd).value
                    except (ex.DomainError, ex.EvaluationError):
                        continue
                    if not is_dup(v):
                        kept_values.append(v)
                        expected += 1
                assert len(tables.forward_levels[level]) == expected, level

    def test_alternation_balance(self):
        tables = grow_tables(TINY, tiny_target())
        f_total = b_total = 0
        sizes = {("F", lvl): len(v) for lvl, v in tables.forward_levels.items()}
        sizes.update({("B", lvl): len(v) for lvl, v in tables.backward_levels.items()})
        b_total += len(tables.backward_levels[0])
        for side, level in tables.growth_sequence:
            grown = sizes[(side, level)]
            if side == "F":
                f_total += grown
            else:
                b_total += grown
            assert abs(f_total - b_total) <= max(grown, 1) + 1, (side, level)

    def test_memory_budget_truncates_with_marker(self):
        cfg = SearchConfig(atoms=TINY.atoms, operators=TINY.operators,
                           functions=TINY.functions, tolerance=mp.mpf("1e-9"),
                           max_complexity=6, memory_budget=60 * bs.BYTES_PER_ENTRY)
        tables = grow_tables(cfg, tiny_target())
        assert tables.forward_stats.truncated or tables.backward_stats.truncated
        assert (tables.forward_stats.distinct + tables.backward_stats.distinct
                <= 60 + max(len(v) for v in tables.forward_levels.values()) + 1024)

    def test_dropped_nonreal_and_overflow(self):
        cfg = SearchConfig(atoms=(Integer(-1), Integer(2)), operators=("^",),
                           functions=("sqrt", "ln"), tolerance=mp.mpf("1e-9"),
                           max_complexity=4)
        tables = grow_tables(cfg, tiny_target())
        # sqrt(-1), ln(-1) etc. must have been counted as dead ends, not stored
        assert tables.forward_stats.dead_ends > 0
        for level in tables.forward_levels.values():
            for entry in level:
                assert mp.isfinite(entry.value)

    def test_requires_atoms_and_operators(self):
        with pytest.raises(ValueError):
            grow_tables(SearchConfig(atoms=(), operators=("+",)), tiny_target())


class TestMatching:
    def test_soundness_every_candidate_within_tolerance(self):
        target = nc.parse_float_input("5.1415926")  # pi + 2 rounded
        cfg = SearchConfig(atoms=(Integer(2), Const("pi")), operators=("+", "*"),
                           functions=("sqrt",), tolerance=mp.mpf("1e-4"),
                           max_complexity=5)
        cands = list(search_stream(cfg, target))
        assert cands
        with mp.workdps(40):
            for cand in cands:
                value = ex.evaluate(cand.expr, 30).value
                assert abs(value - target.value) <= mp.mpf("1e-4")

    def test_exhaustiveness_on_completed_levels(self):
        # brute-force oracle over every catalog expression of complexity <= 6
        target = nc.parse_float_input("1.7724538509")  # sqrt(pi)
        tol = mp.mpf("1e-4")
        cfg = SearchConfig(atoms=(Integer(2), Const("pi")), operators=("+", "*"),
                           functions=("sqrt",), tolerance=tol, max_complexity=6)
        cands = list(search_stream(cfg, target))
        cand_values = []
        with mp.workdps(40):
            for cand in cands:
                cand_values.append(ex.evaluate(cand.expr, 30).value)
        subset = ex.CatalogSubset(atoms=cfg.atoms, functions=cfg.functions,
                                  operators=cfg.operators)
        missing = []
        with mp.workdps(40):
            for level in range(1, 7):
                for e in enumerate_expressions(subset, level):
                    try:
                        v = ex.evaluate(e, 30).value
                    except (ex.DomainError, ex.EvaluationError):
                        continue
                    if abs(v - target.value) <= tol:
                        if not any(abs(v - cv) <= mp.mpf(10) ** -15 for cv in cand_values):
                            missing.append(to_text(e))
        assert missing == []

    def test_determinism(self):
        target = nc.parse_float_input("5.1415926")
        cfg = SearchConfig(atoms=(Integer(2), Const("pi")), operators=("+", "*"),
                           functions=("sqrt",), tolerance=mp.mpf("1e-4"),
                           max_complexity=5)
        a = [c.text for c in search_stream(cfg, target)]
        b = [c.text for c in search_stream(cfg, target)]
        assert a == b

    def test_forward_only_mode(self):
        target = nc.parse_float_input("3.1415926535897932")
        cfg = SearchConfig(atoms=(Integer(2), Const("pi")), operators=("+", "*"),
                           functions=("sqrt",), tolerance=mp.mpf("1e-12"),
                           max_complexity=4, forward_only=True)
        tables = grow_tables(cfg, target)
        assert set(tables.backward_levels) == {0}
        cands = list(match_and_invert(tables, target, cfg))
        assert [c.text for c in cands] == ["pi"]

    def test_no_duplicate_normal_forms(self):
        target = nc.parse_float_input("5.1415926")
        cfg = SearchConfig(atoms=(Integer(2), Const("pi")), operators=("+", "*"),
                           functions=("sqrt",), tolerance=mp.mpf("1e-3"),
                           max_complexity=5)
        texts = [c.text for c in search_stream(cfg, target)]
        assert len(texts) == len(set(texts))


class TestChainInversion:
    def test_round_trip_numeric(self):
        # apply inverse steps numerically, then check the symbolic rebuild
        # reproduces the starting value
        with mp.workdps(30):
            f1 = ForwardEntry(value=mp.sqrt(2), expr=ex.apply1("sqrt", Integer(2)), complexity=2)
            f2 = ForwardEntry(value=mp.mpf(3), expr=Integer(3), complexity=1)
            chains = [
                (ChainStep("fn", "ln"),),
                (ChainStep("op", "+", "left", f1),),
                (ChainStep("op", "-", "right", f2), ChainStep("fn", "exp")),
                (ChainStep("op", "/", "left", f2), ChainStep("op", "^", "right", f2)),
            ]
            grower = bs._Grower(SearchConfig(atoms=(Integer(2),), operators=("+", "-", "*", "/", "^"),
                                             functions=("sqrt", "exp", "ln"),
                                             tolerance=mp.mpf("1e-9")),
                                nc.parse_float_input("0.73105"))
            for chain in chains:
                v = mp.mpf("0.73105")
                ok = True
                for step in chain:
                    v = grower._apply_inverse_step(step, v)
                    if v is None:
                        ok = False
                        break
                if not ok:
                    continue
                # pretend the final value matched a forward entry holding it
                matched = ForwardEntry(value=v, expr=Const("pi"), complexity=1)
                rebuilt = invert_chain(chain, matched.expr)
                value = ex.eval_raw(rebuilt, ex.DEFAULT_CATALOG, {"pi": v})
                assert mp.almosteq(value, mp.mpf("0.73105"), rel_eps=mp.mpf(10) ** -25), chain


def _mk_candidate(value_text, entropy=1.0):
    value = nc.parse_float_input(value_text)
    return rank.Candidate(expr=Const("pi"), text=value_text, value=value,
                          agreement=10, entropy10=entropy, margin=10 - entropy,
                          source="test", verdict="Good")


class TestParetoStream:
    TARGET = nc.parse_float_input("1.0000")

    def test_strictly_decreasing_differences_pass(self):
        stream = [_mk_candidate("1.5"), _mk_candidate("1.25"), _mk_candidate("0.9999")]
        out = list(pareto_stream(stream, self.TARGET))
        assert [c.text for c in out] == ["1.5", "1.25", "0.9999"]

    def test_equal_difference_suppressed(self):
        stream = [_mk_candidate("1.25"), _mk_candidate("0.75"), _mk_candidate("0.9")]
        out = list(pareto_stream(stream, self.TARGET))
        # 0.75 ties 1.25 in |difference| and is suppressed; 0.9 improves
        assert [c.text for c in out] == ["1.25", "0.9"]

    def test_worse_candidates_dropped(self):
        stream = [_mk_candidate("1.001"), _mk_candidate("1.2"), _mk_candidate("1.0005")]
        out = list(pareto_stream(stream, self.TARGET))
        assert [c.text for c in out] == ["1.001", "1.0005"]


class TestDefaultTolerance:
    def test_sixteen_digit_policy(self):
        t = nc.parse_float_input("0.1857930606004482")
        tol = default_tolerance(t)
        # 1000 units in the last (16th) entered place
        assert mp.almosteq(tol, mp.mpf(10) ** (0 - 16) * 1000, rel_eps=mp.mpf("1e-10"))

    def test_seven_digit_policy(self):
        t = nc.parse_float_input("0.1857930")
        tol = default_tolerance(t)
        assert mp.almosteq(tol, mp.mpf(10) ** (0 - 7) * 10, rel_eps=mp.mpf("1e-10"))

    def test_override_wins(self):
        cfg = SearchConfig(atoms=(Integer(2),), tolerance=mp.mpf("1e-3"))
        assert cfg.resolved_tolerance(nc.parse_float_input("0.5")) == mp.mpf("1e-3")
