"""Command-line front end: hunts, table building, scoring, nsimplify,
enumeration.

Exit codes: 0 when a hunt accepts at least one candidate (or a non-hunt
subcommand succeeds), 1 when a hunt accepts nothing, 2 on usage errors.
``--json`` switches to line-delimited JSON records carrying the same
candidate set as the text output.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import mpmath as mp

from . import bisearch, exprs, numcore, pipeline, tables
from .exprs import parse_text, to_text

EXIT_FOUND = 0
EXIT_NONE = 1
EXIT_USAGE = 2


def _parse_size(text: str) -> int:
    text = text.strip().upper()
    factor = 1
    for suffix, mult in (("K", 1 << 10), ("M", 1 << 20), ("G", 1 << 30)):
        if text.endswith(suffix):
            factor = mult
            text = text[:-1]
            break
    return int(float(text) * factor)


def _parse_atoms(text: str) -> tuple[exprs.Expr, ...]:
    return tuple(parse_text(t.strip()) for t in text.split(",") if t.strip())


def _split_list(text: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="consthunt",
        description="Propose exact closed forms that a float approximates.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_hunt = sub.add_parser("hunt", help="identify a float constant")
    p_hunt.add_argument("value", help="decimal literal, optionally with `n or @n precision suffix")
    p_hunt.add_argument("--engines", default="lookup,relations,bisearch",
                        help="comma list from: lookup,relations,bisearch")
    p_hunt.add_argument("--table", action="append", default=[],
                        help="lookup table file (repeatable)")
    p_hunt.add_argument("-l", "--level", type=int, default=None,
                        help="max search complexity per table")
    p_hunt.add_argument("--tolerance", default=None, help="absolute match tolerance")
    p_hunt.add_argument("--digits", type=int, default=None,
                        help="override the trusted digit count")
    p_hunt.add_argument("--atoms", default=None, help="search atoms, comma list")
    p_hunt.add_argument("--ops", default=None, help="search operators, comma list")
    p_hunt.add_argument("--fns", default=None, help="search functions, comma list")
    p_hunt.add_argument("-s", "--implicit", action="store_true",
                        help="allow implicit equational results")
    p_hunt.add_argument("--pareto", action="store_true",
                        help="only stream strictly improving candidates")
    p_hunt.add_argument("--min-margin", type=float, default=0.0)
    p_hunt.add_argument("--min-agreement", type=float, default=None)
    p_hunt.add_argument("--bases", default=None,
                        help="relation basis vectors, ';'-separated comma lists")
    p_hunt.add_argument("--battery", default=None, help="smart-lookup transform file")
    p_hunt.add_argument("--persist", default=None,
                        help="comma list of precisions for a persistence run")
    p_hunt.add_argument("--time-budget", type=float, default=None, help="seconds")
    p_hunt.add_argument("--memory-budget", default=None, help="bytes (K/M/G suffixes ok)")
    p_hunt.add_argument("--json", action="store_true", help="line-delimited JSON output")

    p_build = sub.add_parser("build-table", help="generate a lookup table")
    p_build.add_argument("--output", required=True)
    p_build.add_argument("--expr", action="append", default=[],
                         help="expression to tabulate (repeatable)")
    p_build.add_argument("--constants", default="", help="comma list of constant names")
    p_build.add_argument("--functions", default="", help="comma list applied to the lattice")
    p_build.add_argument("--numerator-bound", type=int, default=0)
    p_build.add_argument("--denominator-bound", type=int, default=0)
    p_build.add_argument("--multipliers", default="1",
                         help="comma list of lattice multipliers")
    p_build.add_argument("--include-plain", action="store_true",
                         help="tabulate bare lattice arguments too")
    p_build.add_argument("--complexity-cap", type=int, default=None)

    p_score = sub.add_parser("score", help="score an expression against a target")
    p_score.add_argument("expression")
    p_score.add_argument("--target", required=True)
    p_score.add_argument("--json", action="store_true")

    p_nsimp = sub.add_parser("nsimplify", help="reduce an expression's entropy")
    p_nsimp.add_argument("expression")
    p_nsimp.add_argument("--digits", type=int, default=26, help="probe digits")

    p_enum = sub.add_parser("enumerate", help="list all expressions of a complexity")
    p_enum.add_argument("--atoms", required=True)
    p_enum.add_argument("--ops", default="+,-,*,/,^")
    p_enum.add_argument("--fns", default="")
    p_enum.add_argument("--complexity", type=int, required=True)
    p_enum.add_argument("--limit", type=int, default=None)

    p_rand = sub.add_parser("random-expr", help="sample one expression uniformly")
    p_rand.add_argument("--atoms", required=True)
    p_rand.add_argument("--ops", default="+,-,*,/,^")
    p_rand.add_argument("--fns", default="")
    p_rand.add_argument("--complexity", type=int, required=True)
    p_rand.add_argument("--seed", type=int, required=True)

    return parser


def _hunt_request(args) -> pipeline.HuntRequest:
    raw = args.value
    if args.digits is not None:
        raw = raw.split("`")[0].split("@")[0] + f"`{args.digits}"
    search = pipeline.default_search_config()
    overrides = {}
    if args.level is not None:
        overrides["max_complexity"] = args.level
    if args.tolerance is not None:
        overrides["tolerance"] = mp.mpf(args.tolerance)
    if args.atoms is not None:
        overrides["atoms"] = _parse_atoms(args.atoms)
    if args.ops is not None:
        overrides["operators"] = _split_list(args.ops)
    if args.fns is not None:
        overrides["functions"] = _split_list(args.fns)
    if args.implicit:
        overrides["allow_implicit"] = True
    if args.pareto:
        overrides["pareto_filter"] = True
    if args.time_budget is not None:
        overrides["time_budget"] = args.time_budget
    if args.memory_budget is not None:
        overrides["memory_budget"] = _parse_size(args.memory_budget)
    search = dataclasses.replace(search, **overrides)

    kwargs = {}
    if args.bases:
        kwargs["relation_bases"] = tuple(
            _split_list(chunk) for chunk in args.bases.split(";") if chunk.strip())
    if args.persist:
        kwargs["precisions"] = tuple(int(p) for p in _split_list(args.persist))
    return pipeline.HuntRequest(
        raw_input=raw,
        engines=_split_list(args.engines),
        search=search,
        table_paths=tuple(args.table),
        min_agreement=args.min_agreement,
        min_margin=args.min_margin,
        smart_battery_path=args.battery,
        **kwargs,
    )


def _print_candidate(sc: pipeline.ScoredCandidate, as_json: bool, out) -> None:
    if as_json:
        print(json.dumps({"type": "candidate", **sc.to_dict()}), file=out)
        return
    cand = sc.candidate
    flags = ""
    if not sc.accepted:
        flags = f"  [rejected: {sc.reject_reason}]"
    elif cand.suspect:
        flags = "  [suspect]"
    print(f"{cand.text}  =  {mp.nstr(cand.value.value, min(cand.value.working_digits, 20))}"
          f"   agreement {cand.agreement}  entropy10 {cand.entropy10:.2f}"
          f"  margin {cand.margin:+.2f}  {cand.verdict}  ({cand.source}){flags}", file=out)


def _print_footer(report: pipeline.HuntReport, as_json: bool, out) -> None:
    if as_json:
        d = report.to_dict()
        print(json.dumps({"type": "report",
                          "input": d["input"], "thresholds": d["thresholds"],
                          "groups": d["groups"], "engine_stats": d["engine_stats"]}),
              file=out)
        return
    for warning in report.warnings:
        print(f"warning: {warning}", file=out)
    for stat in report.engine_stats:
        line = f"# {stat.engine}: {stat.candidates} candidates in {stat.seconds:.2f}s"
        if stat.error:
            line += f"  (error: {stat.error})"
        if "forward" in stat.extra:
            fwd, bwd = stat.extra["forward"], stat.extra["backward"]
            line += (f"  [forward {fwd['generated']} generated / {fwd['distinct']} distinct;"
                     f" backward {bwd['generated']} / {bwd['distinct']};"
                     f" ~{(fwd['distinct'] + bwd['distinct']) * bisearch.BYTES_PER_ENTRY // 1024} KB]")
        print(line, file=out)
    accepted = len(report.accepted())
    print(f"# {accepted} accepted / {len(report.candidates)} scored;"
          f" thresholds agreement >= {report.min_agreement:g}, margin >= {report.min_margin:g}",
          file=out)


def _cmd_hunt(args, out) -> int:
    request = _hunt_request(args)
    if request.precisions:
        target = numcore.parse_float_input(request.raw_input)

        def target_source(p: int) -> str:
            if p > target.working_digits:
                raise pipeline.HuntError(
                    f"precision {p} exceeds the supplied digits")
            with mp.workdps(target.working_digits + 5):
                return f"{mp.nstr(target.value, p)}`{p}"

        outcome = pipeline.hunt_with_persistence(request, target_source)
        report = outcome.report
        for sc in report.candidates:
            _print_candidate(sc, args.json, out)
        if args.json:
            print(json.dumps({"type": "persistence",
                              "precisions": list(outcome.persistence.precisions),
                              "entries": [
                                  {"text": e.text, "presence": list(e.presence),
                                   "stable_from": e.stable_from}
                                  for e in outcome.persistence.entries]}), file=out)
        else:
            for entry in outcome.persistence.entries:
                marks = "".join("x" if p else "." for p in entry.presence)
                stable = (f"stable from {entry.stable_from}" if entry.stable_from
                          else "transient")
                print(f"persistence [{marks}] {stable}: {entry.text}", file=out)
        _print_footer(report, args.json, out)
        return EXIT_FOUND if report.accepted() else EXIT_NONE

    streamed: list[str] = []

    def on_candidate(sc: pipeline.ScoredCandidate):
        streamed.append(sc.candidate.text)
        _print_candidate(sc, args.json, out)

    report = pipeline.hunt(request, on_candidate=on_candidate)
    _print_footer(report, args.json, out)
    return EXIT_FOUND if report.accepted() else EXIT_NONE


def _cmd_build_table(args, out) -> int:
    spec = tables.GeneratorSpec(
        expressions=tuple(parse_text(t) for t in args.expr),
        constants=_split_list(args.constants),
        functions=_split_list(args.functions),
        numerator_bound=args.numerator_bound,
        denominator_bound=args.denominator_bound,
        multipliers=tuple(parse_text(t) for t in _split_list(args.multipliers)),
        include_plain_arguments=args.include_plain,
        complexity_cap=args.complexity_cap,
    )
    count = tables.build_table(spec, args.output)
    print(f"wrote {count} records to {args.output}", file=out)
    return EXIT_FOUND


def _cmd_score(args, out) -> int:
    target = numcore.parse_float_input(args.target)
    from . import rank
    cand = rank.score(parse_text(args.expression), target, source="cli/score")
    sc = pipeline.ScoredCandidate(candidate=cand, accepted=True, reject_reason=None)
    _print_candidate(sc, args.json, out)
    return EXIT_FOUND


def _cmd_nsimplify(args, out) -> int:
    result = pipeline.nsimplify(parse_text(args.expression), probe_digits=args.digits)
    print(to_text(result), file=out)
    return EXIT_FOUND


def _subset_from_args(args) -> exprs.CatalogSubset:
    return exprs.CatalogSubset(atoms=_parse_atoms(args.atoms),
                               functions=_split_list(args.fns),
                               operators=_split_list(args.ops))


def _cmd_enumerate(args, out) -> int:
    subset = _subset_from_args(args)
    count = 0
    for e in exprs.enumerate_expressions(subset, args.complexity):
        print(to_text(e), file=out)
        count += 1
        if args.limit is not None and count >= args.limit:
            break
    return EXIT_FOUND


def _cmd_random_expr(args, out) -> int:
    subset = _subset_from_args(args)
    print(to_text(exprs.random_expression(subset, args.complexity, args.seed)), file=out)
    return EXIT_FOUND


_COMMANDS = {
    "hunt": _cmd_hunt,
    "build-table": _cmd_build_table,
    "score": _cmd_score,
    "nsimplify": _cmd_nsimplify,
    "enumerate": _cmd_enumerate,
    "random-expr": _cmd_random_expr,
}


def main(argv: list[str] | None = None, out=None) -> int:
    out = out if out is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_USAGE if err.code not in (0,) else 0
    try:
        return _COMMANDS[args.command](args, out)
    except (numcore.GroomingError, exprs.ParseError, pipeline.HuntError,
            tables.TableBuildError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        print("interrupted; partial results above", file=sys.stderr)
        return EXIT_NONE


if __name__ == "__main__":
    sys.exit(main())
