"""Command-line interface.

Three subcommands:

  qilc synth <file.qil>     synthesize a query for one program
  qilc bench <dir>          run every *.qil file in a directory
  qilc replay <file.qil>    re-run a program on recorded inputs

Reports go to stdout as JSON; human-readable progress, tables, and timing
go to stderr. Exit code 0 means synthesized (and, for replay, agreement),
2 means synthesis failed or a replay mismatch, 1 means a usage, parse, or
type error. Parse and type errors still produce a JSON report with
status "error" rather than a traceback.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import difftest, emit, frontend, interp, report
from .relation import bindings_from_json, value_to_json, values_agree
from .synth import Options, Solution, synthesize

DEFAULT_SEED = 20260816


def _parse_domain(text: str) -> tuple:
    """Accept '0..2' (inclusive range) or '0,1,2' (explicit list)."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        values = tuple(range(int(lo), int(hi) + 1))
    else:
        values = tuple(int(part) for part in text.split(","))
    if not values:
        raise ValueError("empty domain")
    return values


def _add_synth_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--cost-bound", type=int, default=24, metavar="N")
    sub.add_argument("--rel-bound", type=int, default=3, metavar="B")
    sub.add_argument("--int-domain", type=_parse_domain, default=(0, 1, 2), metavar="D")
    sub.add_argument("--cases", type=int, default=1000, metavar="N")
    sub.add_argument("--seed", type=int, default=DEFAULT_SEED, metavar="S")
    sub.add_argument("--timeout", type=float, default=0.0, metavar="SECS")
    sub.add_argument("--jobs", type=int, default=1, metavar="J")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qilc", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)

    synth = subs.add_parser("synth", help="synthesize a query for one program")
    synth.add_argument("file", type=Path)
    _add_synth_flags(synth)

    bench = subs.add_parser("bench", help="run every *.qil file in a directory")
    bench.add_argument("dir", type=Path)
    _add_synth_flags(bench)

    replay = subs.add_parser("replay", help="re-run a program on recorded inputs")
    replay.add_argument("file", type=Path)
    replay.add_argument("--input", type=Path, required=True, metavar="BINDINGS")
    replay.add_argument("--sql", default=None, metavar="QUERY")
    return parser


def _options(args: argparse.Namespace) -> Options:
    return Options(
        cost_bound=args.cost_bound,
        rel_bound=args.rel_bound,
        int_domain=args.int_domain,
        timeout=args.timeout,
        jobs=args.jobs,
    )


def _load_program(path: Path):
    source = path.read_text(encoding="utf-8")
    ast = frontend.parse(source)
    return frontend.typecheck(ast)


def _run_one(path: Path, options: Options, cases: int, seed: int) -> tuple[dict, int]:
    """Synthesize one file; returns (report, exit code)."""
    config = report.config_echo(options, cases, seed)
    name = path.stem
    try:
        tp = _load_program(path)
    except OSError as exc:
        return report.run_report(name, config, None, error=str(exc)), 1
    except frontend.ParseError as exc:
        return report.run_report(name, config, None, error=f"parse error: {exc}"), 1
    except frontend.TypeCheckError as exc:
        return report.run_report(name, config, None, error=f"type error: {exc}"), 1
    name = tp.name
    outcome = synthesize(tp, options)
    if not isinstance(outcome, Solution):
        return report.run_report(name, config, outcome), 2
    diff = difftest.run_cases(tp, outcome.sql, seed=seed, cases=cases)
    code = 0 if diff.ok else 2
    return report.run_report(name, config, outcome, diff), code


def _cmd_synth(args: argparse.Namespace) -> int:
    started = time.monotonic()
    rep, code = _run_one(args.file, _options(args), args.cases, args.seed)
    sys.stdout.write(report.to_json(rep))
    print(f"{rep['programName']}: {rep['status']}", file=sys.stderr)
    print(f"elapsed: {time.monotonic() - started:.2f}s", file=sys.stderr)
    return code


def _cmd_bench(args: argparse.Namespace) -> int:
    started = time.monotonic()
    if not args.dir.is_dir():
        print(f"qilc: not a directory: {args.dir}", file=sys.stderr)
        return 1
    options = _options(args)
    reports = []
    worst = 0
    for path in sorted(args.dir.glob("*.qil")):
        rep, code = _run_one(path, options, args.cases, args.seed)
        reports.append(rep)
        worst = max(worst, code)
        print(f"{rep['programName']}: {rep['status']}", file=sys.stderr)
    sys.stdout.write(report.to_json(report.benchmark_summary(reports)))
    sys.stderr.write(report.table(reports))
    print(f"elapsed: {time.monotonic() - started:.2f}s", file=sys.stderr)
    return worst


def _cmd_replay(args: argparse.Namespace) -> int:
    try:
        tp = _load_program(args.file)
        raw = json.loads(args.input.read_text(encoding="utf-8"))
        inputs = bindings_from_json(raw)
        interp.check_inputs(tp, inputs)
        program_value = interp.run(tp, inputs)
    except (OSError, ValueError, KeyError, frontend.ParseError, frontend.TypeCheckError, interp.InputError) as exc:
        print(f"qilc: {exc}", file=sys.stderr)
        return 1
    out = {
        "programName": tp.name,
        "program": value_to_json(program_value),
        "sql": None,
        "agree": None,
    }
    code = 0
    if args.sql is not None:
        try:
            query = emit.parse_sql(args.sql.strip())
            db = emit.MiniDb.from_values(inputs)
            sql_value = emit.eval_sql(query, db)
        except (emit.SqlSyntaxError, emit.UnknownTable, emit.UnknownColumn, emit.UnknownParam) as exc:
            print(f"qilc: {exc}", file=sys.stderr)
            return 1
        agree = values_agree(program_value, sql_value)
        out["sql"] = value_to_json(sql_value)
        out["agree"] = agree
        code = 0 if agree else 2
    sys.stdout.write(report.to_json(out))
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "synth":
        return _cmd_synth(args)
    if args.command == "bench":
        return _cmd_bench(args)
    return _cmd_replay(args)


if __name__ == "__main__":
    sys.exit(main())
