"""``kbctl``: check, classify, materialize, query, explain and evaluate a KB.

Results go to stdout (or ``-o``), diagnostics to stderr.  Exit codes:

====  =====================================================
0     success
1     the knowledge base is inconsistent
2     KB parse or declaration error, unreadable KB file
3     unsafe rule
4     query, fact or suite file missing or malformed
5     fact not entailed (explain)
6     a with-rules expectation failed (eval)
====  =====================================================
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .el import classify_kb, render_taxonomy_tree, render_taxonomy_tsv
from .engine import (
    check_consistency,
    enumerate_justifications,
    justify,
    materialize,
    render_consistency,
    render_facts_tsv,
    render_proof,
)
from .errors import KBError, NotEntailed, UnknownSymbol, UnsafeRule
from .model import KnowledgeBase
from .query import evaluate, render_tsv
from .syntax import load_kb, parse_fact, parse_query

EXIT_OK = 0
EXIT_INCONSISTENT = 1
EXIT_PARSE = 2
EXIT_UNSAFE = 3
EXIT_QUERY = 4
EXIT_NOT_ENTAILED = 5
EXIT_EVAL = 6

log = logging.getLogger("kbctl")


class _Fail(Exception):
    def __init__(self, code: int, message: str) -> None:
        super().__init__(message)
        self.code = code


def _use_color(stream) -> bool:
    mode = os.environ.get("KBCTL_COLOR", "auto").lower()
    if mode == "never":
        return False
    return hasattr(stream, "isatty") and stream.isatty() and os.environ.get("NO_COLOR") is None


class _Formatter(logging.Formatter):
    COLORS = {logging.ERROR: "31", logging.WARNING: "33"}

    def __init__(self, color: bool) -> None:
        super().__init__()
        self.color = color

    def format(self, record: logging.LogRecord) -> str:
        label = record.levelname.lower()
        if self.color and record.levelno in self.COLORS:
            label = f"\x1b[{self.COLORS[record.levelno]}m{label}\x1b[0m"
        return f"kbctl: {label}: {record.getMessage()}"


def _setup_logging(verbose: bool) -> logging.Handler:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_Formatter(_use_color(sys.stderr)))
    root = logging.getLogger("kbctl")
    root.addHandler(handler)
    root.setLevel(logging.DEBUG if verbose else logging.INFO)
    root.propagate = False
    return handler


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _kb_paths(args) -> list[Path]:
    paths: list[Path] = []
    if args.corpus:
        from .corpus import corpus_paths

        paths.extend(corpus_paths(args.corpus))
    paths.extend(Path(p) for p in args.kb)
    return paths


def _load(args) -> KnowledgeBase:
    paths = _kb_paths(args)
    try:
        return load_kb(paths)
    except OSError as exc:
        raise _Fail(EXIT_PARSE, f"cannot read {exc.filename}: {exc.strerror}") from None
    except UnsafeRule as exc:
        raise _Fail(EXIT_UNSAFE, str(exc)) from None
    except KBError as exc:
        raise _Fail(EXIT_PARSE, str(exc)) from None


def _inconsistent_warning(m) -> int:
    if m.consistent:
        return EXIT_OK
    log.warning("knowledge base is inconsistent (%d clash%s); run 'kbctl check' for details",
                len(m.clashes), "" if len(m.clashes) == 1 else "es")
    return EXIT_INCONSISTENT


def cmd_check(args) -> int:
    kb = _load(args)
    classify_kb(kb)
    m = materialize(kb, with_rules=not args.no_rules)
    report = check_consistency(m)
    _write(render_consistency(report, m), args.output)
    return EXIT_OK if report.consistent else EXIT_INCONSISTENT


def cmd_classify(args) -> int:
    kb = _load(args)
    taxonomy = classify_kb(kb)
    render = render_taxonomy_tree if args.format == "tree" else render_taxonomy_tsv
    _write(render(taxonomy), args.output)
    return EXIT_OK


def cmd_materialize(args) -> int:
    kb = _load(args)
    m = materialize(kb, with_rules=not args.no_rules)
    _write(render_facts_tsv(m), args.output)
    return _inconsistent_warning(m)


def cmd_query(args) -> int:
    try:
        text = Path(args.query).read_text(encoding="utf-8")
    except OSError as exc:
        raise _Fail(EXIT_QUERY, f"cannot read query {args.query}: {exc.strerror}") from None
    try:
        query = parse_query(text, args.query)
    except KBError as exc:
        raise _Fail(EXIT_QUERY, str(exc)) from None
    kb = _load(args)
    m = materialize(kb, with_rules=not args.no_rules)
    try:
        table = evaluate(query, m)
    except UnknownSymbol as exc:
        raise _Fail(EXIT_QUERY, str(exc)) from None
    _write(render_tsv(table), args.output)
    return EXIT_OK if m.consistent else EXIT_INCONSISTENT  # evaluate already warned


def cmd_explain(args) -> int:
    kb = _load(args)
    try:
        fact = parse_fact(args.fact, kb)
    except KBError as exc:
        raise _Fail(EXIT_QUERY, str(exc)) from None
    m = materialize(kb, with_rules=not args.no_rules)
    try:
        if args.all:
            trees = enumerate_justifications(fact, m, args.max_k)
        else:
            trees = [justify(fact, m)]
    except NotEntailed:
        raise _Fail(EXIT_NOT_ENTAILED, f"{fact} is not entailed") from None
    _write("\n".join(render_proof(t, m) for t in trees), args.output)
    return EXIT_OK


def cmd_eval(args) -> int:
    from .suite import load_suite, render_report, render_verdicts, run_both

    suite_path = args.suite
    if suite_path is None:
        from .corpus import SUITE

        suite_path = SUITE
    try:
        suite = load_suite(suite_path)
    except OSError as exc:
        raise _Fail(EXIT_QUERY, f"cannot read suite {suite_path}: {exc.strerror}") from None
    except KBError as exc:
        raise _Fail(EXIT_QUERY, str(exc)) from None
    kb = _load(args)
    report = run_both(kb, suite)
    _write(render_report(report), args.output)
    if args.verdicts:
        _write(render_verdicts(report), args.verdicts)
    figure = args.figure
    if figure is None and args.output is not None:
        figure = str(Path(args.output).with_suffix(".png"))
    if figure is not None:
        from .plotting import save_report_figure

        save_report_figure(report, figure)
    failures = report.failures()
    for v in failures:
        log.error("%s not resolved with rules: %s", v.question, v.detail)
    return EXIT_EVAL if failures else EXIT_OK


def _positive(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {n}")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kbctl", description="Reason over EL ontologies with Horn rules.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def command(name: str, func, help: str, rules_flag: bool = True) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help, description=help)
        p.add_argument("kb", nargs="*", help="knowledge-base files, concatenated in order")
        p.add_argument("--corpus", choices=("rules", "broad"),
                       help="prepend the bundled corpus variant (ontology plus patients)")
        p.add_argument("-o", "--output", help="write results here instead of stdout")
        if rules_flag:
            p.add_argument("--no-rules", action="store_true", help="ignore user rules")
        p.set_defaults(func=func)
        return p

    command("check", cmd_check, "check consistency and report clashes")
    p = command("classify", cmd_classify, "print the inferred class hierarchy", rules_flag=False)
    p.add_argument("--format", choices=("tsv", "tree"), default="tsv")
    command("materialize", cmd_materialize, "print every entailed fact as TSV")
    p = command("query", cmd_query, "answer a SPARQL-subset query")
    p.add_argument("-q", "--query", required=True, help="query file (.rq)")
    p = command("explain", cmd_explain, "show how a fact was derived")
    p.add_argument("--fact", required=True, help="fact such as 'C(a)' or 'p(a, b)'")
    p.add_argument("--all", action="store_true", help="show up to --max-k distinct proofs")
    p.add_argument("--max-k", type=_positive, default=8)
    p = command("eval", cmd_eval, "run a competency-question suite with and without rules",
                rules_flag=False)
    p.add_argument("--suite", help="suite TSV (default: the bundled suite)")
    p.add_argument("--figure", help="write a bar chart of the report (default: next to -o)")
    p.add_argument("--verdicts", help="write per-question verdicts as TSV")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.kb and not args.corpus:
        parser.error(f"{args.command}: give at least one knowledge-base file or --corpus")
    handler = _setup_logging(args.verbose)
    try:
        return args.func(args)
    except _Fail as exc:
        log.error("%s", exc)
        return exc.code
    finally:
        logging.getLogger("kbctl").removeHandler(handler)


if __name__ == "__main__":
    sys.exit(main())
