"""Command-line front end: run a corpus, lint a KB, compare against the oracles."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from . import parser as grammar
from .errors import KBError, OracleLimit, SituateError
from .kb import load_kb
from .ontology import effective_restrictions_oracle, lint_ontology
from .session import DEFAULT_SHIFT_GAP, Session
from .situation import dump_situation

EXIT_OK, EXIT_STRICT, EXIT_KB, EXIT_IO = 0, 1, 2, 3


def _shift_gap(text: str) -> int:
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError("shift gap must be >= 0")
    return n


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="situate", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="interpret a transcript or sentence file")
    run.add_argument("--kb", required=True, type=Path)
    run.add_argument("--input", required=True, type=Path)
    run.add_argument("--mode", choices=("transcript", "sentences"), default="transcript")
    strict = run.add_mutually_exclusive_group()
    strict.add_argument("--strict", dest="strict", action="store_true", default=True)
    strict.add_argument("--lenient", dest="strict", action="store_false")
    run.add_argument("--dump", type=Path, help="write the final dump here (default stdout)")
    run.add_argument("--trace", type=Path, help="write the event trace here")
    run.add_argument("--shift-gap", type=_shift_gap, default=DEFAULT_SHIFT_GAP,
                     help="minutes of silence that count as a shift (0 disables)")
    run.add_argument("--no-history", dest="history", action="store_false", default=True,
                     help="ignore the KB's history.json seed")

    lint = sub.add_parser("lint", help="report ontology and lexicon diagnostics")
    lint.add_argument("--kb", required=True, type=Path)

    oracle = sub.add_parser("oracle", help="compare incremental results with the oracles")
    oracle.add_argument("--kb", required=True, type=Path)
    oracle.add_argument("--input", type=Path)
    oracle.add_argument("--mode", choices=("transcript", "sentences"), default="transcript")
    oracle.add_argument("--limit", type=int, default=grammar.ORACLE_TOKEN_LIMIT)
    return ap


def _load(path: Path, err):
    try:
        return load_kb(path), None
    except KBError as exc:
        print(f"kb error: {exc}", file=err)
        return None, EXIT_KB
    except OSError as exc:
        print(f"io error: {exc}", file=err)
        return None, EXIT_IO


def _read_lines(path: Path, err):
    try:
        return path.read_text(encoding="utf-8").splitlines(), None
    except OSError as exc:
        print(f"io error: {exc}", file=err)
        return None, EXIT_IO


def _write(path: Optional[Path], text: str, out):
    if path is None:
        out.write(text)
    else:
        path.write_text(text, encoding="utf-8")


def cmd_lint(args, out, err) -> int:
    kb, code = _load(args.kb, err)
    if kb is None:
        return code
    diags = lint_ontology(kb)
    for d in diags:
        print(d, file=out)
    errors = sum(d.level == "error" for d in diags)
    print(f"{errors} error(s), {len(diags) - errors} warning(s)", file=out)
    return EXIT_KB if errors else EXIT_OK


def cmd_run(args, out, err) -> int:
    kb, code = _load(args.kb, err)
    if kb is None:
        return code
    diags = [d for d in lint_ontology(kb) if d.level == "error"]
    if diags:
        for d in diags:
            print(d, file=err)
        return EXIT_KB
    lines, code = _read_lines(args.input, err)
    if lines is None:
        return code
    session = Session(kb, args.strict, args.shift_gap, kb.history if args.history else None)
    status = EXIT_OK
    for number, text in enumerate(lines, start=1):
        try:
            session.feed(text, args.mode, number)
        except SituateError as exc:
            span = getattr(exc, "span", None)
            where = f"line {getattr(exc, 'line', number)}"
            if span is not None:
                where += f" span {span[0]}-{span[1]}"
            print(f"error: {where}: {type(exc).__name__}: {exc}", file=err)
            status = EXIT_STRICT
            break
    try:
        if args.trace is not None:
            args.trace.write_text("".join(e.format() + "\n" for e in session.sit.events),
                                  encoding="utf-8")
        _write(args.dump, dump_situation(session.sit), out)
    except OSError as exc:
        print(f"io error: {exc}", file=err)
        return EXIT_IO
    return status


def _message(text: str, mode: str) -> str:
    if mode == "transcript":
        parsed = grammar.parse_transcript_line(text)
        return parsed[2] if parsed else text
    return text


def cmd_oracle(args, out, err) -> int:
    kb, code = _load(args.kb, err)
    if kb is None:
        return code
    mismatches = 0
    onto = kb.ontology
    for name in sorted(onto.composites):
        comp = onto.composites[name]
        cat = onto.categories[name]
        expected = effective_restrictions_oracle(onto, comp.members, cat.restrictions,
                                                 cat.defaults)
        ok = expected == comp.variable_table
        mismatches += not ok
        print(f"composite {name}: {'match' if ok else 'MISMATCH'}", file=out)
    if args.input is not None:
        lines, code = _read_lines(args.input, err)
        if lines is None:
            return code
        for number, text in enumerate(lines, start=1):
            if not text.strip():
                continue
            tokens = grammar.tokenize(_message(text, args.mode), kb.lexicon, number)
            try:
                want = grammar.disambiguate_oracle(kb, tokens, args.limit)
            except OracleLimit as exc:
                print(f"line {number}: skipped ({exc})", file=out)
                continue
            got = grammar.incremental_survivors(kb, tokens)
            if got == want:
                print(f"line {number}: match", file=out)
            else:
                mismatches += 1
                print(f"line {number}: MISMATCH incremental={sorted(got)} "
                      f"oracle={sorted(want)}", file=out)
    print(f"{mismatches} mismatch(es)", file=out)
    return EXIT_STRICT if mismatches else EXIT_OK


COMMANDS = {"run": cmd_run, "lint": cmd_lint, "oracle": cmd_oracle}


def main(argv: Optional[List[str]] = None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    args = build_parser().parse_args(argv)
    return COMMANDS[args.command](args, out, err)


if __name__ == "__main__":
    sys.exit(main())
