"""``litmus`` command line."""

from __future__ import annotations

import argparse
import os
import sys
from importlib import resources
from typing import Optional

from ..orderings import OrderError
from ..simulator import Model, ProgramError, StateSpaceExceeded, check_progress
from . import report as render
from .parser import ParseError, format_program, parse_file
from .runner import EXHAUSTIVE, MODES, run

EXIT_OK = 0
EXIT_VIOLATED = 2
EXIT_INVALID = 3
EXIT_STATE_SPACE = 4


def corpus_names() -> list[str]:
    files = resources.files("nbsync.litmus").joinpath("corpus").iterdir()
    return sorted(f.name[: -len(".litmus")] for f in files if f.name.endswith(".litmus"))


def resolve(path: str) -> str:
    """A file path, or the name of a bundled corpus program."""
    if os.path.exists(path):
        return path
    name = path[: -len(".litmus")] if path.endswith(".litmus") else path
    if name in corpus_names():
        return str(resources.files("nbsync.litmus").joinpath("corpus", name + ".litmus"))
    raise FileNotFoundError(path)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="litmus", description="Run litmus programs through the memory-model simulator.")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="enumerate or stress-test a program")
    r.add_argument("file", help="litmus file, or the name of a bundled program")
    r.add_argument("--mode", choices=MODES, default=EXHAUSTIVE)
    r.add_argument("--model", choices=[m.value for m in Model], default=Model.SC.value)
    r.add_argument("--iterations", type=int, default=10_000, help="stress-mode runs")
    r.add_argument("--unroll", type=int, default=2, help="loop unroll bound")
    r.add_argument("--max-states", type=int, default=2_000_000)
    r.add_argument("--json", metavar="PATH", help="write the JSON report")
    r.add_argument("--csv", metavar="PATH", help="write outcomes as CSV")
    r.add_argument("--plot", metavar="PATH", help="write an outcome bar chart (PNG)")
    r.add_argument("--report", metavar="DIR", help="write report.json, outcomes.csv and outcomes.png into DIR")
    r.add_argument("--progress", action="store_true", help="also look for executions stuck spinning")

    p = sub.add_parser("print", help="parse and pretty-print a program")
    p.add_argument("file")

    sub.add_parser("list", help="list bundled programs")
    return ap


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def main(argv: Optional[list[str]] = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list":
        for name in corpus_names():
            print(name)
        return EXIT_OK
    try:
        program = parse_file(resolve(args.file))
        if args.command == "print":
            print(format_program(program), end="")
            return EXIT_OK
        model = Model(args.model)
        rep = run(program, mode=args.mode, model=model, iterations=args.iterations,
                  unroll=args.unroll, max_states=args.max_states)
        progress = check_progress(program, model, unroll=args.unroll, max_states=args.max_states) \
            if args.progress else None
    except (ParseError, OrderError, ProgramError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except StateSpaceExceeded as exc:
        print(f"error: state space exceeded: {exc}", file=sys.stderr)
        return EXIT_STATE_SPACE

    print(render.to_text(rep))
    ok = rep.ok
    if progress is not None:
        print(f"progress: {'ok' if progress.ok else 'STUCK'} ({progress.blocked} bounded-spin states,"
              f" {progress.stuck} stuck)")
        if progress.witness is not None:
            print("\n".join("  " + line for line in progress.witness.format(rep.thread_names)))
        ok = ok and progress.ok

    json_path, csv_path, plot_path = args.json, args.csv, args.plot
    if args.report:
        os.makedirs(args.report, exist_ok=True)
        json_path = json_path or os.path.join(args.report, "report.json")
        csv_path = csv_path or os.path.join(args.report, "outcomes.csv")
        plot_path = plot_path or os.path.join(args.report, "outcomes.png")
    if json_path:
        _write(json_path, render.to_json(rep) + "\n")
    if csv_path:
        _write(csv_path, render.to_csv(rep))
    if plot_path:
        render.plot(rep, plot_path)
    return EXIT_OK if ok else EXIT_VIOLATED


if __name__ == "__main__":
    sys.exit(main())
