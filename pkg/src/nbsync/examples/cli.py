"""``examples`` command line: run a reference algorithm under real threads."""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from ..cells import RmwCell
from .box import ReleaseAcquireBox
from .harness import lock_stress, rmw_counter, run_threads, stack_stress
from .locks import PETERSON_VARIANTS, FilterLock, PetersonLock
from .stack import ApiStack, LockedStack, NonBlockingStack


def _stack(cls):
    def run(threads: int, ops: int) -> tuple[bool, str]:
        s = cls()
        r = stack_stress(s, threads, ops)
        extra = ""
        if hasattr(s, "allocator"):
            a = s.allocator
            extra = f" allocated={a.allocated} freed={a.freed} pending={s.counter.pending()}"
        return r.ok, (f"pushed={sum(r.pushed.values())} popped={sum(r.popped.values())}"
                      f" empty_pops={r.empty_pops} remaining={len(r.remaining)}{extra}"
                      f" elapsed={r.elapsed:.2f}s")
    return run


def _peterson(variant: str):
    def run(threads: int, ops: int) -> tuple[bool, str]:
        r = lock_stress(PetersonLock(variant), 2, ops)
        return r.ok, f"count={r.final}/{r.expected} max_holders={r.max_holders} elapsed={r.elapsed:.2f}s"
    return run


def _filter(threads: int, ops: int) -> tuple[bool, str]:
    r = lock_stress(FilterLock(threads), threads, ops)
    return r.ok, f"count={r.final}/{r.expected} max_holders={r.max_holders} elapsed={r.elapsed:.2f}s"


def _box(threads: int, ops: int) -> tuple[bool, str]:
    bad = 0
    for i in range(ops):
        box = ReleaseAcquireBox()
        readers = [box.read for _ in range(max(1, threads - 1))]
        got = run_threads([lambda i=i: box.write(i)] + readers)[1:]
        bad += sum(g != i for g in got)
    return bad == 0, f"handoffs={ops} readers={max(1, threads - 1)} wrong={bad}"


def _counter(threads: int, ops: int) -> tuple[bool, str]:
    final = rmw_counter(RmwCell(0), threads, ops)
    return final == threads * ops, f"final={final} expected={threads * ops}"


DEMOS = {
    "stack": _stack(NonBlockingStack),
    "api-stack": _stack(ApiStack),
    "locked-stack": _stack(LockedStack),
    "box": _box,
    "filter": _filter,
    "rmw-counter": _counter,
    **{f"peterson-{v.replace('_', '-')}": _peterson(v) for v in PETERSON_VARIANTS},
}
DEFAULT_OPS = {"box": 200}


def main(argv: Optional[list[str]] = None) -> int:
    ap = argparse.ArgumentParser(prog="examples", description="Run a reference algorithm on real threads.")
    ap.add_argument("name", choices=sorted(DEMOS) + ["all"])
    ap.add_argument("--threads", type=int, default=4)
    ap.add_argument("--ops", type=int, default=None, help="operations per thread")
    ap.add_argument("--runs", type=int, default=1)
    ap.add_argument("--switch-interval", type=float, default=None,
                    help="interpreter thread switch interval in seconds (smaller means more interleaving)")
    args = ap.parse_args(argv)
    if args.switch_interval is not None:
        sys.setswitchinterval(args.switch_interval)
    names = sorted(DEMOS) if args.name == "all" else [args.name]
    ok = True
    for name in names:
        ops = args.ops if args.ops is not None else DEFAULT_OPS.get(name, 1000)
        for run in range(args.runs):
            passed, summary = DEMOS[name](args.threads, ops)
            ok = ok and passed
            print(f"{name} run={run + 1} threads={args.threads} ops={ops} {'ok' if passed else 'FAIL'} {summary}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
