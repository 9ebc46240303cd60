"""Collects one verdict line per acceptance criterion."""

import functools
import time

LINES: list[str] = []


def criterion(number: int, title: str):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            start = time.perf_counter()
            notes = kwargs.get("notes", [])
            try:
                fn(*args, **kwargs)
            except BaseException as exc:
                line = f"criterion {number} FAIL  {title} ({type(exc).__name__}: {exc})".splitlines()[0]
                LINES.append(line)
                print(line)
                raise
            extra = "; ".join(notes)
            line = f"criterion {number} PASS  {title} [{time.perf_counter() - start:.2f}s]" + (f"  {extra}" if extra else "")
            LINES.append(line)
            print(line)
        return run
    return wrap
