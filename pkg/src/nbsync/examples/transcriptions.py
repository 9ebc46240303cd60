"""Litmus transcriptions of the example algorithms for the simulator."""

from __future__ import annotations

from ..litmus.parser import parse
from ..simulator.program import Program
from .locks import PETERSON_VARIANTS


def message_passing(flag_write: str = "release", flag_read: str = "acquire", *,
                    value: int = 1, clause: str = "forbidden: r2 == 0", name: str = "") -> Program:
    """Producer writes plain data then raises a flag; consumer spins on it."""
    text = f"""
    litmus {name or f"mp-{flag_write}-{flag_read}"}
    locations {{
      data: plain init 0
      flag: atomic init 0
    }}
    thread P0 {{
      store data = {value}
      store flag = 1 @{flag_write}
    }}
    thread P1 {{
      loop {{
        load r1 = flag @{flag_read}
      }} until r1 == 1
      load r2 = data
    }}
    {clause}
    """
    return parse(text)


def store_buffering(order: str = "seq_cst") -> Program:
    return parse(f"""
    litmus sb-{order}
    locations {{
      x: atomic init 0
      y: atomic init 0
    }}
    thread P0 {{
      store x = 1 @{order if order != "acquire" else "relaxed"}
      load r1 = y @{order if order != "release" else "relaxed"}
    }}
    thread P1 {{
      store y = 1 @{order if order != "acquire" else "relaxed"}
      load r2 = x @{order if order != "release" else "relaxed"}
    }}
    forbidden: r1 == 0 and r2 == 0
    """)


def peterson(variant: str = "sc") -> Program:
    """Two threads, one critical-section visit each, shared plain counter ``c``.

    ``sc`` leaves every synchronized access at the SeqCst default;
    ``ra_defaults`` declares acquire reads / release writes on the
    variables; ``ra_explicit`` writes the same orders on every statement.
    """
    if variant not in PETERSON_VARIANTS:
        raise ValueError(f"unknown Peterson variant {variant!r}")
    decl = " read=acquire write=release" if variant == "ra_defaults" else ""
    w = " @release" if variant == "ra_explicit" else ""
    r = " @acquire" if variant == "ra_explicit" else ""
    threads = []
    for me in (0, 1):
        other = 1 - me
        threads.append(f"""
    thread P{me} {{
      store flag[{me}] = 1{w}
      store victim = {me}{w}
      loop {{
        load f{me} = flag[{other}]{r}
        load v{me} = victim{r}
      }} until f{me} == 0 or v{me} != {me}
      cs_enter
      load x{me} = c
      store c = x{me} + 1
      cs_exit
      store flag[{me}] = 0{w}
    }}""")
    return parse(f"""
    litmus peterson-{variant}
    locations {{
      flag[2]: atomic init 0{decl}
      victim: atomic init 0{decl}
      c: plain init 0
    }}
    {"".join(threads)}
    forbidden: max_holders > 1
    forbidden: c != 2
    """)


def filter_lock(n: int = 3) -> Program:
    """Filter lock for ``n`` threads, SeqCst defaults, one visit each."""
    if n < 1:
        raise ValueError("need at least one thread")
    threads = []
    for me in range(n):
        lines = []
        for level in range(1, n):
            others = [k for k in range(n) if k != me]
            lines.append(f"store level[{me}] = {level}")
            lines.append(f"store victim[{level}] = {me}")
            lines.append("loop {")
            lines += [f"  load l{me}_{k} = level[{k}]" for k in others]
            lines.append(f"  load v{me} = victim[{level}]")
            clear = " and ".join(f"l{me}_{k} < {level}" for k in others)
            lines.append(f"}} until ({clear}) or v{me} != {me}")
        lines += ["cs_enter", f"load x{me} = c", f"store c = x{me} + 1", "cs_exit", f"store level[{me}] = 0"]
        body = "\n      ".join(lines)
        threads.append(f"thread P{me} {{\n      {body}\n    }}")
    return parse(f"""
    litmus filter-{n}
    locations {{
      level[{n}]: atomic init 0
      victim[{n}]: atomic init 0
      c: plain init 0
    }}
    {chr(10).join(threads)}
    forbidden: max_holders > 1
    forbidden: c != {n}
    """)


def release_acquire_box(flag_write: str = "release", flag_read: str = "acquire", value: int = 42) -> Program:
    return message_passing(flag_write, flag_read, value=value, clause=f"forbidden: r2 != {value}",
                           name=f"box-{flag_write}-{flag_read}")
