"""Line-oriented litmus format.

::

    litmus fig1-release-acquire
    locations {
      data: plain init 0
      flag: atomic init 0 read=acquire write=release
      turn[2]: atomic init 0          # array: turn[0], turn[1]
      head: rmw init 0 success=release failure=relaxed
    }
    thread P0 {
      store data = 1
      store flag = 1
    }
    thread P1 {
      loop {
        load r1 = flag
      } until r1 == 1
      load r2 = data
    }
    forbidden: r2 == 0

Instructions: ``load REG = LOC [@ORDER]``, ``store LOC = EXPR [@ORDER]``,
``cas REG = LOC (EXPECTED -> NEW) [@SUCCESS[/FAILURE]]``, ``REG = EXPR``,
``loop { ... } until COND``, ``cs_enter`` and ``cs_exit``. Unannotated
accesses take the location's declared default order.
"""

from __future__ import annotations

import re
from typing import Optional

from ..orderings import (
    MemoryOrder,
    OrderDefaults,
    OrderError,
    parse_order,
    validate_read_order,
    validate_rmw_pair,
    validate_write_order,
)
from ..simulator.program import (
    Assign,
    Clause,
    CsEnter,
    CsExit,
    Expr,
    Load,
    Location,
    Loop,
    Program,
    ProgramError,
    Rmw,
    Store,
    Thread,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0) -> None:
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)
        self.line = line
        self.column = column


_IDENT = r"[A-Za-z_]\w*"
_LOC = rf"{_IDENT}(?:\[\d+\])?"
_ORDER = r"(?:\s*@\s*(?P<order>\w+)(?:\s*/\s*(?P<failure>\w+))?)?"

_LOAD = re.compile(rf"load\s+(?P<reg>{_IDENT})\s*=\s*(?P<loc>{_LOC}){_ORDER}$")
_STORE = re.compile(rf"store\s+(?P<loc>{_LOC})\s*=\s*(?P<expr>[^@]+?){_ORDER}$")
_CAS = re.compile(rf"cas\s+(?P<reg>{_IDENT})\s*=\s*(?P<loc>{_LOC})\s*\(\s*(?P<exp>[^()]+?)\s*->\s*(?P<new>[^()]+?)\s*\){_ORDER}$")
_ASSIGN = re.compile(rf"(?P<reg>{_IDENT})\s*=\s*(?P<expr>[^=].*)$")
_DECL = re.compile(rf"(?P<name>{_IDENT})(?:\[(?P<size>\d+)\])?\s*:\s*(?P<rest>.*)$")
_THREAD = re.compile(rf"thread\s+(?P<name>{_IDENT})\s*\{{$")
_CLAUSE = re.compile(r"(?P<kind>exists|forbidden)\s*:\s*(?P<expr>.+)$")
_UNTIL = re.compile(r"\}\s*until\s+(?P<expr>.+)$")
_KEYWORDS = {"load", "store", "cas", "loop", "cs_enter", "cs_exit", "thread", "locations",
             "litmus", "exists", "forbidden", "until"}


class _Lines:
    def __init__(self, text: str) -> None:
        self.items = []
        for n, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].rstrip()
            if line.strip():
                col = len(line) - len(line.lstrip()) + 1
                self.items.append((n, col, line.strip()))
        self.pos = 0

    def next(self):
        if self.pos >= len(self.items):
            return None
        item = self.items[self.pos]
        self.pos += 1
        return item


def _order(text: Optional[str], line: int, col: int) -> Optional[MemoryOrder]:
    if text is None:
        return None
    try:
        return parse_order(text)
    except ValueError as exc:
        raise ParseError(str(exc), line, col) from None


def _expr(text: str, line: int, col: int) -> Expr:
    try:
        return Expr.parse(text)
    except ProgramError as exc:
        raise ParseError(str(exc), line, col) from None


def _tag(exc: Exception, line: int) -> Exception:
    exc.line = line
    exc.args = (f"line {line}: {exc.args[0] if exc.args else exc}",)
    return exc


class _Parser:
    def __init__(self, text: str, name: Optional[str]) -> None:
        self.lines = _Lines(text)
        self.name = name
        self.locations: list[Location] = []
        self.threads: list[Thread] = []
        self.clauses: list[Clause] = []

    def location(self, name: str, line: int) -> Location:
        for loc in self.locations:
            if loc.name == name:
                return loc
        raise ParseError(f"undeclared location {name!r}", line)

    def parse(self) -> Program:
        while (item := self.lines.next()) is not None:
            n, col, line = item
            head = line.split()[0]
            if head == "litmus":
                if self.threads or self.locations:
                    raise ParseError("'litmus' header must come first", n, col)
                self.name = line[len("litmus"):].strip() or self.name
            elif line.replace(" ", "") == "locations{":
                self.parse_locations()
            elif m := _THREAD.match(line):
                if any(t.name == m["name"] for t in self.threads):
                    raise ParseError(f"duplicate thread {m['name']!r}", n, col)
                self.threads.append(Thread(m["name"], tuple(self.parse_block(n, loop=False))))
            elif m := _CLAUSE.match(line):
                self.clauses.append(Clause(m["kind"], _expr(m["expr"], n, col)))
            else:
                raise ParseError(f"unknown statement {head!r}", n, col)
        if not self.threads:
            raise ParseError("no threads declared")
        program = Program(self.name or "litmus", tuple(self.locations), tuple(self.threads), tuple(self.clauses))
        try:
            return program.validate()
        except ProgramError as exc:
            raise ParseError(str(exc)) from None

    def parse_locations(self) -> None:
        while (item := self.lines.next()) is not None:
            n, col, line = item
            if line == "}":
                return
            m = _DECL.match(line)
            if not m:
                raise ParseError("expected 'name: kind [init V] [key=order ...]'", n, col)
            words = m["rest"].split()
            if not words or words[0] not in ("plain", "atomic", "rmw"):
                raise ParseError("location kind must be plain, atomic or rmw", n, col)
            kind, inits, orders = words[0], None, {}
            i = 1
            while i < len(words):
                w = words[i]
                if w == "init" and i + 1 < len(words):
                    try:
                        inits = [int(v) for v in words[i + 1].split(",")]
                    except ValueError:
                        raise ParseError(f"bad initial value {words[i + 1]!r}", n, col) from None
                    i += 2
                elif "=" in w:
                    key, _, val = w.partition("=")
                    if key not in ("read", "write", "success", "failure"):
                        raise ParseError(f"unknown attribute {key!r}", n, col)
                    orders[key] = _order(val, n, col)
                    i += 1
                else:
                    raise ParseError(f"unknown keyword {w!r}", n, col)
            defaults = self.defaults(kind, orders, n, col)
            size = int(m["size"]) if m["size"] else None
            count = size or 1
            inits = inits or [0]
            if len(inits) == 1:
                inits = inits * count
            if len(inits) != count:
                raise ParseError("number of initial values does not match array size", n, col)
            names = [f"{m['name']}[{k}]" for k in range(count)] if size else [m["name"]]
            for name, init in zip(names, inits):
                if any(loc.name == name for loc in self.locations):
                    raise ParseError(f"duplicate location {name!r}", n, col)
                self.locations.append(Location(name, kind, init, defaults))
        raise ParseError("unterminated locations block")

    @staticmethod
    def defaults(kind: str, orders: dict, n: int, col: int) -> OrderDefaults:
        try:
            if kind == "plain":
                if orders:
                    raise ParseError("plain locations take no memory orders", n, col)
                return OrderDefaults()
            if kind == "atomic":
                if {"success", "failure"} & orders.keys():
                    raise ParseError("success/failure orders need an rmw location", n, col)
                return OrderDefaults.sync(orders.get("read", MemoryOrder.SEQ_CST),
                                          orders.get("write", MemoryOrder.SEQ_CST))
            if "write" in orders:
                raise ParseError("rmw locations use success=/failure= instead of write=", n, col)
            return OrderDefaults(orders.get("read", MemoryOrder.SEQ_CST),
                                 orders.get("success", MemoryOrder.SEQ_CST),
                                 orders.get("failure", MemoryOrder.SEQ_CST))
        except OrderError as exc:
            raise _tag(exc, n) from None

    def parse_block(self, start: int, loop: bool):
        body = []
        while (item := self.lines.next()) is not None:
            n, col, line = item
            if line == "}":
                if loop:
                    raise ParseError("loop must end with '} until COND'", n, col)
                return body
            if m := _UNTIL.match(line):
                if not loop:
                    raise ParseError("'until' outside a loop", n, col)
                return body, _expr(m["expr"], n, col)
            if line.replace(" ", "") == "loop{":
                inner, cond = self.parse_block(n, loop=True)
                if not inner:
                    raise ParseError("empty loop body", n, col)
                body.append(Loop(tuple(inner), cond))
                continue
            try:
                body.append(self.instruction(line, n, col))
            except OrderError as exc:
                raise _tag(exc, n) from None
        raise ParseError("unterminated block", start)

    def instruction(self, line: str, n: int, col: int):
        head = line.split()[0]
        if line == "cs_enter":
            return CsEnter()
        if line == "cs_exit":
            return CsExit()
        if head == "load":
            m = _LOAD.match(line)
            if not m or m["failure"]:
                raise ParseError("expected 'load REG = LOC [@ORDER]'", n, col)
            loc = self.location(m["loc"], n)
            return Load(m["reg"], loc.name, self.access_order(loc, m["order"], n, col, read=True))
        if head == "store":
            m = _STORE.match(line)
            if not m or m["failure"]:
                raise ParseError("expected 'store LOC = EXPR [@ORDER]'", n, col)
            loc = self.location(m["loc"], n)
            return Store(loc.name, _expr(m["expr"], n, col),
                         self.access_order(loc, m["order"], n, col, read=False))
        if head == "cas":
            m = _CAS.match(line)
            if not m:
                raise ParseError("expected 'cas REG = LOC (EXPECTED -> NEW) [@SUCCESS[/FAILURE]]'", n, col)
            loc = self.location(m["loc"], n)
            if not loc.atomic:
                raise ParseError(f"exchange on plain location {loc.name!r}", n, col)
            success = _order(m["order"], n, col) or loc.defaults.write_success
            failure = _order(m["failure"], n, col) or loc.defaults.write_failure
            validate_rmw_pair(success, failure)
            return Rmw(m["reg"], loc.name, _expr(m["exp"], n, col), _expr(m["new"], n, col), success, failure)
        if head in _KEYWORDS:
            raise ParseError(f"malformed {head!r} statement", n, col)
        m = _ASSIGN.match(line)
        if m:
            return Assign(m["reg"], _expr(m["expr"], n, col))
        raise ParseError(f"unknown instruction {head!r}", n, col)

    @staticmethod
    def access_order(loc: Location, text: Optional[str], n: int, col: int, read: bool) -> MemoryOrder:
        order = _order(text, n, col)
        if not loc.atomic:
            if order is not None and order is not MemoryOrder.NOT_ATOMIC:
                raise ParseError(f"plain location {loc.name!r} takes no memory order", n, col)
            return MemoryOrder.NOT_ATOMIC
        if order is None:
            order = loc.defaults.read if read else loc.defaults.write
        return validate_read_order(order) if read else validate_write_order(order)


def parse(text: str, name: Optional[str] = None) -> Program:
    """Parse litmus text into a validated :class:`Program`."""
    return _Parser(text, name).parse()


def parse_file(path) -> Program:
    from pathlib import Path

    path = Path(path)
    return parse(path.read_text(encoding="utf-8"), name=path.stem)


def _block(instrs, indent: str) -> list[str]:
    out = []
    for ins in instrs:
        if isinstance(ins, Loop):
            out.append(f"{indent}loop {{")
            out.extend(_block(ins.body, indent + "  "))
            out.append(f"{indent}}} until {ins.until}")
        elif isinstance(ins, Load):
            suffix = "" if ins.order is MemoryOrder.NOT_ATOMIC else f" @{ins.order.value}"
            out.append(f"{indent}load {ins.reg} = {ins.loc}{suffix}")
        elif isinstance(ins, Store):
            suffix = "" if ins.order is MemoryOrder.NOT_ATOMIC else f" @{ins.order.value}"
            out.append(f"{indent}store {ins.loc} = {ins.value}{suffix}")
        elif isinstance(ins, Rmw):
            out.append(f"{indent}cas {ins.reg} = {ins.loc} ({ins.expected} -> {ins.new})"
                       f" @{ins.success.value}/{ins.failure.value}")
        elif isinstance(ins, Assign):
            out.append(f"{indent}{ins.reg} = {ins.value}")
        elif isinstance(ins, CsEnter):
            out.append(f"{indent}cs_enter")
        elif isinstance(ins, CsExit):
            out.append(f"{indent}cs_exit")
        else:
            raise TypeError(f"cannot print {ins!r}")
    return out


def _decl_attrs(loc: Location) -> str:
    d = loc.defaults
    if loc.kind == "plain":
        return ""
    if loc.kind == "atomic":
        return f" read={d.read.value} write={d.write.value}"
    return f" read={d.read.value} success={d.write_success.value} failure={d.write_failure.value}"


def format_program(program: Program) -> str:
    """Render a program so that ``parse(format_program(p)) == p``."""
    out = [f"litmus {program.name}", "locations {"]
    locs = list(program.locations)
    i = 0
    while i < len(locs):
        loc = locs[i]
        m = re.fullmatch(rf"({_IDENT})\[(\d+)\]", loc.name)
        if m is None:
            out.append(f"  {loc.name}: {loc.kind} init {loc.init}{_decl_attrs(loc)}")
            i += 1
            continue
        base = m.group(1)
        group = []
        while (i < len(locs) and locs[i].name == f"{base}[{len(group)}]"
               and locs[i].kind == loc.kind and locs[i].defaults == loc.defaults):
            group.append(locs[i])
            i += 1
        if m.group(2) != "0":
            raise ValueError(f"array {base!r} must start at index 0 to be printed")
        inits = ",".join(str(x.init) for x in group)
        out.append(f"  {base}[{len(group)}]: {loc.kind} init {inits}{_decl_attrs(loc)}")
    out.append("}")
    for th in program.threads:
        out.append(f"thread {th.name} {{")
        out.extend(_block(th.instrs, "  "))
        out.append("}")
    for clause in program.clauses:
        out.append(f"{clause.kind}: {clause.cond}")
    return "\n".join(out) + "\n"
