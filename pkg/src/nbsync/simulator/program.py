"""Abstract litmus programs: locations, per-thread instructions, postconditions."""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Union

from ..orderings import (
    MemoryOrder,
    OrderDefaults,
    validate_read_order,
    validate_rmw_pair,
    validate_write_order,
)


class ProgramError(ValueError):
    """Structurally invalid program (names, registers, location kinds)."""


_BIN = {ast.Add, ast.Sub, ast.Mult, ast.Mod, ast.FloorDiv}
_CMP = {ast.Eq, ast.NotEq, ast.Lt, ast.LtE, ast.Gt, ast.GtE}
_WORD_ALIASES = [(re.compile(r"&&"), " and "), (re.compile(r"\|\|"), " or "),
                 (re.compile(r"!(?!=)"), " not "), (re.compile(r"\btrue\b"), "True"),
                 (re.compile(r"\bfalse\b"), "False")]


def _name_of(node: ast.AST) -> Optional[str]:
    if isinstance(node, ast.Name):
        return node.id
    if (isinstance(node, ast.Subscript) and isinstance(node.value, ast.Name)
            and isinstance(node.slice, ast.Constant) and type(node.slice.value) is int):
        return f"{node.value.id}[{node.slice.value}]"
    return None


def _check(node: ast.AST, names: set) -> None:
    name = _name_of(node)
    if name is not None:
        names.add(name)
        return
    if isinstance(node, ast.Constant):
        if type(node.value) not in (int, bool):
            raise SyntaxError(f"unsupported constant {node.value!r}")
    elif isinstance(node, ast.BinOp) and type(node.op) in _BIN:
        _check(node.left, names)
        _check(node.right, names)
    elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.Not)):
        _check(node.operand, names)
    elif isinstance(node, ast.BoolOp):
        for v in node.values:
            _check(v, names)
    elif isinstance(node, ast.Compare) and all(type(op) in _CMP for op in node.ops):
        _check(node.left, names)
        for c in node.comparators:
            _check(c, names)
    else:
        raise SyntaxError(f"unsupported expression element {ast.dump(node)[:40]}")


class _Rename(ast.NodeTransformer):
    def __init__(self, slots: Mapping[str, int]) -> None:
        self.slots = slots

    def _slot(self, node):
        name = _name_of(node)
        return ast.Subscript(ast.Name("R", ast.Load()), ast.Constant(self.slots[name]), ast.Load())

    visit_Name = _slot

    def visit_Subscript(self, node):
        return self._slot(node)


def _tree(src: str) -> ast.AST:
    try:
        tree = ast.parse(src.strip(), mode="eval").body
        _check(tree, set())
    except SyntaxError as exc:
        raise ProgramError(f"bad expression {src!r}: {getattr(exc, 'msg', exc)}") from None
    return tree


@dataclass(frozen=True)
class Expr:
    """Integer/boolean expression over named registers or locations."""

    src: str
    names: frozenset = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        names: set = set()
        _check(_tree(self.src), names)
        object.__setattr__(self, "names", frozenset(names))

    @classmethod
    def parse(cls, text: Union[str, int]) -> "Expr":
        raw = str(int(text)) if isinstance(text, int) else text
        for pattern, repl in _WORD_ALIASES:
            raw = pattern.sub(repl, raw)
        return cls(ast.unparse(_tree(raw)))

    def __str__(self) -> str:
        return self.src

    def compile(self, slots: Mapping[str, int]) -> Callable[[tuple], int]:
        """Compile to ``f(values) -> int`` where ``values[slots[name]]`` is a name's value."""
        missing = self.names - slots.keys()
        if missing:
            raise ProgramError(f"unknown name(s) {sorted(missing)} in {self.src!r}")
        body = _Rename(slots).visit(ast.parse(self.src, mode="eval").body)
        lam = ast.Expression(ast.Lambda(
            ast.arguments(posonlyargs=[], args=[ast.arg("R")], kwonlyargs=[], kw_defaults=[], defaults=[]),
            ast.Call(ast.Name("int", ast.Load()), [body], [])))
        ast.fix_missing_locations(lam)
        return eval(compile(lam, "<expr>", "eval"), {"__builtins__": {"int": int}})

    def evaluate(self, env: Mapping[str, int]) -> int:
        entry = _EVALUATORS.get(self.src)
        if entry is None:
            names = tuple(sorted(self.names))
            entry = _EVALUATORS[self.src] = (names, self.compile({n: i for i, n in enumerate(names)}))
        names, fn = entry
        return fn(tuple(env[n] for n in names))


_EVALUATORS: dict = {}


@dataclass(frozen=True)
class Load:
    reg: str
    loc: str
    order: MemoryOrder


@dataclass(frozen=True)
class Store:
    loc: str
    value: Expr
    order: MemoryOrder


@dataclass(frozen=True)
class Rmw:
    """Compare-and-exchange; ``reg`` receives the value read."""

    reg: str
    loc: str
    expected: Expr
    new: Expr
    success: MemoryOrder
    failure: MemoryOrder


@dataclass(frozen=True)
class Assign:
    reg: str
    value: Expr


@dataclass(frozen=True)
class Loop:
    """Repeat ``body`` until ``until`` holds."""

    body: tuple
    until: Expr


@dataclass(frozen=True)
class CsEnter:
    """Ghost marker: the thread enters its critical section."""


@dataclass(frozen=True)
class CsExit:
    """Ghost marker: the thread leaves its critical section."""


Instr = Union[Load, Store, Rmw, Assign, Loop, CsEnter, CsExit]

LOCATION_KINDS = ("plain", "atomic", "rmw")
MAX_HOLDERS = "max_holders"


@dataclass(frozen=True)
class Location:
    name: str
    kind: str = "atomic"
    init: int = 0
    defaults: OrderDefaults = OrderDefaults()

    @property
    def atomic(self) -> bool:
        return self.kind != "plain"


@dataclass(frozen=True)
class Thread:
    name: str
    instrs: tuple


@dataclass(frozen=True)
class Clause:
    kind: str  # "exists" | "forbidden"
    cond: Expr


def walk(instrs):
    for ins in instrs:
        if isinstance(ins, Loop):
            yield from walk(ins.body)
        else:
            yield ins


def _reg_reads(ins) -> frozenset:
    if isinstance(ins, Store):
        return ins.value.names
    if isinstance(ins, Rmw):
        return ins.expected.names | ins.new.names
    if isinstance(ins, Assign):
        return ins.value.names
    return frozenset()


@dataclass(frozen=True)
class Program:
    name: str
    locations: tuple
    threads: tuple
    clauses: tuple = ()

    @property
    def init(self) -> dict[str, int]:
        return {loc.name: loc.init for loc in self.locations}

    def location(self, name: str) -> Location:
        for loc in self.locations:
            if loc.name == name:
                return loc
        raise ProgramError(f"undeclared location {name!r}")

    def registers(self) -> list[str]:
        """Registers in order of first write, each owned by one thread."""
        owner: dict[str, int] = {}
        for t, thread in enumerate(self.threads):
            for ins in walk(thread.instrs):
                reg = getattr(ins, "reg", None)
                if reg is not None and owner.setdefault(reg, t) != t:
                    raise ProgramError(f"register {reg!r} is written by more than one thread")
        return list(owner)

    def has_critical_sections(self) -> bool:
        return any(isinstance(i, CsEnter) for th in self.threads for i in walk(th.instrs))

    def validate(self) -> "Program":
        if not self.threads:
            raise ProgramError("program has no threads")
        locs = [loc.name for loc in self.locations]
        if len(set(locs)) != len(locs):
            raise ProgramError("duplicate location declaration")
        for loc in self.locations:
            if loc.kind not in LOCATION_KINDS:
                raise ProgramError(f"unknown location kind {loc.kind!r}")
        regs = self.registers()
        clash = (set(regs) & set(locs)) | ({MAX_HOLDERS} & (set(regs) | set(locs)))
        if clash:
            raise ProgramError(f"names used both as register and location (or reserved): {sorted(clash)}")
        thread_regs: list[set] = [set() for _ in self.threads]
        for t, thread in enumerate(self.threads):
            for ins in walk(thread.instrs):
                if getattr(ins, "reg", None) is not None:
                    thread_regs[t].add(ins.reg)
        for t, thread in enumerate(self.threads):
            self._validate_block(thread.instrs, thread_regs[t], thread.name)
        final_names = set(regs) | set(locs) | {MAX_HOLDERS}
        for clause in self.clauses:
            if clause.kind not in ("exists", "forbidden"):
                raise ProgramError(f"unknown clause {clause.kind!r}")
            missing = clause.cond.names - final_names
            if missing:
                raise ProgramError(f"clause refers to unknown name(s) {sorted(missing)}")
        return self

    def _validate_block(self, instrs, regs: set, thread: str) -> None:
        for ins in instrs:
            if isinstance(ins, Loop):
                if not ins.body:
                    raise ProgramError(f"{thread}: empty loop body")
                self._validate_block(ins.body, regs, thread)
                reads = ins.until.names
            else:
                reads = _reg_reads(ins)
            unknown = reads - regs
            if unknown:
                raise ProgramError(f"{thread}: unknown register(s) {sorted(unknown)}")
            if isinstance(ins, (Load, Store, Rmw)):
                loc = self.location(ins.loc)
                if isinstance(ins, Rmw):
                    if not loc.atomic:
                        raise ProgramError(f"{thread}: exchange on plain location {loc.name!r}")
                    validate_rmw_pair(ins.success, ins.failure)
                elif not loc.atomic:
                    if ins.order is not MemoryOrder.NOT_ATOMIC:
                        raise ProgramError(f"{thread}: plain location {loc.name!r} takes no memory order")
                elif isinstance(ins, Load):
                    validate_read_order(ins.order)
                else:
                    validate_write_order(ins.order)
