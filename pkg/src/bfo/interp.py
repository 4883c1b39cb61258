"""Small-step interpreter for source programs.

A configuration is a heap, a stack of frames (each with its own register), and the
expression being reduced. Frames play the role of renaming callee variables apart
from the caller's; an observer (the ownership auditor, the oracle) sees every step.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Iterable, Protocol

from .errors import StuckError
from .pretty import pretty_expr
from .syntax import (
    AliasAssume, Assign, EndLft, Expr, Fail, IfZ, LetAlias, LetArith, LetCall, LetDeref, LetHavoc,
    LetMkRef, NewLft, Program, Tuple, Var, eval_arith,
)

DEFAULT_FUEL = 10**6

RUNNING, DONE, FAIL, ALIAS_FAIL, OUT_OF_FUEL = "Running", "Done", "Fail", "AliasFail", "FuelExhausted"


@dataclass(frozen=True)
class Addr:
    n: int

    def __repr__(self):
        return f"@{self.n}"


class Havoc:
    """Source of values for `_`: a seeded generator or an explicit list.

    An exhausted list keeps producing 0, so a finite list is a total stream.
    """

    def __init__(self, values: Iterable[int] | None = None, seed: int | None = None, lo: int = -2, hi: int = 2):
        self.values = list(values) if values is not None else None
        self.rng = random.Random(seed if seed is not None else 0)
        self.lo, self.hi = lo, hi
        self.used: list[int] = []

    def next(self) -> int:
        if self.values is not None:
            v = self.values[len(self.used)] if len(self.used) < len(self.values) else 0
        else:
            v = self.rng.randint(self.lo, self.hi)
        self.used.append(v)
        return v


@dataclass
class Frame:
    fid: int
    func: str | None
    regs: dict
    caller: "Frame | None" = None
    site: LetCall | None = None  # the call waiting for this frame's result


@dataclass(frozen=True)
class Step:
    index: int
    rule: str
    node: Expr
    fid: int
    detail: dict = field(default_factory=dict)

    def render(self) -> str:
        redex = pretty_expr(self.node).splitlines()[0].strip()
        extra = "".join(f" {k}={v}" for k, v in self.detail.items())
        return f"{self.index:>5} {self.rule:<12} {redex}{extra}"


class Observer(Protocol):
    def on_start(self, m: "Machine") -> None: ...
    def on_step(self, m: "Machine", step: Step) -> None: ...


class Machine:
    def __init__(self, program: Program, havoc: Havoc | None = None, observers: Iterable[Observer] = ()):
        self.program = program
        self.funs = {f.name: f for f in program.funs}
        self.havoc = havoc or Havoc(seed=0)
        self.heap: dict[Addr, int] = {}
        self.fids = itertools.count(0)
        self.frame = Frame(next(self.fids), None, {})
        self.expr: Expr = program.main
        self.status = RUNNING
        self.value = None
        self.steps = 0
        self.lfts = itertools.count(1)
        self.observers = list(observers)
        for ob in self.observers:
            ob.on_start(self)

    # ---------------------------------------------------------------- helpers

    def read(self, x: str):
        try:
            return self.frame.regs[x]
        except KeyError:
            raise StuckError(f"unbound variable {x}", getattr(self.expr, "pos", None)) from None

    def read_int(self, x: str) -> int:
        v = self.read(x)
        if not isinstance(v, int):
            raise StuckError(f"{x} holds {v!r}, not an integer", self.expr.pos)
        return v

    def read_addr(self, x: str) -> Addr:
        v = self.read(x)
        if not isinstance(v, Addr) or v not in self.heap:
            raise StuckError(f"{x} holds {v!r}, not an address", self.expr.pos)
        return v

    def bind(self, x: str, v) -> None:
        self.frame.regs[x] = v

    # ---------------------------------------------------------------- stepping

    def step(self) -> Step:
        if self.status != RUNNING:
            raise StuckError(f"machine is {self.status}")
        e = self.expr
        fid = self.frame.fid
        detail: dict = {}
        if isinstance(e, LetArith):
            self.bind(e.name, eval_arith(e.arith, self.read_int))
            rule, nxt = "Rs-Arith", e.body
        elif isinstance(e, LetHavoc):
            v = self.havoc.next()
            self.bind(e.name, v)
            detail["value"] = v
            rule, nxt = "Rs-Havoc", e.body
        elif isinstance(e, LetAlias):
            self.bind(e.name, self.read(e.src))
            rule, nxt = "Rs-Let", e.body
        elif isinstance(e, LetMkRef):
            a = Addr(len(self.heap))
            self.heap[a] = self.read_int(e.src)
            self.bind(e.name, a)
            detail["addr"] = a
            rule, nxt = "Rs-MkRef", e.body
        elif isinstance(e, LetDeref):
            a = self.read_addr(e.src)
            self.bind(e.name, self.heap[a])
            rule, nxt = "Rs-Deref", e.body
        elif isinstance(e, Assign):
            a = self.read_addr(e.target)
            self.heap[a] = self.read_int(e.src)
            rule, nxt = "Rs-Assign", e.cont
        elif isinstance(e, IfZ):
            if self.read_int(e.cond) == 0:
                rule, nxt = "Rs-IfTrue", e.then
            else:
                rule, nxt = "Rs-IfFalse", e.els
        elif isinstance(e, LetCall):
            f = self.funs.get(e.func)
            if f is None:
                raise StuckError(f"unknown function {e.func}", e.pos)
            args = [self.read(a) for a in e.args]
            callee = Frame(next(self.fids), f.name, {q.name: v for q, v in zip(f.params, args)}, self.frame, e)
            detail["callee"] = callee.fid
            self.frame = callee
            rule, nxt = "Rs-Call", f.body
        elif isinstance(e, AliasAssume):
            if self.read(e.left) == self.read(e.right):
                rule, nxt = "Rs-Alias", e.cont
            else:
                self.status = ALIAS_FAIL
                rule, nxt = "Rs-AliasFail", e
        elif isinstance(e, NewLft):
            detail["runtime"] = f"{e.lft}#{next(self.lfts)}"
            rule, nxt = "Rs-Newlft", e.body
        elif isinstance(e, EndLft):
            rule, nxt = "Rs-Endlft", e.cont
        elif isinstance(e, Fail):
            self.status = FAIL
            rule, nxt = "Rs-Fail", e
        elif isinstance(e, (Var, Tuple)):
            v = self.read(e.name) if isinstance(e, Var) else tuple(self.read(x) for x in e.names)
            rule = "Rs-Var"
            callee = self.frame
            if callee.caller is None:
                self.status = DONE
                self.value = v
                nxt = e
            else:
                site = callee.site
                self.frame = callee.caller
                vals = v if isinstance(e, Tuple) else (v,)
                if len(vals) != len(site.binders):
                    raise StuckError(f"{site.func} returned {len(vals)} values for {len(site.binders)} binders", e.pos)
                for b, val in zip(site.binders, vals):
                    self.bind(b, val)
                detail["returned_from"] = callee.fid
                nxt = site.body
        else:
            raise StuckError(f"no rule for {e!r}")
        self.steps += 1
        step = Step(self.steps, rule, e, fid, detail)
        self.expr = nxt
        for ob in self.observers:
            ob.on_step(self, step)
        return step


@dataclass
class RunResult:
    status: str
    value: object
    steps: int
    havoc: list
    heap: dict
    trace: list | None = None

    @property
    def failed(self) -> bool:
        return self.status == FAIL


def run(program, havoc: Havoc | None = None, fuel: int = DEFAULT_FUEL, trace: bool = False,
        observers: Iterable[Observer] = ()) -> RunResult:
    """Run from the empty configuration until a terminal state or until fuel runs out.

    Accepts a Program or a TypedProgram.
    """
    program = getattr(program, "program", program)
    m = Machine(program, havoc, observers)
    steps: list[Step] | None = [] if trace else None
    while m.status == RUNNING:
        if m.steps >= fuel:
            m.status = OUT_OF_FUEL
            break
        s = m.step()
        if steps is not None:
            steps.append(s)
    return RunResult(m.status, m.value, m.steps, list(m.havoc.used), dict(m.heap), steps)
