"""Abstract syntax of the source language.

Every node carries `nid` (unique per program, assigned by the parser) and `pos`
(line, column). Both are excluded from equality so structurally equal trees compare
equal regardless of where they came from.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .ownership import FnType, OwnType

META = dict(compare=False, repr=False, default=None)


# ---------------------------------------------------------------- arithmetic

@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Name:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * = < <=
    left: "Arith"
    right: "Arith"


Arith = Num | Name | BinOp

ARITH_OPS = ("+", "-", "*", "=", "<", "<=")


def eval_arith(o: Arith, lookup) -> int:
    if isinstance(o, Num):
        return o.value
    if isinstance(o, Name):
        return lookup(o.name)
    a = eval_arith(o.left, lookup)
    b = eval_arith(o.right, lookup)
    return apply_op(o.op, a, b)


def apply_op(op: str, a: int, b: int) -> int:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "=":
        return 0 if a == b else 1
    if op == "<":
        return 0 if a < b else 1
    if op == "<=":
        return 0 if a <= b else 1
    raise ValueError(f"unknown operator {op}")


def arith_vars(o: Arith) -> Iterator[str]:
    if isinstance(o, Name):
        yield o.name
    elif isinstance(o, BinOp):
        yield from arith_vars(o.left)
        yield from arith_vars(o.right)


# ---------------------------------------------------------------- annotations

@dataclass(frozen=True)
class BorrowAnn:
    """`let x = y borrow β`: x borrows all of y's ownership for β."""

    lft: str


@dataclass(frozen=True)
class TypeAnn:
    """`let x = y as τ`: x gets τ, y keeps the remainder."""

    type: OwnType


LetAnn = BorrowAnn | TypeAnn | None


# ---------------------------------------------------------------- expressions

@dataclass(frozen=True)
class Var:
    name: str
    nid: int = field(**META)
    pos: tuple = field(**META)


@dataclass(frozen=True)
class Tuple:
    """Return of several values at once, e.g. `(x, y)`; only in tail position."""

    names: tuple[str, ...]
    nid: int = field(**META)
    pos: tuple = field(**META)


@dataclass(frozen=True)
class LetArith:
    name: str
    arith: Arith
    body: "Expr"
    nid: int = field(**META)
    pos: tuple = field(**META)


@dataclass(frozen=True)
class LetAlias:
    name: str
    src: str
    ann: LetAnn
    body: "Expr"
    nid: int = field(**META)
    pos: tuple = field(**META)


@dataclass(frozen=True)
class LetMkRef:
    name: str
    src: str
    lft: str | None
    body: "Expr"
    nid: int = field(**META)
    pos: tuple = field(**META)


@dataclass(frozen=True)
class LetDeref:
    name: str
    src: str
    body: "Expr"
    nid: int = field(**META)
    pos: tuple = field(**META)


@dataclass(frozen=True)
class LetHavoc:
    name: str
    body: "Expr"
    nid: int = field(**META)
    pos: tuple = field(**META)


@dataclass(frozen=True)
class Assign:
    target: str
    src: str
    cont: "Expr"
    nid: int = field(**META)
    pos: tuple = field(**META)


@dataclass(frozen=True)
class IfZ:
    cond: str
    then: "Expr"
    els: "Expr"
    nid: int = field(**META)
    pos: tuple = field(**META)


@dataclass(frozen=True)
class LetCall:
    binders: tuple[str, ...]  # one name, or several for a tuple-returning function
    func: str
    lfts: tuple[str, ...] | None  # None: infer from the argument types
    args: tuple[str, ...]
    body: "Expr"
    nid: int = field(**META)
    pos: tuple = field(**META)


@dataclass(frozen=True)
class AliasAssume:
    left: str
    right: str
    ann: tuple[OwnType, OwnType] | None
    cont: "Expr"
    nid: int = field(**META)
    pos: tuple = field(**META)


@dataclass(frozen=True)
class NewLft:
    lft: str
    body: "Expr"
    nid: int = field(**META)
    pos: tuple = field(**META)


@dataclass(frozen=True)
class EndLft:
    lft: str
    cont: "Expr"
    nid: int = field(**META)
    pos: tuple = field(**META)


@dataclass(frozen=True)
class Fail:
    nid: int = field(**META)
    pos: tuple = field(**META)


Expr = (Var | Tuple | LetArith | LetAlias | LetMkRef | LetDeref | LetHavoc | Assign | IfZ
        | LetCall | AliasAssume | NewLft | EndLft | Fail)


@dataclass(frozen=True)
class Param:
    name: str
    type: OwnType
    post: OwnType


@dataclass(frozen=True)
class FunDef:
    name: str
    lfts: tuple[str, ...]
    order: frozenset
    params: tuple[Param, ...]
    ret: OwnType | tuple[OwnType, ...]
    body: Expr
    pos: tuple = field(**META)

    def fn_type(self) -> FnType:
        return FnType(self.lfts, self.order, tuple(p.type for p in self.params),
                      tuple(p.post for p in self.params), self.ret)


@dataclass(frozen=True)
class Program:
    funs: tuple[FunDef, ...]
    main: Expr

    def fun(self, name: str) -> FunDef | None:
        for f in self.funs:
            if f.name == name:
                return f
        return None


# ---------------------------------------------------------------- traversal

def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, (Var, Tuple, Fail)):
        return ()
    if isinstance(e, IfZ):
        return (e.then, e.els)
    if isinstance(e, (Assign, AliasAssume, EndLft)):
        return (e.cont,)
    return (e.body,)


def walk(e: Expr) -> Iterator[Expr]:
    stack = [e]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(children(n)))


def binders(e: Expr) -> tuple[str, ...]:
    if isinstance(e, (LetArith, LetAlias, LetMkRef, LetDeref, LetHavoc)):
        return (e.name,)
    if isinstance(e, LetCall):
        return e.binders
    return ()


def program_nodes(p: Program) -> Iterator[Expr]:
    for f in p.funs:
        yield from walk(f.body)
    yield from walk(p.main)


def all_binder_names(p: Program) -> list[str]:
    names = []
    for f in p.funs:
        names.extend(q.name for q in f.params)
    for n in program_nodes(p):
        names.extend(binders(n))
    return names


def all_lifetime_binders(p: Program) -> list[str]:
    names = []
    for f in p.funs:
        names.extend(f.lfts)
    for n in program_nodes(p):
        if isinstance(n, NewLft):
            names.append(n.lft)
    return names
