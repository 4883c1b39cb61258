"""Printer for source programs. Output re-parses to an alpha-equivalent program."""

from __future__ import annotations

from .ownership import OwnType
from .syntax import (
    AliasAssume, Arith, Assign, BinOp, BorrowAnn, EndLft, Expr, Fail, FunDef, IfZ, LetAlias,
    LetArith, LetCall, LetDeref, LetHavoc, LetMkRef, Name, NewLft, Num, Program, Tuple, TypeAnn, Var,
)

_PREC = {"=": 1, "<": 1, "<=": 1, "+": 2, "-": 2, "*": 3}


def arith_str(o: Arith, prec: int = 0) -> str:
    if isinstance(o, Num):
        return str(o.value) if o.value >= 0 else f"({o.value})"
    if isinstance(o, Name):
        return o.name
    p = _PREC[o.op]
    # left-associative: the right operand needs parentheses at equal precedence
    text = f"{arith_str(o.left, p)} {o.op} {arith_str(o.right, p + 1)}"
    if p == 1 and prec == 1:
        return f"({text})"
    return f"({text})" if p < prec else text


def type_str(t: OwnType) -> str:
    return str(t)


def _lines(e: Expr, ind: str, out: list[str]) -> None:
    while True:
        if isinstance(e, Var):
            out.append(f"{ind}{e.name}")
            return
        if isinstance(e, Tuple):
            out.append(f"{ind}({', '.join(e.names)})")
            return
        if isinstance(e, Fail):
            out.append(f"{ind}fail")
            return
        if isinstance(e, LetArith):
            out.append(f"{ind}let {e.name} = {arith_str(e.arith)} in")
        elif isinstance(e, LetAlias):
            ann = ""
            if isinstance(e.ann, BorrowAnn):
                ann = f" borrow {e.ann.lft}"
            elif isinstance(e.ann, TypeAnn):
                ann = f" as {type_str(e.ann.type)}"
            out.append(f"{ind}let {e.name} = {e.src}{ann} in")
        elif isinstance(e, LetMkRef):
            ann = f" as ref<{e.lft},1>" if e.lft else ""
            out.append(f"{ind}let {e.name} = mkref {e.src}{ann} in")
        elif isinstance(e, LetDeref):
            out.append(f"{ind}let {e.name} = *{e.src} in")
        elif isinstance(e, LetHavoc):
            out.append(f"{ind}let {e.name} = _ in")
        elif isinstance(e, LetCall):
            lfts = f"<{', '.join(e.lfts)}>" if e.lfts is not None else ""
            pat = e.binders[0] if len(e.binders) == 1 else f"({', '.join(e.binders)})"
            out.append(f"{ind}let {pat} = {e.func}{lfts}({', '.join(e.args)}) in")
        elif isinstance(e, Assign):
            out.append(f"{ind}{e.target} := {e.src};")
            e = e.cont
            continue
        elif isinstance(e, AliasAssume):
            ann = f" as {type_str(e.ann[0])}, {type_str(e.ann[1])}" if e.ann else ""
            out.append(f"{ind}alias({e.left} = {e.right}){ann};")
            e = e.cont
            continue
        elif isinstance(e, NewLft):
            out.append(f"{ind}newlft {e.lft} in")
        elif isinstance(e, EndLft):
            out.append(f"{ind}endlft {e.lft};")
            e = e.cont
            continue
        elif isinstance(e, IfZ):
            out.append(f"{ind}ifz {e.cond} then (")
            _lines(e.then, ind + "  ", out)
            out.append(f"{ind}) else (")
            _lines(e.els, ind + "  ", out)
            out.append(f"{ind})")
            return
        else:
            raise TypeError(f"unknown node {e!r}")
        e = e.body


def pretty_expr(e: Expr, indent: str = "") -> str:
    out: list[str] = []
    _lines(e, indent, out)
    return "\n".join(out)


def pretty_fundef(f: FunDef) -> str:
    lfts = ", ".join(f.lfts)
    order = ", ".join(f"{a} < {b}" for a, b in sorted(f.order))
    head = f"<{lfts}{'; ' + order if order else ''}>" if f.lfts or order else ""
    params = []
    for q in f.params:
        post = f" -> {type_str(q.post)}" if q.post != q.type else ""
        params.append(f"{q.name}: {type_str(q.type)}{post}")
    if isinstance(f.ret, tuple):
        ret = "(" + ", ".join(type_str(t) for t in f.ret) + ")"
    else:
        ret = type_str(f.ret)
    return f"fn {f.name}{head}({', '.join(params)}) -> {ret} {{\n{pretty_expr(f.body, '  ')}\n}}"


def pretty(p: Program) -> str:
    parts = [pretty_fundef(f) for f in p.funs]
    parts.append(pretty_expr(p.main))
    return "\n\n".join(parts) + "\n"
