"""Type-directed translation from source programs to the target language.

A reference becomes a pair (current value, prophecy). The prophecy is the value the
reference will hold when its lifetime ends; it starts out nondeterministic and is
pinned down by `assume(fst x = snd x)` when the reference is dropped. Ownership
moves between aliases are realised by `conv`, which decides from the ownership
before and after the move which components to copy.

Functions return their result followed by the updated values of their reference
parameters, in declaration order.
"""

from __future__ import annotations

from dataclasses import dataclass

from .checker import TypedProgram, check_program
from .ownership import IntType, RefType, nullify, own, split_type
from .syntax import (
    AliasAssume, Assign, EndLft, Expr, Fail, IfZ, LetAlias, LetArith, LetCall, LetDeref, LetHavoc,
    LetMkRef, Name, NewLft, Num, Program, Tuple, Var, all_binder_names,
)
from .target import (
    TAssume, TBin, TCall, TFail, TFst, TFunDef, TIf, TLet, TNondet, TNum, TProgram, TRet, TSnd,
    TTuple, TVar, number_program,
)


def _arith(o):
    if isinstance(o, Num):
        return TNum(o.value)
    if isinstance(o, Name):
        return TVar(o.name)
    return TBin(o.op, _arith(o.left), _arith(o.right))


def conv(tx, rx, ty, ry, x: str, y: str, swapped: bool = False) -> list[tuple[str, TTuple]]:
    """Bindings that move ownership between aliases x and y (types τx→ρx, τy→ρy)."""
    if own(tx) == 0 and own(rx) == 0:
        return []
    if own(ty) > 0 and own(rx) > 0 and own(ry) > 0:
        return [(x, TTuple((TFst(TVar(y)), TSnd(TVar(x)))))]
    if own(tx) > 0 and own(rx) == 0:
        return [(y, TTuple((TFst(TVar(x)), TSnd(TVar(y))))),
                (x, TTuple((TSnd(TVar(y)), TSnd(TVar(x)))))]
    if swapped:
        raise AssertionError(f"no conversion for {tx}->{rx}, {ty}->{ry}")
    return conv(ty, ry, tx, rx, y, x, True)


@dataclass
class _Item:
    kind: str  # let | assume
    a: object
    b: object
    origin: int


class Translator:
    def __init__(self, tp: TypedProgram, peephole: bool = True):
        self.tp = tp
        self.ev = tp.evidence
        self.peephole = peephole
        self.ref_params = {f.name: [i for i, q in enumerate(f.params) if isinstance(q.type, RefType)]
                           for f in tp.program.funs}
        self.param_names = {f.name: [q.name for q in f.params] for f in tp.program.funs}
        self.used = set(all_binder_names(tp.program))

    def fresh(self, base: str) -> str:
        name = f"{base}'"
        while name in self.used:
            name += "'"
        self.used.add(name)
        return name

    # ---------------------------------------------------------------- pieces

    def new_pair(self, x: str, src: str, ty, rx, ry, origin: int) -> list[_Item]:
        """`let x = (_, _)` followed by the conversion giving x its share of src."""
        items = [_Item("let", x, TTuple((TNondet("junk"), TNondet("prophecy", ref=x))), origin)]
        binds = conv(nullify(ty), rx, ty, ry, x, src)
        if self.peephole and binds and binds[0][0] == x:
            _, val = binds.pop(0)
            items[0] = _Item("let", x, TTuple((val.items[0], TNondet("prophecy", ref=x))), origin)
        items += [_Item("let", v, e, origin) for v, e in binds]
        return items

    def assumes(self, names, origin: int) -> list[_Item]:
        return [_Item("assume", TFst(TVar(v)), TSnd(TVar(v)), origin) for v in names]

    # ---------------------------------------------------------------- bodies

    def body(self, e: Expr, fname: str | None):
        items: list[_Item] = []
        while True:
            nid = e.nid
            G = self.ev.env[nid][1]
            if isinstance(e, LetArith):
                items.append(_Item("let", e.name, _arith(e.arith), nid))
                e = e.body
            elif isinstance(e, LetHavoc):
                items.append(_Item("let", e.name, TNondet("havoc"), nid))
                e = e.body
            elif isinstance(e, LetAlias):
                whole, tx, ty = self.ev.let_split[nid]
                if isinstance(whole, IntType):
                    items.append(_Item("let", e.name, TVar(e.src), nid))
                else:
                    items += self.new_pair(e.name, e.src, whole, tx, ty, nid)
                e = e.body
            elif isinstance(e, LetMkRef):
                items.append(_Item("let", e.name, TTuple((TVar(e.src), TNondet("prophecy", ref=e.name))), nid))
                e = e.body
            elif isinstance(e, LetDeref):
                if own(G[e.src]) > 0:
                    items.append(_Item("let", e.name, TFst(TVar(e.src)), nid))
                else:
                    items.append(_Item("let", e.name, TNondet("deref"), nid))
                e = e.body
            elif isinstance(e, Assign):
                items.append(_Item("let", e.target, TTuple((TVar(e.src), TSnd(TVar(e.target)))), nid))
                e = e.cont
            elif isinstance(e, AliasAssume):
                tx, ty, rx, ry = self.ev.alias[nid]
                items += [_Item("let", v, ex, nid) for v, ex in conv(tx, rx, ty, ry, e.left, e.right)]
                e = e.cont
            elif isinstance(e, LetCall):
                pat = e.binders[0] if len(e.binders) == 1 else tuple(e.binders)
                refs = [e.args[i] for i in self.ref_params[e.func]]
                if refs:
                    pat = (pat, *refs)
                items.append(_Item("let", pat, TCall(e.func, tuple(TVar(a) for a in e.args)), nid))
                e = e.body
            elif isinstance(e, NewLft):
                e = e.body
            elif isinstance(e, EndLft):
                items += self.assumes(self.ev.endlft[nid], nid)
                e = e.cont
            elif isinstance(e, IfZ):
                tail = TIf(TVar(e.cond), self.body(e.then, fname), self.body(e.els, fname), origin=nid, head=True)
                return self.build(items, tail)
            elif isinstance(e, Fail):
                return self.build(items, TFail(origin=nid, head=True))
            elif isinstance(e, (Var, Tuple)):
                return self.ret(e, G, fname, items)
            else:
                raise TypeError(f"unknown node {e!r}")

    def ret(self, e, G, fname, items):
        nid = e.nid
        info = self.ev.ret[nid]
        start = len(items)
        items += self.assumes(info.dropped, nid)
        comps = []
        for v, t in info.components:
            if isinstance(t, RefType) and v in info.post:
                copy = self.fresh(v)
                items += self.new_pair(copy, v, G[v], t, split_type(G[v], t), nid)
                comps.append(TVar(copy))
            else:
                comps.append(TVar(v))
        value = comps[0] if len(comps) == 1 else TTuple(tuple(comps))
        if fname is not None and self.ref_params[fname]:
            names = self.param_names[fname]
            value = TTuple((value, *[TVar(names[i]) for i in self.ref_params[fname]]))
        head = len(items) == start
        return self.build(items, TRet(value, origin=nid, head=head))

    def build(self, items: list[_Item], tail):
        seen = set()
        heads = []
        for it in items:
            heads.append(it.origin not in seen)
            seen.add(it.origin)
        if tail.origin in seen and tail.head:
            tail = type(tail)(**{**tail.__dict__, "head": False})
        for it, head in zip(reversed(items), reversed(heads)):
            if it.kind == "let":
                tail = TLet(it.a, it.b, tail, origin=it.origin, head=head)
            else:
                tail = TAssume(it.a, it.b, tail, origin=it.origin, head=head)
        return tail

    def program(self) -> TProgram:
        funs = []
        for f in self.tp.program.funs:
            funs.append(TFunDef(f.name, tuple(q.name for q in f.params), self.body(f.body, f.name)))
        main = self.body(self.tp.program.main, None)
        return number_program(TProgram(tuple(funs), main))


def translate_program(tp: TypedProgram | Program, peephole: bool = True) -> TProgram:
    if isinstance(tp, Program):
        tp = check_program(tp)
    return Translator(tp, peephole).program()


__all__ = ["conv", "translate_program", "Translator"]
