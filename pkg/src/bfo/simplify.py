"""Cosmetic rewrites of target programs that keep their meaning.

`inline_temps` substitutes the `__tN` temporaries introduced by desugaring into
their single use, so emitted code reads like hand-written code.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import replace

from .target import (
    TAssume, TBin, TCall, TFst, TIf, TLet, TNondet, TProgram, TRet, TSnd, TTuple, TVar, expr_nondets,
    expr_vars, pat_names, term_exprs, walk_term,
)


def subst(e, sub: dict):
    if not sub:
        return e
    if isinstance(e, TVar):
        return sub.get(e.name, e)
    if isinstance(e, TFst):
        return TFst(subst(e.arg, sub))
    if isinstance(e, TSnd):
        return TSnd(subst(e.arg, sub))
    if isinstance(e, TTuple):
        return TTuple(tuple(subst(x, sub) for x in e.items))
    if isinstance(e, TBin):
        return TBin(e.op, subst(e.left, sub), subst(e.right, sub))
    if isinstance(e, TCall):
        return TCall(e.func, tuple(subst(x, sub) for x in e.args))
    return e


def _uses(t) -> Counter:
    c: Counter = Counter()
    for n in walk_term(t):
        for e in term_exprs(n):
            c.update(expr_vars(e))
    return c


def _nondet_before(e, name: str) -> bool:
    """Whether evaluating e draws a nondet before it reads `name`."""

    def leaves(x):
        if isinstance(x, (TVar, TNondet)):
            yield x
        elif isinstance(x, (TFst, TSnd)):
            yield from leaves(x.arg)
        elif isinstance(x, TTuple):
            for y in x.items:
                yield from leaves(y)
        elif isinstance(x, TBin):
            yield from leaves(x.left)
            yield from leaves(x.right)
        elif isinstance(x, TCall):
            for y in x.args:
                yield from leaves(y)

    for leaf in leaves(e):
        if isinstance(leaf, TNondet):
            return True
        if leaf.name == name:
            return False
    return False


def _inlinable(let: TLet, uses: Counter, is_temp) -> bool:
    name = let.pat
    if not isinstance(name, str) or not is_temp(name) or uses[name] != 1 or isinstance(let.rhs, TCall):
        return False
    free = set(expr_vars(let.rhs))
    pure = next(expr_nondets(let.rhs), None) is None
    t = let.body
    steps = 0
    while True:
        here = [e for e in term_exprs(t) if name in set(expr_vars(e))]
        if here:
            if pure:
                return True
            return steps == 0 and not _nondet_before(here[0], name)
        if isinstance(t, TLet):
            if free & set(pat_names(t.pat)):
                return False
            t = t.body
        elif isinstance(t, TAssume):
            t = t.body
        elif isinstance(t, TIf):
            t = t.then if _uses(t.then)[name] else t.els
        else:
            return False
        steps += 1


def _is_temp(name: str) -> bool:
    return name.startswith("__t")


def inline_term(t, is_temp=_is_temp):
    uses = _uses(t)
    return _inline(t, {}, uses, is_temp)


def _inline(t, sub, uses, is_temp):
    chain = []
    while isinstance(t, (TLet, TAssume)):
        if isinstance(t, TLet) and _inlinable(t, uses, is_temp):
            sub = {**sub, t.pat: subst(t.rhs, sub)}
        elif isinstance(t, TLet):
            chain.append(replace(t, rhs=subst(t.rhs, sub)))
        else:
            chain.append(replace(t, left=subst(t.left, sub), right=subst(t.right, sub)))
        t = t.body
    if isinstance(t, TIf):
        tail = replace(t, cond=subst(t.cond, sub), then=_inline(t.then, sub, uses, is_temp),
                       els=_inline(t.els, sub, uses, is_temp))
    elif isinstance(t, TRet):
        tail = replace(t, value=subst(t.value, sub))
    else:
        tail = t
    for n in reversed(chain):
        tail = replace(n, body=tail)
    return tail


def inline_temps(p: TProgram, is_temp=_is_temp) -> TProgram:
    funs = tuple(replace(f, body=inline_term(f.body, is_temp)) for f in p.funs)
    return replace(p, funs=funs, main=inline_term(p.main, is_temp))


__all__ = ["inline_temps", "inline_term", "subst"]
