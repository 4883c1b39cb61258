"""Normal forms of target programs for comparing translations with reference listings.

Two programs are taken to be the same translation when their normal forms print the
same. Normalisation keeps the meaning of each function and of main:

* every `_` is drawn by its own `let n = _`; unused draws go, and a run of draws is
  ordered by where the draws are first used;
* a draw used only to pick a branch (`ifz _`, `if nondet() < 0`) becomes `ifz _`;
* every other binding with a call-free right-hand side is substituted into its uses
  (tuple patterns over such values become projections);
* projections of literal pairs and integer arithmetic are folded, and so are
  conditions that fold to a constant;
* conditions become `a = b` or `a < b` with the branches swapped as needed,
  `ifz a - b` and `ifz a - b = 0` read as `ifz a = b`, and `&&` becomes nested conditions;
* the two sides of an assume are ordered, runs of assumes are sorted;
* call results nobody reads are bound to `_`;
* main's parameters become draws, its result is 0 and the assumes right before it
  are dropped (they can only discard runs that already succeeded);
* binders are renamed in order of appearance.
"""

from __future__ import annotations

import itertools

from .target import (
    TAssume, TBin, TCall, TFail, TFst, TFunDef, TIf, TLet, TNondet, TNum, TProgram, TRet, TSnd, TTuple, TVar,
    apply_target_op, expr_str, expr_vars, program_str, term_exprs, walk_term,
)

_RELOPS = frozenset({"=", "<>", "<", "<=", ">", ">="})


def fold(e):
    """Simplify a value expression: projections of pairs and integer arithmetic."""
    if isinstance(e, (TFst, TSnd)):
        a = fold(e.arg)
        if isinstance(a, TTuple) and len(a.items) == 2:
            return a.items[0] if isinstance(e, TFst) else a.items[1]
        return type(e)(a)
    if isinstance(e, TTuple):
        return TTuple(tuple(fold(x) for x in e.items))
    if isinstance(e, TCall):
        return TCall(e.func, tuple(fold(x) for x in e.args))
    if isinstance(e, TBin):
        a, b = fold(e.left), fold(e.right)
        if isinstance(a, TNum) and isinstance(b, TNum):
            return TNum(apply_target_op(e.op, a.value, b.value))
        if e.op in ("+", "-") and isinstance(b, TNum) and b.value == 0:
            return a
        return TBin(e.op, a, b)
    return e


def _subst(e, sub: dict):
    if isinstance(e, TVar):
        return sub.get(e.name, e)
    if isinstance(e, (TFst, TSnd)):
        return type(e)(_subst(e.arg, sub))
    if isinstance(e, TTuple):
        return TTuple(tuple(_subst(x, sub) for x in e.items))
    if isinstance(e, TBin):
        return TBin(e.op, _subst(e.left, sub), _subst(e.right, sub))
    if isinstance(e, TCall):
        return TCall(e.func, tuple(_subst(x, sub) for x in e.args))
    return e


def _hoist(e, out: list, fresh):
    """Replace each `_` in e by a fresh variable, appending its name to `out`."""
    if isinstance(e, TNondet):
        n = next(fresh)
        out.append(n)
        return TVar(n)
    if isinstance(e, (TFst, TSnd)):
        return type(e)(_hoist(e.arg, out, fresh))
    if isinstance(e, TTuple):
        return TTuple(tuple(_hoist(x, out, fresh) for x in e.items))
    if isinstance(e, TBin):
        left = _hoist(e.left, out, fresh)
        return TBin(e.op, left, _hoist(e.right, out, fresh))
    if isinstance(e, TCall):
        return TCall(e.func, tuple(_hoist(x, out, fresh) for x in e.args))
    return e


def _bind_pure(pat, v, sub: dict) -> None:
    if isinstance(pat, tuple):
        for i, p in enumerate(pat):
            if isinstance(v, TTuple) and len(v.items) == len(pat):
                item = v.items[i]
            elif len(pat) == 2:
                item = (TFst if i == 0 else TSnd)(v)
            else:
                raise ValueError("cannot destructure a wide tuple that is not a literal")
            _bind_pure(p, fold(item), sub)
    elif pat != "_":
        sub[pat] = v


def canon_cond(c, then, els):
    """(cond, then, else) with cond `a = b` or `a < b`."""
    if isinstance(c, TBin) and c.op == "-":
        c = TBin("=", c.left, c.right)
    if not isinstance(c, TBin) or c.op not in _RELOPS:
        c = TBin("=", c, TNum(0))
    op, a, b = c.op, c.left, c.right
    if op == "<>":
        op, then, els = "=", els, then
    elif op == ">=":
        op, then, els = "<", els, then
    elif op == "<=":
        op, a, b, then, els = "<", b, a, els, then
    elif op == ">":
        op, a, b = "<", b, a
    if op == "=" and isinstance(a, TNum) and a.value == 0:
        a, b = b, a
    if op == "=" and isinstance(b, TNum) and b.value == 0 and isinstance(a, TBin) and a.op == "-":
        a, b = a.left, a.right
    if op == "=" and expr_str(b) < expr_str(a):
        a, b = b, a
    return TBin(op, a, b), then, els


class _Branch:
    """`ifz c then t else e`, still to be normalised (the inner half of an `&&`)."""

    def __init__(self, c, then, els):
        self.c, self.then, self.els = c, then, els


class _Norm:
    def __init__(self):
        self.fresh = (f"_n{i}" for i in itertools.count())

    def fresh_pat(self, pat, sub: dict):
        if isinstance(pat, tuple):
            return tuple(self.fresh_pat(q, sub) for q in pat)
        if pat == "_":
            return pat
        n = next(self.fresh)
        sub[pat] = TVar(n)
        return n

    def expr(self, e, sub: dict, draws: list):
        return fold(_hoist(_subst(e, sub), draws, self.fresh))

    def term(self, t, sub: dict):
        """Normalised copy of t; `sub` maps names to the pure values they stand for."""
        if isinstance(t, _Branch):
            return self.cond(t.c, t.then, t.els, sub)
        draws: list = []
        if isinstance(t, TLet):
            rhs = self.expr(t.rhs, sub, draws)
            body_sub = dict(sub)
            if isinstance(rhs, TCall):
                # call results get fresh names so earlier values never see a rebinding
                pat = self.fresh_pat(t.pat, body_sub)
                out = TLet(pat, rhs, self.term(t.body, body_sub))
            else:
                _bind_pure(t.pat, rhs, body_sub)
                out = self.term(t.body, body_sub)
        elif isinstance(t, TAssume):
            a, b = self.expr(t.left, sub, draws), self.expr(t.right, sub, draws)
            if expr_str(b) < expr_str(a):
                a, b = b, a
            out = TAssume(a, b, self.term(t.body, sub))
        elif isinstance(t, TIf):
            out = self.cond(self.expr(t.cond, sub, draws), t.then, t.els, sub)
        elif isinstance(t, TRet):
            out = TRet(self.expr(t.value, sub, draws))
        elif isinstance(t, TFail):
            return TFail()
        else:
            raise TypeError(f"not a term: {t!r}")
        for n in reversed(draws):
            out = TLet(n, TNondet(), out)
        return out

    def cond(self, c, then, els, sub):
        if isinstance(c, TNum):
            return self.term(then if c.value == 0 else els, sub)
        if isinstance(c, TBin) and c.op == "&&":
            return self.cond(c.left, _Branch(c.right, then, els), els, sub)
        c, then, els = canon_cond(c, then, els)
        return TIf(c, self.term(then, sub), self.term(els, sub))


def _uses(t) -> list:
    """Variable occurrences of t in printing order."""
    out = []
    for n in walk_term(t):
        for e in term_exprs(n):
            out.extend(expr_vars(e))
    return out


def _prune_pat(p, used: set):
    if isinstance(p, tuple):
        return tuple(_prune_pat(q, used) for q in p)
    return p if p in used else "_"


def _choice_var(c):
    """The draw a condition compares with a constant, if that is all it does."""
    if isinstance(c, TBin) and c.op in _RELOPS:
        if isinstance(c.left, TVar) and isinstance(c.right, TNum):
            return c.left.name
        if isinstance(c.right, TVar) and isinstance(c.left, TNum):
            return c.right.name
    return None


def _tidy(t, main: bool):
    """Drop unused draws and results, sort assume runs, in main drop trailing assumes."""
    if isinstance(t, TLet):
        body = _tidy(t.body, main)
        if isinstance(t.rhs, TNondet):
            uses = _uses(body)
            if t.pat not in uses:
                return body
            if isinstance(body, TIf) and _choice_var(body.cond) == t.pat and uses.count(t.pat) == 1:
                return TIf(TNondet(), body.then, body.els)
            return TLet(t.pat, t.rhs, body)
        return TLet(_prune_pat(t.pat, set(_uses(body))), t.rhs, body)
    if isinstance(t, TAssume):
        run = []
        while isinstance(t, TAssume):
            run.append((t.left, t.right))
            t = t.body
        rest = _tidy(t, main)
        if main and isinstance(rest, TRet):
            return TRet(TNum(0))
        for a, b in sorted(run, key=lambda ab: (expr_str(ab[0]), expr_str(ab[1])), reverse=True):
            rest = TAssume(a, b, rest)
        return rest
    if isinstance(t, TIf):
        return TIf(t.cond, _tidy(t.then, main), _tidy(t.els, main))
    if isinstance(t, TRet) and main:
        return TRet(TNum(0))
    return t


def _order_draws(t):
    """Order each run of consecutive draws by first use in the rest of the term."""
    if isinstance(t, TLet) and isinstance(t.rhs, TNondet):
        run = []
        while isinstance(t, TLet) and isinstance(t.rhs, TNondet):
            run.append(t.pat)
            t = t.body
        rest = _order_draws(t)
        uses = _uses(rest)
        first = {x: (uses.index(x) if x in uses else len(uses)) for x in run}
        for x in sorted(run, key=lambda x: first[x], reverse=True):
            rest = TLet(x, TNondet(), rest)
        return rest
    if isinstance(t, TLet):
        return TLet(t.pat, t.rhs, _order_draws(t.body))
    if isinstance(t, TAssume):
        return TAssume(t.left, t.right, _order_draws(t.body))
    if isinstance(t, TIf):
        return TIf(t.cond, _order_draws(t.then), _order_draws(t.els))
    return t


def _rename_term(t, ren: dict, counter):
    def name(x):
        if x == "_":
            return x
        new = f"v{next(counter)}"
        ren[x] = new
        return new

    def pat(p):
        return tuple(pat(q) for q in p) if isinstance(p, tuple) else name(p)

    def ex(e):
        return _subst(e, {k: TVar(v) for k, v in ren.items()})

    if isinstance(t, TLet):
        rhs = ex(t.rhs)
        return TLet(pat(t.pat), rhs, _rename_term(t.body, ren, counter))
    if isinstance(t, TAssume):
        return TAssume(ex(t.left), ex(t.right), _rename_term(t.body, ren, counter))
    if isinstance(t, TIf):
        return TIf(ex(t.cond), _rename_term(t.then, dict(ren), counter), _rename_term(t.els, dict(ren), counter))
    if isinstance(t, TRet):
        return TRet(ex(t.value))
    return t


def _body(t, main: bool):
    return _order_draws(_tidy(_Norm().term(t, {}), main))


def normalize(p: TProgram) -> TProgram:
    funs = []
    for f in p.funs:
        ren = {x: f"a{i}" for i, x in enumerate(f.params)}
        body = _rename_term(_body(f.body, False), ren, itertools.count())
        funs.append(TFunDef(f.name, tuple(ren[x] for x in f.params), body))
    main = p.main
    for x in reversed(p.main_params):
        main = TLet(x, TNondet(), main)
    main = _rename_term(_body(main, True), {}, itertools.count())
    return TProgram(tuple(sorted(funs, key=lambda f: f.name)), main, ())


def normal_text(p: TProgram) -> str:
    return program_str(normalize(p))


def equivalent(a: TProgram, b: TProgram) -> bool:
    return normal_text(a) == normal_text(b)


__all__ = ["normalize", "normal_text", "equivalent", "fold", "canon_cond"]
