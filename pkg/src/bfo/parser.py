"""Parser for the source language, with desugaring and alpha-renaming.

The concrete syntax is documented in docs/GRAMMAR.md. Surface sugar (nested
dereferences, `_`, assertions, `if` on arbitrary conditions, statement sequencing)
is expanded into the core forms of `syntax` while parsing, using fresh `__tN`
temporaries. A final pass renames binders so that every name is bound once.
"""

from __future__ import annotations

import itertools
from dataclasses import replace
from typing import Callable

from .errors import ParseError
from .lexer import Token, TokenStream, tokenize
from .ownership import INT, FnType, Lend, OwnType, RefType, frac
from .syntax import (
    AliasAssume, Arith, Assign, BinOp, BorrowAnn, EndLft, Expr, Fail, FunDef, IfZ, LetAlias,
    LetArith, LetCall, LetDeref, LetHavoc, LetMkRef, Name, NewLft, Num, Param, Program, Tuple,
    TypeAnn, Var,
)

KEYWORDS = {
    "let", "in", "mkref", "newlft", "endlft", "alias", "assert", "if", "then", "else", "ifz",
    "fail", "fn", "as", "borrow", "lend", "ref", "int",
}

COMPARE = {"=", "==", "<", "<=", ">", ">=", "!=", "<>"}

Wrap = Callable[[Expr], Expr]


def parse_type(ts: TokenStream) -> OwnType:
    if ts.accept("int"):
        return INT
    t = ts.peek()
    ts.expect("ref")
    ts.expect("<")
    lft = ts.ident("lifetime").text
    ts.expect(",")
    own = parse_rational(ts)
    lend = None
    if ts.accept("lend"):
        target = ts.ident("lifetime").text
        ts.expect(":")
        amount = parse_rational(ts)
        if amount:
            lend = Lend(target, amount)
    ts.expect(">")
    try:
        return RefType(lft, own, lend)
    except ValueError as exc:
        raise ParseError(str(exc), t.pos) from None


def parse_rational(ts: TokenStream):
    t = ts.peek()
    if t.kind != "num":
        raise ParseError(f"expected a rational literal, found {t.text!r}", t.pos)
    ts.next()
    q = frac(t.text)
    if ts.accept("/"):
        d = ts.peek()
        if d.kind != "num" or "." in d.text:
            raise ParseError("expected an integer denominator", d.pos)
        ts.next()
        if int(d.text) == 0:
            raise ParseError("zero denominator", d.pos)
        q = q / int(d.text)
    return q


def type_from_text(text: str) -> OwnType:
    ts = TokenStream(tokenize(text))
    t = parse_type(ts)
    if ts.peek().kind != "eof":
        raise ts.error("trailing input after type")
    return t


def _compose(wraps: list[Wrap], body: Expr) -> Expr:
    for w in reversed(wraps):
        body = w(body)
    return body


def sequence(first: Expr, rest: Expr) -> Expr:
    """Run `first`, discard its value, then run `rest` (copied into every tail)."""
    if isinstance(first, (Var, Tuple)):
        return rest
    if isinstance(first, Fail):
        return first
    if isinstance(first, IfZ):
        return replace(first, then=sequence(first.then, rest), els=sequence(first.els, rest))
    if isinstance(first, (Assign, AliasAssume, EndLft)):
        return replace(first, cont=sequence(first.cont, rest))
    return replace(first, body=sequence(first.body, rest))


class _Parser:
    def __init__(self, text: str):
        self.ts = TokenStream(tokenize(text))
        self.fresh = itertools.count(1)
        self.funs: set[str] = set()
        toks = self.ts.toks
        for a, b in zip(toks, toks[1:]):
            if a.kind == "ident" and a.text == "fn" and b.kind == "ident":
                self.funs.add(b.text)

    def temp(self) -> str:
        return f"__t{next(self.fresh)}"

    # ---------------------------------------------------------------- program

    def program(self) -> Program:
        funs = []
        while self.ts.at("fn"):
            funs.append(self.fundef())
        main = self.seq()
        if self.ts.peek().kind != "eof":
            raise self.ts.error(f"unexpected {self.ts.peek().text!r}")
        names = [f.name for f in funs]
        for f in funs:
            if names.count(f.name) > 1:
                raise ParseError(f"function {f.name} defined twice", f.pos)
        return Program(tuple(funs), main)

    def fundef(self) -> FunDef:
        start = self.ts.expect("fn")
        name = self.ts.ident("function name").text
        lfts: list[str] = []
        order: set = set()
        if self.ts.accept("<"):
            if not self.ts.at(">") and not self.ts.at(";"):
                lfts.append(self.ts.ident("lifetime").text)
                while self.ts.accept(","):
                    lfts.append(self.ts.ident("lifetime").text)
            if self.ts.accept(";"):
                while True:
                    a = self.ts.ident("lifetime").text
                    self.ts.expect("<")
                    b = self.ts.ident("lifetime").text
                    order.add((a, b))
                    if not self.ts.accept(","):
                        break
            self.ts.expect(">")
        self.ts.expect("(")
        params = []
        if not self.ts.at(")"):
            while True:
                pname = self.ts.ident("parameter").text
                self.ts.expect(":")
                pre = parse_type(self.ts)
                post = parse_type(self.ts) if self.ts.accept("->") else pre
                params.append(Param(pname, pre, post))
                if not self.ts.accept(","):
                    break
        self.ts.expect(")")
        ret: OwnType | tuple = INT
        if self.ts.accept("->"):
            if self.ts.accept("("):
                rs = [parse_type(self.ts)]
                while self.ts.accept(","):
                    rs.append(parse_type(self.ts))
                self.ts.expect(")")
                ret = tuple(rs) if len(rs) > 1 else rs[0]
            else:
                ret = parse_type(self.ts)
        self.ts.expect("{")
        body = self.seq()
        self.ts.expect("}")
        fd = FunDef(name, tuple(lfts), frozenset(order), tuple(params), ret, body, pos=start.pos)
        try:
            fd.fn_type()
        except Exception as exc:
            raise ParseError(f"bad signature for {name}: {exc}", start.pos) from None
        return fd

    # ---------------------------------------------------------------- sequences

    def rest(self, pos, nosemi: bool = False) -> Expr:
        """Continuation after a statement: `; seq` or the unit value."""
        if not nosemi and self.ts.accept(";"):
            if self._block_ends():
                return self.unit(pos)
            return self.seq()
        return self.unit(pos)

    def _block_ends(self) -> bool:
        t = self.ts.peek()
        return t.kind == "eof" or (t.kind == "sym" and t.text in (")", "}")) or (
            t.kind == "ident" and t.text == "else")

    def after_value(self, value: Expr, pos, nosemi: bool) -> Expr:
        if not nosemi and self.ts.accept(";"):
            if self._block_ends():
                return sequence(value, self.unit(pos))
            return sequence(value, self.seq())
        return value

    def unit(self, pos) -> Expr:
        t = self.temp()
        return LetArith(t, Num(0), Var(t, pos=pos), pos=pos)

    def seq(self, nosemi: bool = False) -> Expr:
        ts = self.ts
        tok = ts.peek()
        pos = tok.pos
        if ts.at("let"):
            return self.let()
        if ts.accept("newlft"):
            lft = ts.ident("lifetime").text
            ts.expect("in")
            return NewLft(lft, self.seq(), pos=pos)
        if ts.accept("endlft"):
            lft = ts.ident("lifetime").text
            return EndLft(lft, self.rest(pos, nosemi), pos=pos)
        if ts.accept("alias"):
            ts.expect("(")
            x = ts.ident().text
            ts.expect("=")
            y = ts.ident().text
            ts.expect(")")
            ann = None
            if ts.accept("as"):
                tx = parse_type(ts)
                ts.expect(",")
                ty = parse_type(ts)
                ann = (tx, ty)
            return AliasAssume(x, y, ann, self.rest(pos, nosemi), pos=pos)
        if ts.accept("assert"):
            ts.expect("(")
            conds = [self.condition()]
            while ts.accept("&&"):
                conds.append(self.condition())
            ts.expect(")")
            body = self.rest(pos, nosemi)
            for wraps, o, negated in reversed(conds):
                c = self.temp()
                k, f = (Fail(pos=pos), body) if negated else (body, Fail(pos=pos))
                body = _compose(wraps, LetArith(c, o, IfZ(c, k, f, pos=pos), pos=pos))
            return body
        if ts.accept("ifz"):
            c = ts.ident().text
            ts.expect("then")
            a = self.branch()
            ts.expect("else")
            b = self.branch()
            return self.after_value(IfZ(c, a, b, pos=pos), pos, nosemi)
        if ts.accept("if"):
            return self.if_expr(pos, nosemi)
        if ts.accept("fail"):
            return Fail(pos=pos)
        if tok.kind == "ident" and ts.at(":=", 1):
            x = ts.next().text
            ts.next()
            wraps, o = self.arith()
            if isinstance(o, Name):
                src = o.name
            else:
                src = self.temp()
                wraps.append(lambda b, s=src, o=o: LetArith(s, o, b, pos=pos))
            return _compose(wraps, Assign(x, src, self.rest(pos, nosemi), pos=pos))
        # a value: the result of the block, or a statement whose value is discarded
        return self.after_value(self.value(pos), pos, nosemi)

    def branch(self) -> Expr:
        """A branch of `if`: it does not extend over a following `;`."""
        return self.seq(nosemi=True)

    def if_expr(self, pos, nosemi: bool) -> Expr:
        ts = self.ts
        conds = [self.condition()]
        while ts.accept("&&"):
            conds.append(self.condition())
        ts.expect("then")
        a = self.branch()
        ts.expect("else")
        b = self.branch()
        # `if c1 && c2 then A else B` is `if c1 then (if c2 then A else B) else B`
        e = a
        for wraps, o, negated in reversed(conds):
            yes, no = (b, e) if negated else (e, b)
            if isinstance(o, Name):
                e = _compose(wraps, IfZ(o.name, yes, no, pos=pos))
            else:
                c = self.temp()
                e = _compose(wraps, LetArith(c, o, IfZ(c, yes, no, pos=pos), pos=pos))
        return self.after_value(e, pos, nosemi)

    # ---------------------------------------------------------------- let

    def let(self) -> Expr:
        ts = self.ts
        start = ts.expect("let")
        pos = start.pos
        if ts.accept("("):
            names = [self.binder()]
            while ts.accept(","):
                names.append(self.binder())
            ts.expect(")")
            ts.expect("=")
            wraps, call = self.call_expr(tuple(names), pos)
            ts.expect("in")
            return _compose(wraps, call(self.seq()))
        x = self.binder()
        ts.expect("=")
        wraps, make = self.rhs(x, pos)
        ts.expect("in")
        return _compose(wraps, make(self.seq()))

    def binder(self) -> str:
        t = self.ts.peek()
        if t.kind == "hole":
            self.ts.next()
            return self.temp()
        if t.text in KEYWORDS:
            raise ParseError(f"keyword {t.text!r} used as a name", t.pos)
        return self.ts.ident("binder").text

    def rhs(self, x: str, pos) -> tuple[list[Wrap], Wrap]:
        ts = self.ts
        t = ts.peek()
        if ts.accept("mkref"):
            wraps, src = self.operand_name(pos)
            lft = None
            if ts.accept("as"):
                at = ts.peek()
                ty = parse_type(ts)
                if not isinstance(ty, RefType) or ty.own != 1 or ty.lend is not None:
                    raise ParseError("mkref annotation must be ref<α, 1>", at.pos)
                lft = ty.lft
            return wraps, lambda b: LetMkRef(x, src, lft, b, pos=pos)
        if t.kind == "hole" and self._ends_rhs(1):
            ts.next()
            return [], lambda b: LetHavoc(x, b, pos=pos)
        if ts.at("*") and ts.peek(1).kind == "ident" and self._ends_rhs(2):
            ts.next()
            y = ts.next().text
            return [], lambda b: LetDeref(x, y, b, pos=pos)
        if t.kind == "ident" and t.text not in KEYWORDS and t.text not in self.funs and (
            self._ends_rhs(1) or ts.at("as", 1) or ts.at("borrow", 1)
        ):
            ts.next()
            y = t.text
            ann = None
            if ts.accept("borrow"):
                ann = BorrowAnn(ts.ident("lifetime").text)
            elif ts.accept("as"):
                ann = TypeAnn(parse_type(ts))
            return [], lambda b: LetAlias(x, y, ann, b, pos=pos)
        if t.kind == "ident" and t.text in self.funs and (ts.at("(", 1) or ts.at("<", 1)):
            save = ts.i
            wraps, call = self.call_expr((x,), pos)
            if self._ends_rhs(0):
                return wraps, call
            ts.i = save
        wraps, o = self.arith()
        return wraps, lambda b: LetArith(x, o, b, pos=pos)

    def _ends_rhs(self, k: int) -> bool:
        t = self.ts.peek(k)
        return (t.kind == "ident" and t.text == "in") or t.kind == "eof"

    def call_expr(self, names: tuple[str, ...], pos) -> tuple[list[Wrap], Wrap]:
        ts = self.ts
        f = ts.ident("function name")
        if f.text not in self.funs:
            raise ParseError(f"unknown function {f.text}", f.pos)
        lfts = None
        if ts.accept("<"):
            ls = [ts.ident("lifetime").text]
            while ts.accept(","):
                ls.append(ts.ident("lifetime").text)
            ts.expect(">")
            lfts = tuple(ls)
        ts.expect("(")
        wraps: list[Wrap] = []
        args = []
        if not ts.at(")"):
            while True:
                w, a = self.operand_name(pos)
                wraps.extend(w)
                args.append(a)
                if not ts.accept(","):
                    break
        ts.expect(")")
        return wraps, lambda b: LetCall(names, f.text, lfts, tuple(args), b, pos=pos)

    # ---------------------------------------------------------------- values

    def value(self, pos) -> Expr:
        ts = self.ts
        if ts.at("(") and ts.at(")", 1):
            ts.next()
            ts.next()
            return self.unit(pos)
        if ts.at("("):
            save = ts.i
            ts.next()
            try:
                wraps, first = self.operand_name(pos)
                is_tuple = ts.at(",")
            except ParseError:
                is_tuple = False
            if is_tuple:
                names = [first]
                while ts.accept(","):
                    w, nm = self.operand_name(pos)
                    wraps.extend(w)
                    names.append(nm)
                ts.expect(")")
                return _compose(wraps, Tuple(tuple(names), pos=pos))
            ts.i = save
            ts.next()
            e = self.seq()
            ts.expect(")")
            return e
        t = ts.peek()
        if t.kind == "ident" and t.text not in KEYWORDS and t.text not in self.funs and self._value_ends(1):
            ts.next()
            return Var(t.text, pos=pos)
        if t.kind == "ident" and t.text in self.funs:
            r = self.temp()
            wraps, call = self.call_expr((r,), pos)
            return _compose(wraps, call(Var(r, pos=pos)))
        r = self.temp()
        wraps, make = self.rhs_value(r, pos)
        return _compose(wraps, make(Var(r, pos=pos)))

    def rhs_value(self, r: str, pos):
        ts = self.ts
        if ts.peek().kind == "hole" and self._value_ends(1):
            ts.next()
            return [], lambda b: LetHavoc(r, b, pos=pos)
        if ts.at("*") and ts.peek(1).kind == "ident" and self._value_ends(2):
            ts.next()
            y = ts.next().text
            return [], lambda b: LetDeref(r, y, b, pos=pos)
        wraps, o = self.arith()
        return wraps, lambda b: LetArith(r, o, b, pos=pos)

    def _value_ends(self, k: int) -> bool:
        t = self.ts.peek(k)
        return t.kind == "eof" or (t.kind == "sym" and t.text in (";", ")", "}")) or (
            t.kind == "ident" and t.text == "else")

    def operand_name(self, pos) -> tuple[list[Wrap], str]:
        """An operand that must end up in a variable; hoists anything else."""
        ts = self.ts
        t = ts.peek()
        if t.kind == "ident" and t.text not in KEYWORDS and t.text not in self.funs and not self._continues_arith(1):
            ts.next()
            return [], t.text
        if ts.at("(") and ts.at("mkref", 1):
            ts.next()
            w, nm = self.operand_name(pos)
            ts.expect(")")
            return w, nm
        if ts.accept("mkref"):
            wraps, src = self.operand_name(pos)
            r = self.temp()
            wraps.append(lambda b: LetMkRef(r, src, None, b, pos=pos))
            return wraps, r
        if t.kind == "hole" and not self._continues_arith(1):
            ts.next()
            r = self.temp()
            return [lambda b: LetHavoc(r, b, pos=pos)], r
        wraps, o = self.arith()
        if isinstance(o, Name):
            return wraps, o.name
        r = self.temp()
        wraps.append(lambda b: LetArith(r, o, b, pos=pos))
        return wraps, r

    def _continues_arith(self, k: int) -> bool:
        t = self.ts.peek(k)
        return t.kind == "sym" and t.text in {"+", "-", "*"} | COMPARE

    # ---------------------------------------------------------------- arithmetic

    def condition(self) -> tuple[list[Wrap], Arith, bool]:
        """A condition; returns (hoisted bindings, arith, negated)."""
        wraps, left = self.sum()
        t = self.ts.peek()
        if t.kind == "sym" and t.text in COMPARE:
            self.ts.next()
            w2, right = self.sum()
            wraps.extend(w2)
            op = t.text
            if op in ("=", "=="):
                return wraps, BinOp("-", left, right), False
            if op in ("!=", "<>"):
                return wraps, BinOp("-", left, right), True
            if op == ">":
                return wraps, BinOp("<", right, left), False
            if op == ">=":
                return wraps, BinOp("<=", right, left), False
            return wraps, BinOp(op, left, right), False
        return wraps, left, False

    def arith(self) -> tuple[list[Wrap], Arith]:
        wraps, left = self.sum()
        t = self.ts.peek()
        if t.kind == "sym" and t.text in COMPARE:
            self.ts.next()
            w2, right = self.sum()
            wraps.extend(w2)
            op = t.text
            if op == "==":
                op = "="
            if op == ">":
                return wraps, BinOp("<", right, left)
            if op == ">=":
                return wraps, BinOp("<=", right, left)
            if op in ("!=", "<>"):
                raise ParseError("'!=' is only allowed in assert or if conditions", t.pos)
            return wraps, BinOp(op, left, right)
        return wraps, left

    def sum(self):
        wraps, left = self.product()
        while self.ts.at("+") or self.ts.at("-"):
            op = self.ts.next().text
            w, right = self.product()
            wraps.extend(w)
            left = BinOp(op, left, right)
        return wraps, left

    def product(self):
        wraps, left = self.atom()
        while self.ts.at("*"):
            self.ts.next()
            w, right = self.atom()
            wraps.extend(w)
            left = BinOp("*", left, right)
        return wraps, left

    def atom(self) -> tuple[list[Wrap], Arith]:
        ts = self.ts
        t = ts.peek()
        pos = t.pos
        if t.kind == "num":
            ts.next()
            if "." in t.text:
                raise ParseError("integer expected", t.pos)
            return [], Num(int(t.text))
        if ts.accept("-"):
            w, a = self.atom()
            if isinstance(a, Num):
                return w, Num(-a.value)
            return w, BinOp("-", Num(0), a)
        if t.kind == "hole":
            ts.next()
            r = self.temp()
            return [lambda b: LetHavoc(r, b, pos=pos)], Name(r)
        if ts.accept("*"):
            y = ts.ident("reference").text
            r = self.temp()
            return [lambda b: LetDeref(r, y, b, pos=pos)], Name(r)
        if ts.at("(") and ts.at(")", 1):
            ts.next()
            ts.next()
            return [], Num(0)
        if ts.accept("("):
            wraps, o = self.arith()
            ts.expect(")")
            return wraps, o
        if t.kind == "ident" and t.text in self.funs:
            r = self.temp()
            wraps, call = self.call_expr((r,), pos)
            return wraps + [call], Name(r)
        if t.kind == "ident" and t.text not in KEYWORDS:
            ts.next()
            return [], Name(t.text)
        raise ParseError(f"unexpected {t.text or 'end of input'!r} in expression", t.pos)


# ---------------------------------------------------------------- renaming

class _Renamer:
    """Gives every binder a program-wide unique name and every node a fresh nid."""

    def __init__(self):
        self.used: set[str] = set()
        self.used_lfts: set[str] = set()
        self.nid = itertools.count(1)

    def fresh(self, name: str, pool: set) -> str:
        if name not in pool:
            pool.add(name)
            return name
        base = name
        for i in itertools.count(1):
            cand = f"{base}_{i}"
            if cand not in pool:
                pool.add(cand)
                return cand
        raise AssertionError

    def lookup(self, env: dict, x: str, pos) -> str:
        if x not in env:
            raise ParseError(f"unbound variable {x}", pos)
        return env[x]

    def arith(self, o: Arith, env: dict, pos) -> Arith:
        if isinstance(o, Num):
            return o
        if isinstance(o, Name):
            return Name(self.lookup(env, o.name, pos))
        return BinOp(o.op, self.arith(o.left, env, pos), self.arith(o.right, env, pos))

    def lft(self, lenv: dict, a: str) -> str:
        return lenv.get(a, a)

    def type(self, t, lenv):
        if isinstance(t, RefType):
            lend = Lend(self.lft(lenv, t.lend.lft), t.lend.amount) if t.lend else None
            return RefType(self.lft(lenv, t.lft), t.own, lend)
        return t

    def expr(self, e: Expr, env: dict, lenv: dict) -> Expr:
        nid = next(self.nid)
        pos = e.pos
        if isinstance(e, Var):
            return Var(self.lookup(env, e.name, pos), nid=nid, pos=pos)
        if isinstance(e, Tuple):
            return Tuple(tuple(self.lookup(env, x, pos) for x in e.names), nid=nid, pos=pos)
        if isinstance(e, Fail):
            return Fail(nid=nid, pos=pos)
        if isinstance(e, LetArith):
            o = self.arith(e.arith, env, pos)
            x = self.fresh(e.name, self.used)
            return LetArith(x, o, self.expr(e.body, {**env, e.name: x}, lenv), nid=nid, pos=pos)
        if isinstance(e, LetAlias):
            y = self.lookup(env, e.src, pos)
            ann = e.ann
            if isinstance(ann, BorrowAnn):
                ann = BorrowAnn(self.lft(lenv, ann.lft))
            elif isinstance(ann, TypeAnn):
                ann = TypeAnn(self.type(ann.type, lenv))
            x = self.fresh(e.name, self.used)
            return LetAlias(x, y, ann, self.expr(e.body, {**env, e.name: x}, lenv), nid=nid, pos=pos)
        if isinstance(e, LetMkRef):
            y = self.lookup(env, e.src, pos)
            lft = self.lft(lenv, e.lft) if e.lft else None
            x = self.fresh(e.name, self.used)
            return LetMkRef(x, y, lft, self.expr(e.body, {**env, e.name: x}, lenv), nid=nid, pos=pos)
        if isinstance(e, LetDeref):
            y = self.lookup(env, e.src, pos)
            x = self.fresh(e.name, self.used)
            return LetDeref(x, y, self.expr(e.body, {**env, e.name: x}, lenv), nid=nid, pos=pos)
        if isinstance(e, LetHavoc):
            x = self.fresh(e.name, self.used)
            return LetHavoc(x, self.expr(e.body, {**env, e.name: x}, lenv), nid=nid, pos=pos)
        if isinstance(e, Assign):
            return Assign(self.lookup(env, e.target, pos), self.lookup(env, e.src, pos),
                          self.expr(e.cont, env, lenv), nid=nid, pos=pos)
        if isinstance(e, IfZ):
            return IfZ(self.lookup(env, e.cond, pos), self.expr(e.then, env, lenv),
                       self.expr(e.els, env, lenv), nid=nid, pos=pos)
        if isinstance(e, LetCall):
            args = tuple(self.lookup(env, a, pos) for a in e.args)
            lfts = tuple(self.lft(lenv, a) for a in e.lfts) if e.lfts is not None else None
            new_env = dict(env)
            names = []
            for b in e.binders:
                nb = self.fresh(b, self.used)
                new_env[b] = nb
                names.append(nb)
            return LetCall(tuple(names), e.func, lfts, args, self.expr(e.body, new_env, lenv), nid=nid, pos=pos)
        if isinstance(e, AliasAssume):
            ann = (self.type(e.ann[0], lenv), self.type(e.ann[1], lenv)) if e.ann else None
            return AliasAssume(self.lookup(env, e.left, pos), self.lookup(env, e.right, pos), ann,
                               self.expr(e.cont, env, lenv), nid=nid, pos=pos)
        if isinstance(e, NewLft):
            a = self.fresh(e.lft, self.used_lfts)
            return NewLft(a, self.expr(e.body, env, {**lenv, e.lft: a}), nid=nid, pos=pos)
        if isinstance(e, EndLft):
            return EndLft(self.lft(lenv, e.lft), self.expr(e.cont, env, lenv), nid=nid, pos=pos)
        raise TypeError(f"unknown node {e!r}")

    def program(self, p: Program) -> Program:
        # main keeps its names; functions are renamed after it
        main = self.expr(p.main, {}, {})
        main_lfts = set(self.used_lfts)
        funs = []
        for f in p.funs:
            self.used_lfts = set(main_lfts) | set(f.lfts)
            params = []
            env = {}
            for q in f.params:
                if q.name in env:
                    raise ParseError(f"duplicate parameter {q.name} in {f.name}", f.pos)
                nq = self.fresh(q.name, self.used)
                env[q.name] = nq
                params.append(Param(nq, q.type, q.post))
            lenv = {a: a for a in f.lfts}
            body = self.expr(f.body, env, lenv)
            funs.append(replace(f, params=tuple(params), body=body))
        return Program(tuple(funs), main)


def rename_program(p: Program) -> Program:
    return _Renamer().program(p)


def parse(text: str) -> Program:
    """Parse, desugar and alpha-rename a source program."""
    return rename_program(_Parser(text).program())


def parse_expr(text: str) -> Expr:
    return parse(text).main


def comment_lines(text: str) -> dict[int, str]:
    """Line number → text of its `//` comment (outside of any token)."""
    out = {}
    for t_line, line in enumerate(text.splitlines(), 1):
        idx = line.find("//")
        if idx >= 0:
            out[t_line] = line[idx + 2:].strip()
    return out


def code_lines(text: str) -> set[int]:
    out = set()
    for n, line in enumerate(text.splitlines(), 1):
        code = line.split("//", 1)[0].strip()
        if code:
            out.add(n)
    return out
