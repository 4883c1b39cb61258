"""Parsers for target programs.

Three concrete syntaxes map onto `target.TProgram`:

* `.tgt`: `let p = e in`, `assume(a = b);`, `assert(c)`, `ifz e then (..) else (..)`,
  `fail`, `_`, calls `f(x, y)`, functions `fn f(x, y) { .. }` before the main term;
* ML listings: `let rec f x y = ..`, `nondet()`, `assume (a) (b);`, `assert false`,
  `if c then .. else ..`, application `f x y`; the `nondet`/`assume` preamble is skipped;
* the s-expression IR written by `emit.emit_sexp`.

Booleans become integers with 0 for true, so `if c then A else B` is `ifz c then A else B`
and `assert(c); K` is `ifz c then K else fail`. `()` is 0.
"""

from __future__ import annotations

import re

from .errors import ParseError
from .lexer import TokenStream, tokenize
from .target import (
    TARGET_OPS, TAssume, TBin, TCall, TFail, TFst, TFunDef, TIf, TLet, TNondet, TNum, TProgram, TRet,
    TSnd, TTuple, TVar, number_program,
)

KEYWORDS = {"let", "rec", "in", "if", "ifz", "then", "else", "fst", "snd", "assume", "assert", "fail", "fn", "false"}
_RELOPS = {"=": "=", "==": "=", "<": "<", "<=": "<=", ">": ">", ">=": ">=", "<>": "<>", "!=": "<>"}
_TERM_START = {"let", "if", "ifz", "assume", "assert", "fail"}
_PREAMBLE = {"nondet", "assume"}


class _Parser:
    def __init__(self, text: str, ml: bool):
        self.ml = ml
        self.ts = TokenStream(tokenize(text, ml_comments=ml))
        self.tmp = 0

    # ---------------------------------------------------------------- expressions

    def expr(self):
        e = self.cmp()
        while self.ts.accept("&&"):
            e = TBin("&&", e, self.cmp())
        return e

    def cmp(self):
        e = self.sum()
        t = self.ts.peek()
        if t.kind == "sym" and t.text in _RELOPS:
            self.ts.next()
            e = TBin(_RELOPS[t.text], e, self.sum())
        return e

    def sum(self):
        e = self.prod()
        while self.ts.at("+") or self.ts.at("-"):
            op = self.ts.next().text
            e = TBin(op, e, self.prod())
        return e

    def prod(self):
        e = self.unary()
        while self.ts.at("*"):
            self.ts.next()
            e = TBin("*", e, self.unary())
        return e

    def unary(self):
        if self.ts.accept("-"):
            e = self.unary()
            return TNum(-e.value) if isinstance(e, TNum) else TBin("-", TNum(0), e)
        if self.ts.accept("fst"):
            return TFst(self.atom())
        if self.ts.accept("snd"):
            return TSnd(self.atom())
        t = self.ts.peek()
        if t.kind == "ident" and t.text not in KEYWORDS:
            if t.text == "nondet" and self.ts.at("(", 1) and self.ts.at(")", 2):
                self.ts.next(), self.ts.next(), self.ts.next()
                return TNondet("havoc")
            if self.ml and self._atom_start(self.ts.peek(1)) and t.text != "_":
                self.ts.next()
                if self.ts.at("(") and self.ts.at(")", 1):
                    self.ts.next(), self.ts.next()
                    return TCall(t.text, ())
                args = []
                while self._atom_start(self.ts.peek()):
                    args.append(self.atom())
                return TCall(t.text, tuple(args))
            if not self.ml and self.ts.at("(", 1):
                self.ts.next()
                self.ts.expect("(")
                args = []
                if not self.ts.at(")"):
                    args.append(self.expr())
                    while self.ts.accept(","):
                        args.append(self.expr())
                self.ts.expect(")")
                return TCall(t.text, tuple(args))
        return self.atom()

    def _atom_start(self, t) -> bool:
        if t.kind in ("num", "hole"):
            return True
        if t.kind == "ident":
            return t.text not in KEYWORDS
        return t.kind == "sym" and t.text == "("

    def atom(self):
        t = self.ts.next()
        if t.kind == "num":
            if "." in t.text:
                raise ParseError(f"fractional literal {t.text} in a target program", t.pos)
            return TNum(int(t.text))
        if t.kind == "hole":
            return TNondet("havoc")
        if t.kind == "ident" and t.text not in KEYWORDS:
            if t.text == "nondet" and self.ts.at("(") and self.ts.at(")", 1):
                self.ts.next(), self.ts.next()
                return TNondet("havoc")
            return TVar(t.text)
        if t.kind == "sym" and t.text == "(":
            if self.ts.accept(")"):
                return TNum(0)
            items = [self.expr()]
            while self.ts.accept(","):
                items.append(self.expr())
            self.ts.expect(")")
            return items[0] if len(items) == 1 else TTuple(tuple(items))
        raise ParseError(f"expected an expression, found {t.text or 'end of input'!r}", t.pos)

    # ---------------------------------------------------------------- patterns

    def pat(self):
        t = self.ts.next()
        if t.kind == "hole":
            return "_"
        if t.kind == "ident" and t.text not in KEYWORDS:
            return t.text
        if t.kind == "sym" and t.text == "(":
            if self.ts.accept(")"):
                return "_"
            items = [self.pat()]
            while self.ts.accept(","):
                items.append(self.pat())
            self.ts.expect(")")
            return items[0] if len(items) == 1 else tuple(items)
        raise ParseError(f"expected a pattern, found {t.text or 'end of input'!r}", t.pos)

    # ---------------------------------------------------------------- terms

    def _fresh(self) -> str:
        self.tmp += 1
        return f"__r{self.tmp}"

    def _ret(self, e, pos):
        if isinstance(e, TCall):
            r = self._fresh()
            return TLet(r, e, TRet(TVar(r)))
        if _has_call(e):
            raise ParseError("calls may only appear as a whole right-hand side", pos)
        return TRet(e)

    def term(self):
        ts = self.ts
        t = ts.peek()
        if ts.accept("let"):
            p = self.pat()
            ts.expect("=")
            rhs = self.expr()
            ts.expect("in")
            return TLet(p, rhs, self.term())
        if ts.accept("assume"):
            a = self.atom()
            if isinstance(a, TBin) and a.op == "=" and ts.at(";"):
                left, right = a.left, a.right
            else:
                left, right = a, self.atom()
            return TAssume(left, right, self._seq())
        if ts.accept("assert"):
            if ts.accept("false"):
                ts.accept(";")
                return TFail()
            c = self.atom()
            return TIf(c, self._seq(), TFail())
        if ts.accept("fail"):
            return TFail()
        if ts.accept("ifz") or ts.accept("if"):
            c = self.expr()
            ts.expect("then")
            a = self.term()
            ts.expect("else")
            b = self.term()
            return TIf(c, a, b)
        if ts.at("(") and ts.peek(1).kind == "ident" and ts.peek(1).text in _TERM_START:
            ts.next()
            body = self.term()
            ts.expect(")")
            return body
        return self._ret(self.expr(), t.pos)

    def _seq(self):
        """Continuation after `assume ..` or `assert ..`: `; term`, or the end (returns 0)."""
        if self.ts.accept(";"):
            if self.ts.at(")") or self.ts.at("}") or self.ts.peek().kind == "eof":
                return TRet(TNum(0))
            return self.term()
        return TRet(TNum(0))

    # ---------------------------------------------------------------- programs

    def tgt_program(self) -> TProgram:
        funs = []
        main, main_params = None, ()
        while self.ts.at("fn"):
            self.ts.next()
            name = self.ts.ident("function name").text
            self.ts.expect("(")
            params = []
            if not self.ts.at(")"):
                params.append(self.ts.ident("parameter").text)
                while self.ts.accept(","):
                    params.append(self.ts.ident("parameter").text)
            self.ts.expect(")")
            self.ts.expect("{")
            body = self.term()
            self.ts.expect("}")
            if name == "main":
                main, main_params = body, tuple(params)
            else:
                funs.append(TFunDef(name, tuple(params), body))
        if main is None:
            main = self.term()
        t = self.ts.peek()
        if t.kind != "eof":
            raise ParseError(f"unexpected {t.text!r} after the main term", t.pos)
        return TProgram(tuple(funs), main, main_params)

    def ml_program(self) -> TProgram:
        funs = []
        main, main_params = None, ()
        while self.ts.peek().kind != "eof":
            start = self.ts.expect("let")
            if start.col != 1:
                raise ParseError("top-level definitions start in the first column", start.pos)
            self.ts.accept("rec")
            name = self.ts.ident("definition name").text
            if name in _PREAMBLE:
                self._skip_definition()
                continue
            params = []
            while not self.ts.at("="):
                if self.ts.accept("("):
                    self.ts.expect(")")
                    continue
                params.append(self.ts.ident("parameter").text)
            self.ts.expect("=")
            body = self.term()
            if name == "main":
                main, main_params = body, tuple(params)
            else:
                funs.append(TFunDef(name, tuple(params), body))
        if main is None:
            raise ParseError("no `let main` definition", self.ts.peek().pos)
        return TProgram(tuple(funs), main, main_params)

    def _skip_definition(self):
        while True:
            t = self.ts.peek()
            if t.kind == "eof" or (t.col == 1 and t.text == "let"):
                return
            self.ts.next()


def _has_call(e) -> bool:
    if isinstance(e, TCall):
        return True
    if isinstance(e, (TFst, TSnd)):
        return _has_call(e.arg)
    if isinstance(e, TTuple):
        return any(_has_call(x) for x in e.items)
    if isinstance(e, TBin):
        return _has_call(e.left) or _has_call(e.right)
    return False


def looks_like_ml(text: str) -> bool:
    return bool(re.search(r"^let\s+(rec\s+)?\w[\w']*[^=\n]*=\s*$|nondet\s*\(\s*\)|^let main", text, re.M))


def parse_target(text: str, style: str = "auto") -> TProgram:
    """Parse `.tgt` text (style "tgt"), an ML listing ("ml"), or s-expressions ("sexp")."""
    if style == "auto":
        if text.lstrip().startswith(";;"):
            style = "sexp"
        else:
            style = "ml" if looks_like_ml(text) else "tgt"
    if style == "sexp":
        return parse_sexp(text)
    p = _Parser(text, ml=style == "ml")
    prog = p.ml_program() if style == "ml" else p.tgt_program()
    return number_program(prog)


# ---------------------------------------------------------------- s-expressions

_SEXP_TOKEN = re.compile(r"\s*(?:(;[^\n]*)|(\()|(\))|([^\s()]+))")


def read_sexps(text: str) -> list:
    stack: list[list] = [[]]
    pos = 0
    while pos < len(text):
        m = _SEXP_TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip():
                raise ParseError(f"bad s-expression near {text[pos:pos + 20]!r}")
            break
        pos = m.end()
        if m.group(1):
            continue
        if m.group(2):
            stack.append([])
        elif m.group(3):
            if len(stack) == 1:
                raise ParseError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        elif m.group(4):
            stack[-1].append(m.group(4))
    if len(stack) != 1:
        raise ParseError("unbalanced '('")
    return stack[0]


def _sx_expr(s):
    if isinstance(s, str):
        if re.fullmatch(r"-?\d+", s):
            return TNum(int(s))
        return TVar(s)
    head, *rest = s
    if head == "nondet":
        return TNondet(rest[0] if rest else "havoc")
    if head == "fst":
        return TFst(_sx_expr(rest[0]))
    if head == "snd":
        return TSnd(_sx_expr(rest[0]))
    if head == "tuple":
        return TTuple(tuple(_sx_expr(x) for x in rest))
    if head == "call":
        return TCall(rest[0], tuple(_sx_expr(x) for x in rest[1:]))
    if head in TARGET_OPS and len(rest) == 2:
        return TBin(head, _sx_expr(rest[0]), _sx_expr(rest[1]))
    raise ParseError(f"unknown s-expression form {head!r}")


def _sx_pat(s):
    if isinstance(s, str):
        return s
    if s and s[0] == "tuple":
        return tuple(_sx_pat(x) for x in s[1:])
    raise ParseError(f"bad pattern {s!r}")


def _sx_term(s):
    chain = []
    while isinstance(s, list) and s and s[0] in ("let", "assume"):
        chain.append(s)
        s = s[3]
    if not isinstance(s, list) or not s:
        raise ParseError(f"bad term {s!r}")
    if s[0] == "ifz":
        tail = TIf(_sx_expr(s[1]), _sx_term(s[2]), _sx_term(s[3]))
    elif s[0] == "fail":
        tail = TFail()
    elif s[0] == "ret":
        tail = TRet(_sx_expr(s[1]))
    else:
        raise ParseError(f"unknown term form {s[0]!r}")
    for n in reversed(chain):
        if n[0] == "let":
            tail = TLet(_sx_pat(n[1]), _sx_expr(n[2]), tail)
        else:
            tail = TAssume(_sx_expr(n[1]), _sx_expr(n[2]), tail)
    return tail


def parse_sexp(text: str) -> TProgram:
    first = text.lstrip().splitlines()[0] if text.strip() else ""
    m = re.match(r";;\s*bfo-target-sexp\s+(\d+)", first)
    if not m:
        raise ParseError("missing `;; bfo-target-sexp <version>` header")
    if m.group(1) != "1":
        raise ParseError(f"unsupported s-expression version {m.group(1)}")
    funs, main, main_params = [], None, ()
    for form in read_sexps(text):
        if not isinstance(form, list) or not form:
            raise ParseError(f"unexpected top-level form {form!r}")
        if form[0] == "fun":
            funs.append(TFunDef(form[1], tuple(form[2]), _sx_term(form[3])))
        elif form[0] == "main":
            main_params, main = tuple(form[1]), _sx_term(form[2])
        else:
            raise ParseError(f"unknown top-level form {form[0]!r}")
    if main is None:
        raise ParseError("no (main ...) form")
    return number_program(TProgram(tuple(funs), main, main_params))


__all__ = ["parse_target", "parse_sexp", "read_sexps", "looks_like_ml"]
