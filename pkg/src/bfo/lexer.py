"""Tokenizer shared by the source, type and target parsers."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ParseError

SYMBOLS = [
    ":=", "<=", ">=", "!=", "<>", "&&", "->", "=>", "==",
    "=", "<", ">", "+", "-", "*", "/", "(", ")", "{", "}", "[", "]", ",", ";", ":", "|",
]


@dataclass(frozen=True)
class Token:
    kind: str  # ident, num, sym, hole, eof
    text: str
    line: int
    col: int

    @property
    def pos(self) -> tuple[int, int]:
        return (self.line, self.col)

    def __repr__(self):
        return f"{self.kind}:{self.text!r}@{self.line}:{self.col}"


def _ident_start(c: str) -> bool:
    return c.isalpha() or c == "_"


def _ident_char(c: str) -> bool:
    return c.isalnum() or c in "_'"


def tokenize(text: str, ml_comments: bool = False) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def advance(k: int):
        nonlocal i, line, col
        for _ in range(k):
            if text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = text[i]
        if c in " \t\r\n":
            advance(1)
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                advance(1)
            continue
        if ml_comments and text.startswith("(*", i):
            depth = 0
            start = (line, col)
            while i < n:
                if text.startswith("(*", i):
                    depth += 1
                    advance(2)
                elif text.startswith("*)", i):
                    depth -= 1
                    advance(2)
                    if depth == 0:
                        break
                else:
                    advance(1)
            if depth:
                raise ParseError("unterminated comment", start)
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j + 1 < n and text[j] == "." and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            toks.append(Token("num", text[i:j], line, col))
            advance(j - i)
            continue
        if _ident_start(c):
            j = i + 1
            while j < n and (_ident_char(text[j]) or (ml_comments and text[j] == "." and j + 1 < n
                                                      and text[j + 1].isalpha())):
                j += 1  # in ML text, `Module.name` is one identifier
            word = text[i:j]
            toks.append(Token("hole" if word == "_" else "ident", word, line, col))
            advance(j - i)
            continue
        for s in SYMBOLS:
            if text.startswith(s, i):
                toks.append(Token("sym", s, line, col))
                advance(len(s))
                break
        else:
            raise ParseError(f"unexpected character {c!r}", (line, col))
    toks.append(Token("eof", "", line, col))
    return toks


class TokenStream:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.i = 0

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, text: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t.kind in ("sym", "ident") and t.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.next()
            return True
        return False

    def expect(self, text: str) -> Token:
        t = self.peek()
        if not self.at(text):
            raise ParseError(f"expected {text!r}, found {t.text or 'end of input'!r}", t.pos)
        return self.next()

    def ident(self, what: str = "identifier") -> Token:
        t = self.peek()
        if t.kind != "ident":
            raise ParseError(f"expected {what}, found {t.text or 'end of input'!r}", t.pos)
        return self.next()

    def error(self, msg: str) -> ParseError:
        return ParseError(msg, self.peek().pos)
