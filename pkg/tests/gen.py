"""Random small target programs, written as text and parsed."""

from __future__ import annotations

import random

from bfo.tparse import parse_target

OPS = ("+", "-", "*", "=", "<")


class _Gen:
    def __init__(self, rng: random.Random, recursive: bool):
        self.rng = rng
        self.recursive = recursive
        self.n = 0

    def fresh(self, prefix: str = "v") -> str:
        self.n += 1
        return f"{prefix}{self.n}"

    def atom(self, ints: list) -> str:
        if ints and self.rng.random() < 0.75:
            return self.rng.choice(ints)
        return str(self.rng.randint(-2, 2))

    def block(self, ints: list, pairs: list, depth: int, fn: str | None, out: list, ind: str) -> None:
        rng = self.rng
        for _ in range(rng.randint(1, 4)):
            k = rng.random()
            if k < 0.3:
                x = self.fresh()
                out.append(f"{ind}let {x} = _ in")
                ints = ints + [x]
            elif k < 0.5:
                x = self.fresh()
                out.append(f"{ind}let {x} = {self.atom(ints)} {rng.choice(OPS)} {self.atom(ints)} in")
                ints = ints + [x]
            elif k < 0.6:
                p = self.fresh("p")
                out.append(f"{ind}let {p} = ({self.atom(ints)}, _) in")
                pairs = pairs + [p]
            elif k < 0.7 and pairs:
                p = rng.choice(pairs)
                out.append(f"{ind}assume(fst {p} = snd {p});")
                x = self.fresh()
                out.append(f"{ind}let {x} = snd {p} in")
                ints = ints + [x]
            elif k < 0.85 and ints:
                out.append(f"{ind}assume({self.atom(ints)} = {self.atom(ints)});")
            elif fn is not None and self.recursive and depth > 0:
                x = self.fresh()
                out.append(f"{ind}let {x} = {fn}({self.atom(ints)} - 1) in")
                ints = ints + [x]
        if depth > 0 and ints and rng.random() < 0.6:
            c = self.atom(ints)
            out.append(f"{ind}ifz {c} then (")
            self.block(ints, pairs, depth - 1, fn, out, ind + "  ")
            out.append(f"{ind}) else (")
            self.block(ints, pairs, depth - 1, fn, out, ind + "  ")
            out.append(f"{ind})")
            return
        if fn is None and rng.random() < 0.2:
            out.append(f"{ind}fail")
        else:
            out.append(f"{ind}{self.atom(ints)}")


def random_program_text(rng: random.Random, recursive: bool = True) -> str:
    g = _Gen(rng, recursive)
    out: list[str] = []
    calls = rng.random() < 0.5
    if calls:
        out.append("fn f(a) {")
        g.block(["a"], [], 2, "f", out, "  ")
        out.append("}")
        out.append("")
    body: list[str] = []
    g.block([], [], 3, None, body, "")
    if calls:
        x = g.fresh()
        body.insert(0, f"let {x} = f(_) in")
    out.extend(body)
    return "\n".join(out) + "\n"


def random_program(rng: random.Random, recursive: bool = True):
    return parse_target(random_program_text(rng, recursive), style="tgt")
