"""Abstract syntax of the target language: a first-order functional language with
pairs (tuples), nondeterministic integers and `assume`.

Terms are in let-normal form. Value expressions may nest tuples, projections and
arithmetic, and may contain `_` (nondeterministic integers); evaluation draws one
choice per `_`, left to right. Every term node carries a `tid` (unique per program)
and, when produced by the translator, the `nid` of the source node it came from.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterator

META = dict(compare=False, repr=False, default=None)


# ---------------------------------------------------------------- expressions

@dataclass(frozen=True)
class TNum:
    value: int


@dataclass(frozen=True)
class TVar:
    name: str


@dataclass(frozen=True)
class TFst:
    arg: "TExpr"


@dataclass(frozen=True)
class TSnd:
    arg: "TExpr"


@dataclass(frozen=True)
class TTuple:
    items: tuple


@dataclass(frozen=True)
class TBin:
    op: str  # see TARGET_OPS; comparisons and && give 0 for true
    left: "TExpr"
    right: "TExpr"


@dataclass(frozen=True)
class TNondet:
    """`_`. `kind` says why the translator introduced it: havoc (a source `_`),
    prophecy (future value of a new or borrowed reference), deref (a read through a
    reference without ownership) or junk (a component nobody reads)."""

    kind: str = "havoc"
    label: int = field(**META)  # unique per program, assigned by `number_nondets`
    ref: str = field(**META)  # the source reference a prophecy belongs to


TARGET_OPS = ("+", "-", "*", "=", "<", "<=", ">", ">=", "<>", "&&")
COMPARISONS = frozenset({"=", "<", "<=", ">", ">=", "<>", "&&"})


def apply_target_op(op: str, a: int, b: int) -> int:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "=":
        ok = a == b
    elif op == "<":
        ok = a < b
    elif op == "<=":
        ok = a <= b
    elif op == ">":
        ok = a > b
    elif op == ">=":
        ok = a >= b
    elif op == "<>":
        ok = a != b
    elif op == "&&":
        ok = a == 0 and b == 0
    else:
        raise ValueError(f"unknown operator {op}")
    return 0 if ok else 1


TExpr = TNum | TVar | TFst | TSnd | TTuple | TBin | TNondet


@dataclass(frozen=True)
class TCall:
    func: str
    args: tuple


# ---------------------------------------------------------------- terms

@dataclass(frozen=True)
class TLet:
    pat: object  # a name, "_" or a nested tuple of patterns
    rhs: object  # TExpr or TCall
    body: "Term"
    tid: int = field(**META)
    origin: int = field(**META)  # source nid
    head: bool = field(**META)  # first target node of that source node


@dataclass(frozen=True)
class TAssume:
    left: TExpr
    right: TExpr
    body: "Term"
    tid: int = field(**META)
    origin: int = field(**META)
    head: bool = field(**META)


@dataclass(frozen=True)
class TIf:
    """`ifz cond then A else B`: A when cond evaluates to 0."""

    cond: TExpr
    then: "Term"
    els: "Term"
    tid: int = field(**META)
    origin: int = field(**META)
    head: bool = field(**META)


@dataclass(frozen=True)
class TFail:
    tid: int = field(**META)
    origin: int = field(**META)
    head: bool = field(**META)


@dataclass(frozen=True)
class TRet:
    value: TExpr
    tid: int = field(**META)
    origin: int = field(**META)
    head: bool = field(**META)


Term = TLet | TAssume | TIf | TFail | TRet


@dataclass(frozen=True)
class TFunDef:
    name: str
    params: tuple[str, ...]
    body: Term


@dataclass(frozen=True)
class TProgram:
    funs: tuple[TFunDef, ...]
    main: Term
    main_params: tuple[str, ...] = ()  # treated as nondeterministic inputs

    def fun(self, name: str) -> TFunDef | None:
        for f in self.funs:
            if f.name == name:
                return f
        return None


# ---------------------------------------------------------------- traversal

def term_children(t: Term) -> tuple:
    if isinstance(t, TIf):
        return (t.then, t.els)
    if isinstance(t, (TLet, TAssume)):
        return (t.body,)
    return ()


def walk_term(t: Term) -> Iterator[Term]:
    stack = [t]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(term_children(n)))


def expr_nondets(e) -> Iterator[TNondet]:
    """Nondets of an expression (or call arguments) in evaluation order."""
    if isinstance(e, TNondet):
        yield e
    elif isinstance(e, (TFst, TSnd)):
        yield from expr_nondets(e.arg)
    elif isinstance(e, TTuple):
        for x in e.items:
            yield from expr_nondets(x)
    elif isinstance(e, TBin):
        yield from expr_nondets(e.left)
        yield from expr_nondets(e.right)
    elif isinstance(e, TCall):
        for x in e.args:
            yield from expr_nondets(x)


def expr_vars(e) -> Iterator[str]:
    if isinstance(e, TVar):
        yield e.name
    elif isinstance(e, (TFst, TSnd)):
        yield from expr_vars(e.arg)
    elif isinstance(e, TTuple):
        for x in e.items:
            yield from expr_vars(x)
    elif isinstance(e, TBin):
        yield from expr_vars(e.left)
        yield from expr_vars(e.right)
    elif isinstance(e, TCall):
        for x in e.args:
            yield from expr_vars(x)


def pat_names(p) -> Iterator[str]:
    if isinstance(p, tuple):
        for q in p:
            yield from pat_names(q)
    elif p != "_":
        yield p


def term_exprs(t: Term) -> tuple:
    if isinstance(t, TLet):
        return (t.rhs,)
    if isinstance(t, TAssume):
        return (t.left, t.right)
    if isinstance(t, TIf):
        return (t.cond,)
    if isinstance(t, TRet):
        return (t.value,)
    return ()


def program_terms(p: TProgram) -> Iterator[Term]:
    for f in p.funs:
        yield from walk_term(f.body)
    yield from walk_term(p.main)


# ---------------------------------------------------------------- numbering

def _map_expr(e, f):
    if isinstance(e, TNondet):
        return f(e)
    if isinstance(e, TFst):
        return TFst(_map_expr(e.arg, f))
    if isinstance(e, TSnd):
        return TSnd(_map_expr(e.arg, f))
    if isinstance(e, TTuple):
        return TTuple(tuple(_map_expr(x, f) for x in e.items))
    if isinstance(e, TBin):
        return TBin(e.op, _map_expr(e.left, f), _map_expr(e.right, f))
    if isinstance(e, TCall):
        return TCall(e.func, tuple(_map_expr(x, f) for x in e.args))
    return e


def number_program(p: TProgram) -> TProgram:
    """Assign fresh tids to every term and fresh labels to every nondet."""
    tids = itertools.count(1)
    labels = itertools.count(1)

    def relabel(n: TNondet) -> TNondet:
        return replace(n, label=next(labels))

    def go(t: Term) -> Term:
        # iterative over straight-line chains to stay clear of the recursion limit
        chain = []
        while isinstance(t, (TLet, TAssume)):
            chain.append(t)
            t = t.body
        if isinstance(t, TIf):
            tail = replace(t, cond=_map_expr(t.cond, relabel), then=go(t.then), els=go(t.els), tid=next(tids))
        elif isinstance(t, TRet):
            tail = replace(t, value=_map_expr(t.value, relabel), tid=next(tids))
        else:
            tail = replace(t, tid=next(tids))
        for n in reversed(chain):
            if isinstance(n, TLet):
                tail = replace(n, rhs=_map_expr(n.rhs, relabel), body=tail, tid=next(tids))
            else:
                tail = replace(n, left=_map_expr(n.left, relabel), right=_map_expr(n.right, relabel),
                               body=tail, tid=next(tids))
        return tail

    funs = tuple(replace(f, body=go(f.body)) for f in p.funs)
    return replace(p, funs=funs, main=go(p.main))


# ---------------------------------------------------------------- ML-style printing

_PREC = {"&&": 0.5, "=": 1, "<": 1, "<=": 1, ">": 1, ">=": 1, "<>": 1, "+": 2, "-": 2, "*": 3}


def expr_str(e, prec: int = 0) -> str:
    if isinstance(e, TNum):
        return str(e.value) if e.value >= 0 else f"({e.value})"
    if isinstance(e, TVar):
        return e.name
    if isinstance(e, TNondet):
        return "_"
    if isinstance(e, TFst):
        return f"fst {expr_str(e.arg, 9)}"
    if isinstance(e, TSnd):
        return f"snd {expr_str(e.arg, 9)}"
    if isinstance(e, TTuple):
        return "(" + ", ".join(expr_str(x) for x in e.items) + ")"
    if isinstance(e, TBin):
        p = _PREC[e.op]
        text = f"{expr_str(e.left, p)} {e.op} {expr_str(e.right, p + 1)}"
        return f"({text})" if p < prec or (p == prec and p <= 1) else text
    if isinstance(e, TCall):
        return f"{e.func}(" + ", ".join(expr_str(x) for x in e.args) + ")"
    raise TypeError(f"not an expression: {e!r}")


def pat_str(p) -> str:
    if isinstance(p, tuple):
        return "(" + ", ".join(pat_str(q) for q in p) + ")"
    return p


def _term_lines(t: Term, ind: str, out: list[str]) -> None:
    while True:
        if isinstance(t, TLet):
            out.append(f"{ind}let {pat_str(t.pat)} = {expr_str(t.rhs)} in")
            t = t.body
        elif isinstance(t, TAssume):
            out.append(f"{ind}assume({expr_str(t.left, 1)} = {expr_str(t.right, 1)});")
            t = t.body
        elif isinstance(t, TIf):
            out.append(f"{ind}ifz {expr_str(t.cond)} then (")
            _term_lines(t.then, ind + "  ", out)
            out.append(f"{ind}) else (")
            _term_lines(t.els, ind + "  ", out)
            out.append(f"{ind})")
            return
        elif isinstance(t, TFail):
            out.append(f"{ind}fail")
            return
        elif isinstance(t, TRet):
            out.append(f"{ind}{expr_str(t.value)}")
            return
        else:
            raise TypeError(f"not a term: {t!r}")


def term_head_str(t: Term) -> str:
    """One line describing the outermost construct of a term."""
    if isinstance(t, TLet):
        return f"let {pat_str(t.pat)} = {expr_str(t.rhs)} in"
    if isinstance(t, TAssume):
        return f"assume({expr_str(t.left, 1)} = {expr_str(t.right, 1)});"
    if isinstance(t, TIf):
        return f"ifz {expr_str(t.cond)} then .. else .."
    if isinstance(t, TFail):
        return "fail"
    return expr_str(t.value)


def term_str(t: Term, indent: str = "") -> str:
    out: list[str] = []
    _term_lines(t, indent, out)
    return "\n".join(out)


def program_str(p: TProgram) -> str:
    """Plain target syntax (the `.tgt` format read by `tparse.parse_target`)."""
    parts = []
    for f in p.funs:
        parts.append(f"fn {f.name}({', '.join(f.params)}) {{\n{term_str(f.body, '  ')}\n}}")
    main = p.main
    if p.main_params:
        parts.append(f"fn main({', '.join(p.main_params)}) {{\n{term_str(main, '  ')}\n}}")
    else:
        parts.append(term_str(main))
    return "\n\n".join(parts) + "\n"
