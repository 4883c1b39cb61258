"""Emitters for target programs: OCaml-style ML text and a versioned s-expression IR."""

from __future__ import annotations

from .simplify import inline_temps
from .target import (
    COMPARISONS, TAssume, TBin, TCall, TFail, TFst, TIf, TLet, TNondet, TNum, TProgram, TRet, TSnd,
    TTuple, TVar, pat_str, program_str,
)

ML_PREAMBLE = """let nondet () = Random.int(0)
let rec assume x n =
  if x = n then () else assume x n
"""

SEXP_HEADER = ";; bfo-target-sexp 1"

# ---------------------------------------------------------------- ML

_ML_PREC = {"&&": 1, "=": 2, "<": 2, "<=": 2, ">": 2, ">=": 2, "<>": 2, "+": 3, "-": 3, "*": 4}


def ml_expr(e, prec: int = 0) -> str:
    """An integer-valued expression."""
    if isinstance(e, TNum):
        return str(e.value) if e.value >= 0 else f"({e.value})"
    if isinstance(e, TVar):
        return e.name
    if isinstance(e, TNondet):
        return "nondet()"
    if isinstance(e, TFst):
        return f"fst {ml_expr(e.arg, 9)}"
    if isinstance(e, TSnd):
        return f"snd {ml_expr(e.arg, 9)}"
    if isinstance(e, TTuple):
        return "(" + ", ".join(ml_expr(x) for x in e.items) + ")"
    if isinstance(e, TBin):
        if e.op in COMPARISONS:
            return f"(if {ml_cond(e)} then 0 else 1)"
        p = _ML_PREC[e.op]
        text = f"{ml_expr(e.left, p)} {e.op} {ml_expr(e.right, p + 1)}"
        return f"({text})" if p < prec else text
    if isinstance(e, TCall):
        if not e.args:
            return f"{e.func} ()"
        return f"{e.func} " + " ".join(ml_expr(x, 9) for x in e.args)
    raise TypeError(f"not an expression: {e!r}")


def ml_cond(e, prec: int = 0) -> str:
    """A boolean that holds when e evaluates to 0."""
    if isinstance(e, TBin) and e.op in COMPARISONS:
        p = _ML_PREC[e.op]
        if e.op == "&&":
            text = f"{ml_cond(e.left, p)} && {ml_cond(e.right, p + 1)}"
        else:
            text = f"{ml_expr(e.left, p + 1)} {e.op} {ml_expr(e.right, p + 1)}"
        return f"({text})" if p < prec else text
    return f"{ml_expr(e, 3)} = 0"


def _ml_pat(p) -> str:
    return pat_str(p)


def _is_unit(t) -> bool:
    return isinstance(t, TRet) and t.value == TNum(0)


def _ml_lines(t, ind: str, out: list[str], main: bool) -> None:
    while True:
        if isinstance(t, TLet):
            out.append(f"{ind}let {_ml_pat(t.pat)} = {ml_expr(t.rhs)} in")
            t = t.body
        elif isinstance(t, TAssume):
            out.append(f"{ind}assume ({ml_expr(t.left)}) ({ml_expr(t.right)});")
            t = t.body
        elif isinstance(t, TIf):
            if isinstance(t.els, TFail):
                if main and _is_unit(t.then):
                    out.append(f"{ind}assert ({ml_cond(t.cond)})")
                    return
                out.append(f"{ind}assert ({ml_cond(t.cond)});")
                t = t.then
                continue
            out.append(f"{ind}if {ml_cond(t.cond)} then (")
            _ml_lines(t.then, ind + "  ", out, main)
            out.append(f"{ind}) else (")
            _ml_lines(t.els, ind + "  ", out, main)
            out.append(f"{ind})")
            return
        elif isinstance(t, TFail):
            out.append(f"{ind}assert false")
            return
        elif isinstance(t, TRet):
            out.append(f"{ind}{'()' if main and _is_unit(t) else ml_expr(t.value)}")
            return
        else:
            raise TypeError(f"not a term: {t!r}")


def emit_ml(p: TProgram, inline: bool = True) -> str:
    if inline:
        p = inline_temps(p)
    parts = [ML_PREAMBLE]
    for f in p.funs:
        params = " ".join(f.params) if f.params else "()"
        lines: list[str] = []
        _ml_lines(f.body, "  ", lines, False)
        parts.append(f"let rec {f.name} {params} =\n" + "\n".join(lines) + "\n")
    lines = []
    _ml_lines(p.main, "  ", lines, True)
    head = "let main " + " ".join(p.main_params) + " =" if p.main_params else "let main ="
    parts.append(head + "\n" + "\n".join(lines) + "\n")
    return "\n".join(parts)


# ---------------------------------------------------------------- s-expressions

def sexp_expr(e) -> str:
    if isinstance(e, TNum):
        return str(e.value)
    if isinstance(e, TVar):
        return e.name
    if isinstance(e, TNondet):
        return f"(nondet {e.kind})"
    if isinstance(e, TFst):
        return f"(fst {sexp_expr(e.arg)})"
    if isinstance(e, TSnd):
        return f"(snd {sexp_expr(e.arg)})"
    if isinstance(e, TTuple):
        return "(tuple" + "".join(" " + sexp_expr(x) for x in e.items) + ")"
    if isinstance(e, TBin):
        return f"({e.op} {sexp_expr(e.left)} {sexp_expr(e.right)})"
    if isinstance(e, TCall):
        return f"(call {e.func}" + "".join(" " + sexp_expr(x) for x in e.args) + ")"
    raise TypeError(f"not an expression: {e!r}")


def sexp_pat(p) -> str:
    if isinstance(p, tuple):
        return "(tuple" + "".join(" " + sexp_pat(q) for q in p) + ")"
    return p


def sexp_term(t, ind: str = "") -> str:
    # straight-line chains stay flat: one binding per line, closing parens at the end
    lines, closers = [], 0
    while isinstance(t, (TLet, TAssume)):
        if isinstance(t, TLet):
            lines.append(f"{ind}(let {sexp_pat(t.pat)} {sexp_expr(t.rhs)}")
        else:
            lines.append(f"{ind}(assume {sexp_expr(t.left)} {sexp_expr(t.right)}")
        closers += 1
        t = t.body
    if isinstance(t, TIf):
        lines.append(f"{ind}(ifz {sexp_expr(t.cond)}")
        lines.append(sexp_term(t.then, ind + "  "))
        lines.append(sexp_term(t.els, ind + "  ") + ")")
    elif isinstance(t, TFail):
        lines.append(f"{ind}(fail)")
    elif isinstance(t, TRet):
        lines.append(f"{ind}(ret {sexp_expr(t.value)})")
    else:
        raise TypeError(f"not a term: {t!r}")
    return "\n".join(lines) + ")" * closers


def emit_sexp(p: TProgram) -> str:
    out = [SEXP_HEADER]
    for f in p.funs:
        out.append(f"(fun {f.name} ({' '.join(f.params)})\n{sexp_term(f.body, '  ')})")
    out.append(f"(main ({' '.join(p.main_params)})\n{sexp_term(p.main, '  ')})")
    return "\n".join(out) + "\n"


def emit(p: TProgram, fmt: str = "ml") -> str:
    if fmt == "ml":
        return emit_ml(p)
    if fmt == "sexp":
        return emit_sexp(p)
    if fmt == "tgt":
        return program_str(p)
    raise ValueError(f"unknown format {fmt!r}")


__all__ = ["emit", "emit_ml", "emit_sexp", "ml_expr", "ml_cond", "ML_PREAMBLE", "SEXP_HEADER"]
