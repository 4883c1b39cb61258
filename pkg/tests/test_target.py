from __future__ import annotations

import random

import pytest
from conftest import checked_sources, rel, source, target
from gen import random_program
from hypothesis import given, settings
from hypothesis import strategies as st

from bfo.emit import ML_PREAMBLE, SEXP_HEADER, emit
from bfo.errors import ParseError, ProjectionError
from bfo.interp import Havoc
from bfo.normalize import normal_text
from bfo.target import program_str
from bfo.tparse import parse_target
from bfo.tsemantics import (
    DONE, FAIL, INFEASIBLE, RUNNING, TargetConfig, initial_config, parse_domain, run_target, step_target,
)


def run_set(p, domain, limit=200):
    """All terminal configurations of the register-set semantics."""
    todo, out = [initial_config(p, domain)], []
    while todo:
        c = todo.pop()
        if c.status != RUNNING:
            out.append(c)
            continue
        nxt = step_target(p, c, domain)
        assert len(nxt) <= 2
        todo.extend(nxt)
        limit -= 1
        assert limit > 0
    return out


def regs(c):
    return sorted(tuple(sorted(r)) for r in c.regs)


def test_assume_keeps_the_agreeing_registers():
    p = parse_target("let x = 1 in let y = _ in assume(x = y); 0")
    c = initial_config(p, (1, 2))
    c = step_target(p, c, (1, 2))[0]
    c = step_target(p, c, (1, 2))[0]
    assert regs(c) == [(("x", 1), ("y", 1)), (("x", 1), ("y", 2))]
    [c] = step_target(p, c, (1, 2))
    assert regs(c) == [(("x", 1), ("y", 1))]


def test_nondet_multiplies_registers_by_the_domain():
    p = parse_target("let x = _ in let y = _ in 0")
    c = step_target(p, initial_config(p, (0, 1)), (0, 1))[0]
    assert len(c.regs) == 2
    c = step_target(p, c, (0, 1))[0]
    assert len(c.regs) == 4


def test_unsatisfiable_assume_is_infeasible():
    p = parse_target(source("nondet-assume.tgt"))
    [end] = run_set(p, (-2, -1, 0, 1, 2))
    assert end.status == INFEASIBLE and not end.regs
    statuses = {c.status for c in run_set(p, (2, 3))}
    assert statuses == {DONE}


def test_both_branches_can_fire():
    p = parse_target("let x = _ in ifz x then 0 else fail")
    c = step_target(p, initial_config(p, (0, 1)), (0, 1))[0]
    succ = step_target(p, c, (0, 1))
    assert len(succ) == 2
    assert {len(s.regs) for s in succ} == {1}


def test_arithmetic_is_per_register():
    p = parse_target("let x = _ in let y = x + 1 in y")
    ends = run_set(p, (0, 1))
    [end] = ends
    assert end.status == DONE and end.values == frozenset({1, 2})


def test_projection_of_a_scalar_is_an_error():
    p = parse_target("let x = 1 in let y = fst x in y")
    c = step_target(p, initial_config(p, (0,)), (0,))[0]
    with pytest.raises(ProjectionError):
        step_target(p, c, (0,))


def test_fail_term_fails():
    assert {c.status for c in run_set(parse_target("fail"), (0,))} == {FAIL}


def test_calls_rename_bound_variables():
    p = parse_target("fn f(a) { let b = a + 1 in b }\nlet b = 5 in let c = f(b) in let d = f(c) in b + d")
    [end] = run_set(p, (0,))
    assert end.status == DONE and end.values == frozenset({12})


def test_single_register_run():
    res = run_target(parse_target("let x = _ in let y = _ in x - y"), Havoc(values=[5, 2]))
    assert res.status == DONE and res.value == 3 and res.choices == [5, 2]


def test_domain_syntax():
    assert parse_domain("-2..2") == (-2, -1, 0, 1, 2)
    assert parse_domain("0,1") == (0, 1)
    with pytest.raises(ValueError):
        parse_domain("a..b")


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False))
def test_register_sets_only_shrink_under_assume_and_if(rng):
    p = random_program(rng, recursive=False)
    domain = (0, 1)
    todo = [initial_config(p, domain)]
    budget = 300
    while todo and budget:
        budget -= 1
        c = todo.pop()
        if c.status != RUNNING:
            continue
        for n in step_target(p, c, domain):
            kind = type(c.term).__name__
            if kind in ("TAssume", "TIf") and c.stack == n.stack:
                assert n.regs <= c.regs
            todo.append(n)


# ---------------------------------------------------------------- emitters and parsers

def test_ml_preamble_is_the_blocking_assume():
    text = emit(parse_target("fail"), "ml")
    assert text.startswith(ML_PREAMBLE)
    assert "let rec assume x n =\n  if x = n then () else assume x n" in text
    assert "assert false" in text


def test_ml_uses_nondet_for_choices():
    assert "nondet()" in emit(parse_target("let x = _ in x"), "ml")


def test_sexp_is_versioned():
    assert emit(parse_target("fail"), "sexp").startswith(SEXP_HEADER)


def test_borrow_demo_emits_like_its_reference():
    ml = emit(target("rusthorn-demo.bfo"), "ml")
    ours = normal_text(parse_target(ml))
    assert ours == normal_text(parse_target(source("rusthorn-demo.expected.tgt")))


@pytest.mark.parametrize("entry", checked_sources(), ids=rel)
def test_text_round_trip(entry):
    p = target(rel(entry))
    s = program_str(p)
    assert program_str(parse_target(s)) == s
    assert program_str(parse_target(emit(p, "sexp"))) == s
    assert normal_text(parse_target(emit(p, "ml"))) == normal_text(p)


def test_style_detection():
    assert parse_target("let main = assert false", style="auto") == parse_target("fail")


def test_target_parse_error():
    with pytest.raises(ParseError):
        parse_target("let x = in 0")


def test_random_programs_round_trip():
    for seed in range(50):
        p = random_program(random.Random(seed))
        assert program_str(parse_target(emit(p, "sexp"))) == program_str(p)


def test_config_equality_ignores_the_fresh_counter():
    p = parse_target("0")
    c = initial_config(p, (0,))
    assert c == TargetConfig(c.regs, c.stack, c.term, c.status, c.values, fresh=99)
