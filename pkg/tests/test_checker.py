from __future__ import annotations

import pytest
from conftest import ENTRIES, checked_sources, rel, source

from bfo.checker import check_program, dump_env, line_envs
from bfo.corpus import env_expectations
from bfo.errors import TypeCheckError
from bfo.ownership import INT, env_well_formed, ref
from bfo.parser import parse
from bfo.syntax import LetCall, Program, Var

ENV_FILES = [rel(e) for e in ENTRIES if e.env_comments]

MINMAX_CALL_ORDER = (
    "fn f<α, β; β < α>(x: ref<α,1>, y: ref<β,1>) -> int { 0 }\n"
    "newlft β in newlft α in let x = mkref 0 as ref<α,1> in let y = mkref 0 as ref<β,1> in "
    "let r = f<α, β>(x, y) in endlft α; endlft β"
)


def code_of(text: str) -> str:
    with pytest.raises(TypeCheckError) as ei:
        check_program(parse(text))
    return ei.value.code


@pytest.mark.parametrize("name", ENV_FILES)
def test_environment_comments_are_reproduced(name):
    text = source(name)
    envs = line_envs(check_program(parse(text)))
    expectations = env_expectations(text)
    assert expectations
    for ex in expectations:
        G = envs[ex.line]
        for x, t in ex.bindings.items():
            assert G.get(x) == t, f"line {ex.line}: {x}"
        for x in ex.disposed:
            assert x not in G, f"line {ex.line}: {x} should be gone"


def test_dump_env_uses_comment_notation():
    out = dump_env(check_program(parse(source("rusthorn-demo-typed.bfo"))), source("rusthorn-demo-typed.bfo"))
    assert "let y = x borrow β in  // x:ref<α,0 lend β:1>, y:ref<β,1>" in out
    assert "endlft β;  // x:ref<α,1>" in out


def test_alias_splits_evenly():
    envs = line_envs(check_program(parse(source("consort-demo-typed.bfo"))))
    assert {x: t for x, t in envs[7].items() if not x.startswith("__")} == \
        {"x": ref("α", "0.5"), "y": ref("α", "0.5")}


@pytest.mark.parametrize("entry", checked_sources(), ids=rel)
def test_corpus_programs_check(entry):
    check_program(parse(entry.text()))


def test_cyclic_borrow_is_rejected_at_the_second_borrow():
    with pytest.raises(TypeCheckError) as ei:
        check_program(parse(source("cyclic-borrow.bfo")))
    assert ei.value.code == "LifetimeOrderViolation"
    assert ei.value.pos[0] == 6


def test_full_ownership_assignment():
    check_program(parse("newlft α in let x = mkref 0 in let y = x in y := 1; endlft α"))


def test_half_ownership_cannot_assign():
    assert code_of("newlft α in let x = mkref 0 in let y = x as ref<α,0.5> in y := 1; endlft α") \
        == "OwnershipInsufficient"


def test_identity_function():
    tp = check_program(parse("fn id(x: int) -> int { x }\nlet a = 1 in let b = id(a) in b"))
    assert tp.fn_types["id"].params == (INT,)


def test_constant_main():
    check_program(parse("let x = 0 in x"))


def test_minmax_signature():
    tp = check_program(parse(source("minmax-typed.bfo")))
    ft = tp.fn_types["minmax"]
    assert ft.posts == (ref("α", "0.5", "β", "0.5"),) * 2
    assert ft.ret == (ref("β", "0.5"), ref("β", "0.5"))


def test_post_type_that_ignores_the_loan_is_rejected():
    text = source("minmax-typed.bfo").replace("x: ref<α,1> -> ref<α,0.5 lend β:0.5>", "x: ref<α,1> -> ref<α,1>")
    assert code_of(text) == "PostEnvMismatch"


def test_arity():
    assert code_of("fn id(x: int) -> int { x }\nlet a = 1 in let b = id(a, a) in b") == "ArityMismatch"


def test_lifetimes_end_innermost_first():
    assert code_of("newlft α in newlft β in endlft α; endlft β") == "LifetimeNotMinimal"


def test_dropped_reference_is_out_of_scope():
    assert code_of("newlft α in let x = mkref 0 in endlft α; let y = *x in y") == "UnboundVariable"


def test_branches_must_agree():
    text = ("fn f<α>(x: ref<α,1> -> ref<α,1>) -> int { "
            "let c = _ in ifz c then (let y = x as ref<α,0.5> in 0) else 0 }\n0")
    assert code_of(text) == "BranchEnvMismatch"


def test_call_order_must_be_entailed():
    assert code_of(MINMAX_CALL_ORDER) == "CallOrderNotEntailed"


def test_unknown_function_in_a_built_tree():
    p = Program((), LetCall(("r",), "g", None, (), Var("r", nid=2), nid=1))
    with pytest.raises(TypeCheckError) as ei:
        check_program(p)
    assert ei.value.code == "UnknownFunction"


def test_lifetimes_must_end_before_main_returns():
    assert code_of("newlft α in 0") == "PostEnvMismatch"


def test_unchecked_mode_records_instead_of_rejecting():
    tp = check_program(parse(source("cyclic-borrow.bfo")), unchecked=True)
    assert [code for _, code, _ in tp.problems] == ["LifetimeOrderViolation"]


# ---------------------------------------------------------------- invariants over the corpus

@pytest.mark.parametrize("entry", checked_sources(), ids=rel)
def test_every_snapshot_is_well_formed(entry):
    tp = check_program(parse(entry.text()))
    for L, G in tp.evidence.env.values():
        assert env_well_formed(L, G)


@pytest.mark.parametrize("entry", checked_sources(), ids=rel)
def test_rechecking_reproduces_the_evidence(entry):
    a = check_program(parse(entry.text()))
    b = check_program(a.program)
    assert a.evidence.env == b.evidence.env
    assert a.fn_types == b.fn_types
