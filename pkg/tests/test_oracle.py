from __future__ import annotations

import dataclasses

import pytest
from conftest import checked_sources, rel, target, typed
from hypothesis import given, settings
from hypothesis import strategies as st

from bfo.checker import check_program
from bfo.interp import DONE, FAIL, Havoc
from bfo.oracle import oracle_run
from bfo.parser import parse
from bfo.target import TAssume, TIf, TLet, TNum, TProgram


def map_terms(p: TProgram, f) -> TProgram:
    """Rebuild p bottom-up with f applied to each term; source links are kept."""
    def go(t):
        if isinstance(t, (TLet, TAssume)):
            t = dataclasses.replace(t, body=go(t.body))
        elif isinstance(t, TIf):
            t = dataclasses.replace(t, then=go(t.then), els=go(t.els))
        return f(t)
    return TProgram(tuple(dataclasses.replace(fn, body=go(fn.body)) for fn in p.funs), go(p.main), p.main_params)


def test_borrow_demo_resolves_the_prophecy_to_the_written_value():
    r = oracle_run(typed("rusthorn-demo.bfo"))
    assert r.consistent and r.source_status == DONE and r.target_status == DONE
    assert r.prophecies == {0: 1, 1: 1}
    assert r.syncs > 0


def test_program_without_references_is_consistent():
    r = oracle_run(check_program(parse("let a = _ in let b = a + 1 in b")), havoc=Havoc(values=[4]))
    assert r.consistent and r.prophecies == {} and r.havoc == [4]


@pytest.mark.parametrize("k", [0, 1])
def test_corrupted_prophecy_breaks_its_assume(k):
    r = oracle_run(typed("rusthorn-demo.bfo"), corrupt={k: 1})
    assert not r.consistent
    assert r.target_status == "Infeasible"
    assert r.divergence.startswith("assume failed at `assume(fst")
    assert r.step is not None


def test_source_fail_is_matched_by_target_fail():
    r = oracle_run(typed("table/inc-max-unsafe.bfo"), havoc=Havoc(values=[-1, 2]))
    assert r.consistent and r.source_status == FAIL and r.target_status == FAIL


def test_wrong_written_value_breaks_the_current_value_invariant():
    def bump(t):
        if isinstance(t, TLet) and t.rhs == TNum(1):
            return dataclasses.replace(t, rhs=TNum(2))
        return t
    bad = map_terms(target("rusthorn-demo.bfo"), bump)
    r = oracle_run(typed("rusthorn-demo.bfo"), bad)
    assert not r.consistent
    assert "is 2 in the target but 1 in the source" in r.divergence


def test_dropped_assumes_leave_prophecies_unresolved():
    def drop(t):
        return t.body if isinstance(t, TAssume) else t
    bad = map_terms(target("rusthorn-demo.bfo"), drop)
    r = oracle_run(typed("rusthorn-demo.bfo"), bad)
    assert not r.consistent
    assert r.prophecies == {}


def test_nonterminating_source_is_reported_as_out_of_fuel():
    r = oracle_run(typed("table/simple-loop-safe.bfo"), havoc=Havoc(values=[1]), fuel=300)
    assert r.consistent and r.target_status == "FuelExhausted"


@settings(max_examples=120, deadline=None)
@given(st.sampled_from(checked_sources()), st.lists(st.integers(-2, 2), max_size=10))
def test_every_stream_is_consistent(entry, stream):
    tp = typed(rel(entry))
    r = oracle_run(tp, target(rel(entry)), Havoc(values=stream), fuel=3000)
    assert r.consistent, r.divergence
    if r.source_status == FAIL:
        assert r.target_status == FAIL
    if r.source_status == DONE:
        assert r.target_status == DONE
