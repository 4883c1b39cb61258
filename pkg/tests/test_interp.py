from __future__ import annotations

import itertools

import pytest
from conftest import by_name, checked_sources, rel, source, typed
from hypothesis import given, settings
from hypothesis import strategies as st

from bfo.audit import audit_run
from bfo.checker import check_program
from bfo.errors import AuditViolation
from bfo.interp import ALIAS_FAIL, DONE, FAIL, OUT_OF_FUEL, Addr, Havoc, Machine, run
from bfo.parser import parse

SAFE = [e for e in checked_sources() if e.safety != "unsafe"]
STREAM = st.lists(st.integers(-2, 2), max_size=12)


def test_mkref_allocates_a_fresh_cell():
    m = Machine(parse("let x = mkref 0 in let y = mkref 5 in 0"))
    while m.status == "Running":
        m.step()
    assert sorted(m.heap.values()) == [0, 5]
    assert len(set(m.heap)) == 2


def test_alias_of_the_same_cell_continues():
    assert run(parse(source("consort-demo.bfo"))).status == DONE


def test_alias_of_different_cells_is_a_soft_failure():
    p = parse("newlft α in let x = mkref 0 in let y = mkref 0 in alias(x = y); endlft α; 0")
    res = run(p)
    assert res.status == ALIAS_FAIL and res.status != FAIL


def test_shared_cell_demo_reads_two():
    res = run(parse(source("consort-demo.bfo")), trace=True)
    assert res.status == DONE
    assert list(res.heap.values()) == [1]


def test_borrow_demo_passes_its_assert():
    res = run(parse(source("rusthorn-demo.bfo")))
    assert res.status == DONE and list(res.heap.values()) == [1]


def test_fail_fails_in_one_step():
    res = run(parse("fail"))
    assert res.status == FAIL and res.steps == 1


def test_inc_max_fails_exactly_when_the_first_value_is_smaller():
    tp = typed("table/inc-max-unsafe.bfo")
    failing = []
    for a, b in itertools.product(range(-2, 3), repeat=2):
        res = run(tp, Havoc(values=[a, b]))
        assert res.status in (DONE, FAIL)
        if res.status == FAIL:
            failing.append((a, b))
    assert failing == [(a, b) for a, b in itertools.product(range(-2, 3), repeat=2) if a < b]


def test_fuel_bounds_nontermination():
    res = run(typed("table/simple-loop-safe.bfo"), Havoc(values=[1]), fuel=500)
    assert res.status == OUT_OF_FUEL and res.steps == 500


def test_havoc_list_is_padded_with_zeros():
    h = Havoc(values=[3])
    assert [h.next(), h.next(), h.next()] == [3, 0, 0]


def test_seeded_havoc_stays_in_range():
    h = Havoc(seed=9, lo=-1, hi=1)
    assert {h.next() for _ in range(200)} == {-1, 0, 1}


def test_trace_lines_name_the_rule():
    res = run(parse(source("rusthorn-demo.bfo")), trace=True)
    lines = [s.render() for s in res.trace]
    assert "Rs-MkRef" in lines[2] and "addr=@0" in lines[2]
    assert any("Rs-Endlft" in line for line in lines)


@pytest.mark.parametrize("entry", checked_sources(), ids=rel)
def test_same_stream_same_trace(entry):
    tp = typed(rel(entry))
    a = run(tp, Havoc(seed=4), fuel=3000, trace=True)
    b = run(tp, Havoc(values=a.havoc), fuel=3000, trace=True)
    assert [s.render() for s in a.trace] == [s.render() for s in b.trace]
    assert a.heap == b.heap


@settings(max_examples=150, deadline=None)
@given(st.sampled_from(SAFE), STREAM)
def test_well_typed_runs_never_alias_fail_and_heap_holds_integers(entry, stream):
    tp = typed(rel(entry))
    res = run(tp, Havoc(values=stream), fuel=3000)
    assert res.status in (DONE, FAIL, OUT_OF_FUEL)
    assert all(type(v) is int for v in res.heap.values())
    assert not any(isinstance(v, Addr) for v in res.heap.values())


# ---------------------------------------------------------------- audit

def test_shared_cell_never_exceeds_one():
    res, report = audit_run(typed("consort-demo.bfo"))
    assert res.status == DONE and report.checks > 0
    assert report.max_own == 1 and not report.violations


def test_single_reference_stays_at_one():
    _, report = audit_run(check_program(parse("newlft α in let x = mkref 0 in x := 2; endlft α; 0")))
    assert report.max_own == 1 and not report.violations


def test_cyclic_borrow_audit_reports_sum_two():
    tp = check_program(parse(source("cyclic-borrow.bfo")), unchecked=True)
    res, report = audit_run(tp, collect=True)
    assert res.status == DONE
    [v] = report.violations
    assert v.kind == "fraction" and v.details["own_sum"] == 2
    assert "Rs-Endlft" in v.message
    assert {h for h, _ in v.details["holders"]} == {"x", "z"}
    assert by_name("cyclic-borrow").audit_own_sum == 2


def test_audit_raises_when_not_collecting():
    tp = check_program(parse(source("cyclic-borrow.bfo")), unchecked=True)
    with pytest.raises(AuditViolation):
        audit_run(tp)


@settings(max_examples=150, deadline=None)
@given(st.sampled_from(SAFE), STREAM)
def test_audit_is_silent_on_well_typed_programs(entry, stream):
    res, report = audit_run(typed(rel(entry)), Havoc(values=stream), fuel=3000, collect=True)
    assert not report.violations
    assert report.max_own <= 1
