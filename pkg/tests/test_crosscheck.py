from __future__ import annotations

from conftest import explored, typed

from bfo.checker import check_program
from bfo.crosscheck import crosscheck, shrink
from bfo.parser import parse


def test_borrow_demo_passes():
    rep = crosscheck(typed("rusthorn-demo.bfo"), streams=20)
    assert rep.ok and not rep.source_failed
    assert not rep.explore.fail_reachable
    assert all(s.result.consistent for s in rep.streams)


def test_unsafe_minmax_fails_in_both():
    rep = crosscheck(typed("table/minmax-unsafe.bfo"), streams=30,
                     explored=explored("table/minmax-unsafe.bfo"))
    assert rep.ok and rep.source_failed and rep.explore.fail_reachable


def test_constant_program_passes_vacuously():
    rep = crosscheck(check_program(parse("let x = 0 in x")), streams=5)
    assert rep.ok and len(rep.streams) == 5 and rep.counterexample is None


def test_given_stream_is_used_once():
    rep = crosscheck(typed("table/inc-max-unsafe.bfo"), havoc=[-1, 2])
    assert [s.havoc for s in rep.streams] == [[-1, 2]]
    assert rep.source_failed


def test_report_json_shape():
    j = crosscheck(typed("consort-demo.bfo"), streams=2).to_json()
    assert set(j) == {"ok", "streams", "consistent_streams", "source_failed", "explore", "problems",
                      "counterexample"}
    assert j["consistent_streams"] == 2 and j["streams"][0]["seed"] == 0


def test_shrink_removes_entries_greedily():
    bad = lambda h: 3 in h and 5 in h  # noqa: E731
    assert shrink(bad, [1, 3, 2, 5, 4]) == [3, 5]
    assert shrink(lambda h: True, [1, 2]) == []
    assert shrink(lambda h: len(h) == 2, [7, 8]) == [7, 8]


def test_missing_fail_is_a_problem():
    unsafe = typed("table/inc-max-unsafe.bfo")
    safe_view = explored("table/inc-max-safe.bfo")
    rep = crosscheck(unsafe, streams=25, explored=safe_view)
    assert rep.source_failed and not rep.ok
    assert "exploration finds no reachable fail" in rep.problems[-1]
