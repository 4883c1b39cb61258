"""One test per acceptance criterion, each with its time budget."""

from __future__ import annotations

import random
import time
from contextlib import contextmanager

import pytest
from conftest import ENTRIES, checked_sources, rel, source
from gen import random_program
from hypothesis import given, settings
from test_ownership import (
    ENDINGS, PAIRS, addition_commutes, ending_conserves_ownership, ending_keeps_well_formedness, split_undoes_add,
)

from bfo.audit import audit_run
from bfo.checker import check_program, line_envs
from bfo.corpus import env_expectations, safe_programs
from bfo.errors import TypeCheckError
from bfo.explore import explore
from bfo.interp import FAIL, Havoc
from bfo.normalize import normal_text
from bfo.oracle import oracle_run
from bfo.parser import parse
from bfo.tparse import parse_target
from bfo.translate import translate_program
from bfo.tsemantics import DEFAULT_DOMAIN

STREAMS = 100
STEPS = 10_000


@contextmanager
def budget(seconds: float):
    t0 = time.perf_counter()
    yield
    took = time.perf_counter() - t0
    assert took < seconds, f"took {took:.1f}s, budget {seconds}s"


def test_typing_goldens():
    with budget(1):
        for e in [e for e in ENTRIES if e.env_comments]:
            text = e.text()
            envs = line_envs(check_program(parse(text)))
            for ex in env_expectations(text):
                G = envs[ex.line]
                for x, t in ex.bindings.items():
                    assert G.get(x) == t, f"{e.name} line {ex.line}: {x}"
                for x in ex.disposed:
                    assert x not in G, f"{e.name} line {ex.line}: {x}"
        with pytest.raises(TypeCheckError) as ei:
            check_program(parse(source("cyclic-borrow.bfo")))
        assert ei.value.code == "LifetimeOrderViolation" and ei.value.pos[0] == 6


def test_translation_goldens():
    """Fails: three reference listings cannot be reproduced (see the decisions ledger)."""
    mismatched = []
    with budget(1):
        pairs = sorted({(rel(e), e.golden) for e in ENTRIES if e.golden})
        pairs += [(rel(e), p) for e in ENTRIES for p in e.listings]
        for src, ref in pairs:
            ours = normal_text(translate_program(check_program(parse(source(src)))))
            if ours != normal_text(parse_target(ref.read_text(encoding="utf-8"))):
                mismatched.append(ref.name)
    assert not mismatched, f"{len(mismatched)}/{len(pairs)} references differ: {mismatched}"


def test_audit_of_safe_programs():
    with budget(30):
        for e in safe_programs():
            tp = check_program(parse(e.text()))
            for s in range(STREAMS):
                _, report = audit_run(tp, Havoc(seed=s), fuel=STEPS, collect=True)
                assert not report.violations, f"{e.name} stream {s}: {report.violations[0].message}"
        tp = check_program(parse(source("cyclic-borrow.bfo")), unchecked=True)
        _, report = audit_run(tp, collect=True)
        [v] = report.violations
        assert v.kind == "fraction" and v.details["own_sum"] == 2 and "Rs-Endlft" in v.message


def test_differential_suite():
    with budget(120):
        for path in sorted({rel(e) for e in ENTRIES}):
            entries = [e for e in ENTRIES if rel(e) == path]
            e = entries[0]
            if not e.is_source:
                r = explore(parse_target(e.text()), DEFAULT_DOMAIN, 64)
                assert r.fail_reachable == bool(e.fail_reachable), path
                continue
            if not e.checks:
                continue
            tp = check_program(parse(e.text()))
            tgt = translate_program(tp)
            failed = False
            for s in range(STREAMS):
                r = oracle_run(tp, tgt, Havoc(seed=s), fuel=STEPS)
                assert r.consistent, f"{path} stream {s}: {r.divergence}"
                failed |= r.source_status == FAIL
            safe = all(x.safety != "unsafe" for x in entries)
            if failed or safe:
                x = explore(tgt, DEFAULT_DOMAIN, 64)
                if failed:
                    assert x.fail_reachable and x.witness is not None, path
                if safe:
                    assert not x.fail_reachable, path


def test_type_algebra_properties():
    cases = settings(max_examples=500, deadline=None)  # 500 batches of 20 = 10^4 cases
    with budget(60):
        for prop, strat in [(addition_commutes, PAIRS), (split_undoes_add, PAIRS),
                            (ending_conserves_ownership, ENDINGS), (ending_keeps_well_formedness, ENDINGS)]:
            cases(given(strat)(prop))()
        for seed in range(20):
            p = random_program(random.Random(seed))
            if explore(p, (0, 1)).fail_reachable:
                assert explore(p, DEFAULT_DOMAIN).fail_reachable, seed


def test_expressiveness_matrix():
    table = [e for e in ENTRIES if e.group == "table"]
    covered = {(e.consort, e.rusthorn) for e in table}
    assert {(True, False), (False, True), (False, False)} <= covered
    for e in table:
        check_program(parse(e.text()))
    assert {e.program for e in table if not e.consort and not e.rusthorn} >= {"borrow-merge", "minmax"}
    assert checked_sources()
