from __future__ import annotations

import pytest
from conftest import ENTRIES, checked_sources, rel, source, target, typed

from bfo.checker import check_program
from bfo.interp import Havoc
from bfo.normalize import normal_text
from bfo.ownership import IntType, RefType, ref
from bfo.parser import parse
from bfo.syntax import IfZ, program_nodes
from bfo.target import TAssume, TFst, TIf, TLet, TNondet, TSnd, TTuple, TVar, program_str, program_terms
from bfo.tparse import parse_target
from bfo.translate import conv, translate_program
from bfo.tsemantics import RUNNING, TargetMachine

LISTED = [(rel(e), p) for e in ENTRIES for p in e.listings]
GOLDEN = sorted({(rel(e), e.golden) for e in ENTRIES if e.golden})
# reference listings that drop or reorder source behaviour; see the decisions ledger
UNMATCHED = {"simple-loop", "just-rec", "linger-dec"}


def tr(text: str):
    return translate_program(check_program(parse(text)))


def lets(p):
    return [t for t in program_terms(p) if isinstance(t, TLet)]


def test_mkref_becomes_a_pair_with_a_prophecy():
    p = tr("newlft α in let x = mkref 0 in endlft α; 0")
    [pair] = [t for t in lets(p) if t.pat == "x"]
    assert isinstance(pair.rhs, TTuple)
    assert isinstance(pair.rhs.items[1], TNondet) and pair.rhs.items[1].kind == "prophecy"


def test_reading_without_ownership_draws_a_value():
    text = ("newlft α in let x = mkref 0 in newlft β in let y = x borrow β in "
            "let v = *x in endlft β; endlft α; 0")
    p = tr(text)
    [v] = [t for t in lets(p) if t.pat == "v"]
    assert isinstance(v.rhs, TNondet) and v.rhs.kind == "deref"


def test_reading_with_ownership_takes_the_first_component():
    p = tr("newlft α in let x = mkref 0 in let v = *x in endlft α; 0")
    [v] = [t for t in lets(p) if t.pat == "v"]
    assert v.rhs == TFst(TVar("x"))


def test_ending_a_borrow_assumes_each_dropped_reference():
    lines = [line.strip() for line in program_str(target("minmax-typed.bfo")).splitlines()]
    i = lines.index("assume(fst p = snd p);")
    assert lines[i + 1] == "assume(fst q = snd q);"


# ---------------------------------------------------------------- conversions

HALF = "0.5"


def test_conv_noop_without_ownership():
    assert conv(ref("α", 0), ref("α", 0), ref("α", 1), ref("α", 1), "x", "y") == []


def test_conv_alias_rebalances_by_copying_the_current_value():
    out = conv(ref("α", 0), ref("α", HALF), ref("α", 1), ref("α", HALF), "x", "y")
    assert out == [("x", TTuple((TFst(TVar("y")), TSnd(TVar("x")))))]


def test_conv_giving_everything_away_swaps_in_the_prophecy():
    out = conv(ref("α", 1), ref("α", 0, "β", 1), ref("β", 0), ref("β", 1), "x", "y")
    assert out == [
        ("y", TTuple((TFst(TVar("x")), TSnd(TVar("y"))))),
        ("x", TTuple((TSnd(TVar("y")), TSnd(TVar("x"))))),
    ]


def test_conv_is_symmetric_after_one_swap():
    out = conv(ref("α", 0), ref("α", 1), ref("α", 1), ref("α", 0), "x", "y")
    assert [name for name, _ in out] == ["x", "y"]


def test_borrow_translation_uses_the_swap():
    text = program_str(target("rusthorn-demo.bfo"))
    assert "let y = (fst x, _) in" in text
    assert "let x = (snd y, snd x) in" in text


def test_alias_translation_copies_from_the_other_side():
    assert "let x = (fst y, snd x) in" in program_str(target("consort-demo.bfo"))


def test_peephole_can_be_disabled():
    a = program_str(translate_program(typed("consort-demo.bfo"), peephole=False))
    b = program_str(translate_program(typed("consort-demo.bfo")))
    assert a != b and a.count("(_, _)") > b.count("(_, _)")


# ---------------------------------------------------------------- goldens

@pytest.mark.parametrize("src,golden", GOLDEN, ids=[g.name for _, g in GOLDEN])
def test_figure_translation_matches_reference(src, golden):
    theirs = parse_target(golden.read_text(encoding="utf-8"))
    assert normal_text(target(src)) == normal_text(theirs)


@pytest.mark.parametrize("src,listing", LISTED, ids=[p.name for _, p in LISTED])
def test_reference_listing(src, listing):
    name = listing.stem.replace("-converted", "")
    theirs = normal_text(parse_target(listing.read_text(encoding="utf-8")))
    ours = normal_text(target(src))
    if any(name.startswith(u) for u in UNMATCHED):
        assert ours != theirs, "a known-divergent listing now matches; update the ledger and this test"
    else:
        assert ours == theirs


# ---------------------------------------------------------------- invariants

@pytest.mark.parametrize("entry", checked_sources(), ids=rel)
def test_control_flow_skeleton_is_preserved(entry):
    tp = typed(rel(entry))
    src_ifs = sum(isinstance(n, IfZ) for n in program_nodes(tp.program))
    tgt_ifs = sum(isinstance(t, TIf) for t in program_terms(target(rel(entry))))
    assert src_ifs == tgt_ifs


@pytest.mark.parametrize("entry", checked_sources(), ids=rel)
def test_one_assume_per_dropped_reference(entry):
    tp = typed(rel(entry))
    ev = tp.evidence
    expected = sum(isinstance(ev.env[nid][1][x], RefType) for nid, xs in ev.endlft.items() for x in xs)
    expected += sum(len(r.dropped) for r in ev.ret.values())
    assumes = [t for t in program_terms(target(rel(entry))) if isinstance(t, TAssume)]
    assert len(assumes) == expected
    for nid, xs in ev.endlft.items():
        assert len(xs) == len(set(xs))


class _Shapes:
    """Checks at each term that starts a source node: references are pairs, integers are scalars."""

    def __init__(self, tp):
        self.env = tp.evidence.env
        self.seen = 0

    def on_term(self, m, t):
        if not getattr(t, "head", False) or t.origin not in self.env:
            return
        for x, ty in self.env[t.origin][1].items():
            if x not in m.frame.env:
                continue
            v = m.frame.env[x]
            if isinstance(ty, IntType):
                assert type(v) is int, (x, v)
            else:
                assert isinstance(v, tuple) and len(v) == 2, (x, v)
            self.seen += 1


@pytest.mark.parametrize("entry", checked_sources(), ids=rel)
def test_references_are_pairs_and_integers_scalars(entry):
    tp = typed(rel(entry))
    for seed in range(5):
        shapes = _Shapes(tp)
        m = TargetMachine(target(rel(entry)), Havoc(seed=seed), observers=[shapes])
        while m.status == RUNNING and m.steps < 2000:
            m.step()
        assert shapes.seen > 0


def test_integers_dropped_at_return_generate_nothing():
    p = tr("fn f(x: int) -> int { let y = 1 in x }\nlet a = 2 in let b = f(a) in b")
    assert not any(isinstance(t, TAssume) for t in program_terms(p))
