from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from strategies import batches, endings, fractions, lifetime_envs, own_types, ref_types, wf_envs

from bfo.errors import AddError, LftError
from bfo.ownership import (
    INT, FnType, LifetimeEnv, RefType, add_types, end_lifetime, env_add, env_well_formed, format_frac, frac,
    lift_type, own, ownership_metrics, ref, split_type, well_formed,
)
from bfo.parser import type_from_text

HALF = Fraction(1, 2)
# The acceptance suite runs the same checks at 10^4 cases each.
MANY = settings(max_examples=100, deadline=None)


# ---------------------------------------------------------------- examples

def test_int_plus_int():
    assert add_types(INT, INT) == INT


def test_lending_half_then_merging_back():
    assert add_types(ref("α", HALF, "β", HALF), ref("β", HALF)) == ref("α", 1)


def test_sharing_adds_both_fractions():
    a = ref("α", "0.4", "β", "0.1")
    b = ref("α", "0.2", "β", "0.1")
    assert add_types(a, b) == ref("α", "0.6", "β", "0.2")


def test_sum_over_one_is_rejected():
    with pytest.raises(AddError):
        add_types(ref("α", 1), ref("α", HALF))


def test_int_and_ref_do_not_add():
    with pytest.raises(AddError):
        add_types(INT, ref("α", 0))


def test_split_by_full_borrow_gives_the_borrower():
    assert split_type(ref("α", 1), ref("α", 0, "β", 1)) == ref("β", 1)


def test_split_int():
    assert split_type(INT, INT) == INT


def test_split_by_everything_leaves_zero():
    assert split_type(ref("α", 1), ref("α", 1)) == ref("α", 0)


def test_env_add_passes_through_missing_variables():
    assert env_add({"x": INT}, {}) == {"x": INT}
    assert env_add({}, {"x": INT}) == {"x": INT}


def test_env_add_merges_halves():
    assert env_add({"x": ref("α", HALF)}, {"x": ref("α", HALF)}) == {"x": ref("α", 1)}


def test_env_add_over_one_fails():
    with pytest.raises(AddError):
        env_add({"x": ref("α", 1)}, {"x": ref("α", HALF)})


def test_zero_lend_is_no_lend():
    assert RefType("α", HALF, None) == ref("α", HALF, "β", 0)


def test_fractions_are_exact():
    assert frac("1/3") * 3 == 1
    assert frac("0.1") + frac("0.2") == frac("0.3")
    assert format_frac(Fraction(1, 3)) == "1/3" and format_frac(HALF) == "0.5"


def test_type_syntax():
    assert type_from_text("ref<α, 1/2 lend β: 0.5>") == ref("α", HALF, "β", HALF)
    assert type_from_text("int") == INT


L_BA = LifetimeEnv(["α", "β"], [("β", "α")])


def test_int_is_well_formed_anywhere():
    assert well_formed(LifetimeEnv(), INT)


def test_lending_to_a_longer_lifetime_is_ill_formed():
    assert not well_formed(L_BA, ref("β", HALF, "α", HALF))
    assert well_formed(L_BA, ref("α", HALF, "β", HALF))


def test_lend_plus_own_over_one_is_ill_formed():
    assert not well_formed(L_BA, ref("α", "0.7", "β", "0.4"))


def test_unknown_lifetime_is_ill_formed():
    assert not well_formed(LifetimeEnv(["α"]), ref("β", 1))


def test_ending_the_borrow_returns_ownership():
    L, G = end_lifetime(L_BA, {"x": ref("α", 0, "β", 1), "y": ref("β", 1)}, "β")
    assert G == {"x": ref("α", 1)}
    assert L == LifetimeEnv(["α"])


def test_ending_an_unused_lifetime_keeps_the_environment():
    L0 = LifetimeEnv(["α", "γ"])
    G0 = {"x": ref("α", 1), "n": INT}
    L, G = end_lifetime(L0, G0, "γ")
    assert G == G0 and L == LifetimeEnv(["α"])


def test_only_minimal_lifetimes_end():
    with pytest.raises(LftError) as ei:
        end_lifetime(L_BA, {}, "α")
    assert ei.value.code == "NotMinimal"
    with pytest.raises(LftError) as ei:
        end_lifetime(L_BA, {}, "δ")
    assert ei.value.code == "Unknown"


def test_order_is_transitively_closed_and_acyclic():
    L = LifetimeEnv(["a", "b", "c"], [("a", "b"), ("b", "c")])
    assert L.lt("a", "c")
    with pytest.raises(LftError):
        LifetimeEnv(["a", "b"], [("a", "b"), ("b", "a")])


def test_new_lifetime_goes_below_all():
    L = LifetimeEnv(["α"]).add_min("β")
    assert L.lt("β", "α") and L.minimal() == ["β"]


def test_metrics_single_binding():
    m = ownership_metrics({"x": ref("α", 1)}, {"x": 7}, 7)
    assert m.own == 1 and not m.bby and not m.bfrm


def test_metrics_mid_borrow():
    G = {"x": ref("α", 0, "β", 1), "y": ref("β", 1)}
    m = ownership_metrics(G, {"x": 1, "y": 1}, 1)
    assert m.own == 1
    assert m.bby == {"β": 1}
    assert m.brr == {("α", "β"): 1}
    assert m.borrow_consistent()


def test_metrics_are_per_address():
    G = {"x": ref("α", 1), "y": ref("α", HALF)}
    R = {"x": 1, "y": 2}
    assert ownership_metrics(G, R, 1).own == 1
    assert ownership_metrics(G, R, 2).own == HALF


def test_metrics_report_overlapping_ownership():
    m = ownership_metrics({"x": ref("α", 1), "z": ref("α", 1)}, {"x": 0, "z": 0}, 0)
    assert m.violations() == ["ownership sum 2 exceeds 1"]


def test_function_types_only_mention_declared_lifetimes():
    with pytest.raises(LftError):
        FnType(("α",), frozenset(), (ref("β", 1),), (ref("β", 1),), INT)


# ---------------------------------------------------------------- properties
# Each example checks a batch of BATCH cases.

def _add(a, b):
    try:
        return add_types(a, b)
    except AddError:
        return None


def addition_commutes(pairs):
    for a, b in pairs:
        assert _add(a, b) == _add(b, a)


def split_undoes_add(pairs):
    for a, b in pairs:
        whole = _add(a, b)
        if whole is not None:
            assert add_types(a, split_type(whole, a)) == whole


def split_result_adds_back(pairs):
    for whole, left in pairs:
        try:
            right = split_type(whole, left)
        except AddError:
            continue
        assert add_types(left, right) == whole


def ending_conserves_ownership(cases):
    for L, G, a in cases:
        _, G2 = end_lifetime(L, G, a)
        for x, t in G.items():
            if isinstance(t, RefType) and t.lft == a:
                assert x not in G2
                continue
            returned = t.lend.amount if isinstance(t, RefType) and t.lend and t.lend.lft == a else 0
            assert own(G2[x]) == own(t) + returned


def ending_keeps_well_formedness(cases):
    for L, G, a in cases:
        assert env_well_formed(L, G)
        L2, G2 = end_lifetime(L, G, a)
        assert env_well_formed(L2, G2)


PAIRS = batches(st.tuples(own_types, own_types))
ENDINGS = batches(endings())

test_addition_commutes = MANY(given(PAIRS)(addition_commutes))
test_split_undoes_add = MANY(given(PAIRS)(split_undoes_add))
test_split_result_adds_back = MANY(given(PAIRS)(split_result_adds_back))
test_ending_a_lifetime_conserves_ownership = MANY(given(ENDINGS)(ending_conserves_ownership))
test_ending_a_lifetime_keeps_well_formedness = MANY(given(ENDINGS)(ending_keeps_well_formedness))


@settings(max_examples=250, deadline=None)
@given(batches(st.tuples(*[ref_types(lfts=("α",))] * 3)))
def test_sharing_addition_associates(triples):
    for a, b, c in triples:
        ab, bc = _add(a, b), _add(b, c)
        left = _add(ab, c) if ab is not None else None
        right = _add(a, bc) if bc is not None else None
        if left is not None and right is not None:
            assert left == right


@settings(max_examples=1_000, deadline=None)
@given(wf_envs())
def test_well_formed_types_keep_within_one(LG):
    L, G = LG
    m = ownership_metrics(G, {x: 0 for x in G}, 0)
    assert all(v > 0 for v in m.bby.values())
    for t in G.values():
        if isinstance(t, RefType):
            assert t.own + t.lent <= 1
            if t.lend:
                assert L.lt(t.lend.lft, t.lft)


@settings(max_examples=1_000, deadline=None)
@given(lifetime_envs())
def test_orders_are_strict(L):
    for a, b in L.below:
        assert a != b and not L.lt(b, a)
        for c, d in L.below:
            if b == c:
                assert L.lt(a, d)


@settings(max_examples=1_000, deadline=None)
@given(fractions, fractions)
def test_lift_returns_lent_amount(r, s):
    assume(0 < s and r + s <= 1)
    assert lift_type(ref("α", r, "β", s), "β") == ref("α", r + s)
