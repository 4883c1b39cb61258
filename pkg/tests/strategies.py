"""Hypothesis strategies for ownership types and environments."""

from __future__ import annotations

from fractions import Fraction

from hypothesis import strategies as st

from bfo.ownership import INT, Lend, LifetimeEnv, RefType

LFTS = ("α", "β", "γ")

_GRID = sorted({Fraction(n, d) for d in (1, 2, 3, 4, 5, 6, 10, 12) for n in range(d + 1)})
fractions = st.sampled_from(_GRID)
positive = st.sampled_from(_GRID[1:])


@st.composite
def ref_types(draw, lfts=LFTS, valid=True):
    lft = draw(st.sampled_from(lfts))
    r = draw(fractions)
    if draw(st.booleans()):
        return RefType(lft, r)
    others = [b for b in lfts if b != lft] or list(lfts)
    s = draw(positive)
    if valid and r + s > 1:
        s = 1 - r
    return RefType(lft, r, Lend(draw(st.sampled_from(others)), s) if s > 0 else None)


own_types = st.one_of(st.just(INT), ref_types())


@st.composite
def lifetime_envs(draw):
    """A random strict order over a subset of the lifetimes, built by adding minimal elements."""
    names = draw(st.permutations(LFTS))
    k = draw(st.integers(1, len(names)))
    L = LifetimeEnv()
    for a in names[:k]:
        if draw(st.booleans()) or not L.lifetimes:
            L = L.add_min(a)
        else:
            L = LifetimeEnv(L.lifetimes | {a}, L.below)
    return L


@st.composite
def wf_envs(draw):
    """(L, G) with G well formed under L."""
    L = draw(lifetime_envs())
    lfts = sorted(L.lifetimes)
    G = {}
    for i in range(draw(st.integers(0, 4))):
        lft = draw(st.sampled_from(lfts))
        if draw(st.booleans()):
            G[f"n{i}"] = INT
            continue
        r = draw(fractions)
        shorter = [b for b in lfts if L.lt(b, lft)]
        lend = None
        if shorter and r < 1 and draw(st.booleans()):
            s = draw(st.sampled_from([q for q in _GRID[1:] if q <= 1 - r]))
            lend = Lend(draw(st.sampled_from(shorter)), s)
        G[f"x{i}"] = RefType(lft, r, lend)
    return L, G


@st.composite
def endings(draw):
    """(L, G, α) with G well formed under L and α minimal in L."""
    L, G = draw(wf_envs())
    return L, G, draw(st.sampled_from(L.minimal()))


BATCH = 20


def batches(strategy):
    """Twenty cases per example: the engine's per-example cost dominates these cheap checks."""
    return st.lists(strategy, min_size=BATCH, max_size=BATCH)
